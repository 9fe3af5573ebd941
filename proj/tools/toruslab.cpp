// toruslab: command-line laboratory for toral automorphisms and their
// volume-preserving perturbations.
//
// Subcommands: check, perturb, conjugate, lyapunov, rigidity, survey.
// Results go to <out>/records.jsonl (one self-describing object per line),
// the resolved configuration is echoed to <out>/config_resolved.json before
// any computation, and timestamps live in <out>/run_meta.json so records
// stay byte-identical across reruns.
//
// Exit codes: 0 success, 1 hypothesis/experiment verdict negative,
// 2 usage/parse error, 3 numerical failure.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>

#include "toruslab/records.hpp"

namespace fs = std::filesystem;
using namespace toruslab;
using records::json;

namespace {

struct Config {
  std::string matrix_file;
  std::string preset = "conjugated-cat";
  std::string map_file;
  double epsilon = -1;  // -1: preset default
  int grid_n = 256;
  double tau = 1e-9;
  int orbit_n_max = 30;
  int orbit_samples = 100;
  long long lyap_n = 100000;
  int lyap_samples = 100;
  std::uint64_t seed = 1;
  double beta = 0.5;
  bool beta_sweep = false;
  std::vector<double> scales;          // default: dyadic from the grid floor
  int holder_pairs = 80;
  int max_period = 4;
  int survey_dim = 2;
  std::vector<long long> survey_T{3, 6, 12, 24};
  std::string survey_mode = "enumerate";
  int survey_n = 2000;
  int mix_steps = 20;
  std::string out_dir = "out";
  int threads = 1;
  int precision_bits = 106;

  json resolved() const {
    return json{{"matrix_file", matrix_file},
                {"preset", preset},
                {"map_file", map_file},
                {"epsilon", epsilon},
                {"solver", {{"grid_n", grid_n}, {"tau", tau}, {"orbit_n_max", orbit_n_max},
                            {"orbit_samples", orbit_samples}}},
                {"cocycle", {{"n", lyap_n}, {"n_samples", lyap_samples}, {"seed", seed},
                             {"beta", beta}, {"beta_sweep", beta_sweep}}},
                {"regularity", {{"scales", scales}, {"n_pairs", holder_pairs}}},
                {"livsic", {{"max_period", max_period}}},
                {"survey", {{"dim", survey_dim}, {"T_ladder", survey_T}, {"mode", survey_mode},
                            {"n", survey_n}, {"seed", seed}, {"mix_steps", mix_steps}}},
                {"out_dir", out_dir},
                {"threads", threads},
                {"precision_bits", precision_bits}};
  }
};

void merge_config_file(Config& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open config file: " + path);
  json j = json::parse(in, nullptr, true, true);  // allow comments
  if (j.contains("matrix_file")) cfg.matrix_file = j["matrix_file"].get<std::string>();
  if (j.contains("preset")) cfg.preset = j["preset"].get<std::string>();
  if (j.contains("map_file")) cfg.map_file = j["map_file"].get<std::string>();
  if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
  if (j.contains("solver")) {
    const json& s = j["solver"];
    if (s.contains("grid_n")) cfg.grid_n = s["grid_n"].get<int>();
    if (s.contains("tau")) cfg.tau = s["tau"].get<double>();
    if (s.contains("orbit_n_max")) cfg.orbit_n_max = s["orbit_n_max"].get<int>();
    if (s.contains("orbit_samples")) cfg.orbit_samples = s["orbit_samples"].get<int>();
  }
  if (j.contains("cocycle")) {
    const json& s = j["cocycle"];
    if (s.contains("n")) cfg.lyap_n = s["n"].get<long long>();
    if (s.contains("n_samples")) cfg.lyap_samples = s["n_samples"].get<int>();
    if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
    if (s.contains("beta")) cfg.beta = s["beta"].get<double>();
    if (s.contains("beta_sweep")) cfg.beta_sweep = s["beta_sweep"].get<bool>();
  }
  if (j.contains("regularity")) {
    const json& s = j["regularity"];
    if (s.contains("scales")) cfg.scales = s["scales"].get<std::vector<double>>();
    if (s.contains("n_pairs")) cfg.holder_pairs = s["n_pairs"].get<int>();
  }
  if (j.contains("livsic") && j["livsic"].contains("max_period"))
    cfg.max_period = j["livsic"]["max_period"].get<int>();
  if (j.contains("survey")) {
    const json& s = j["survey"];
    if (s.contains("dim")) cfg.survey_dim = s["dim"].get<int>();
    if (s.contains("T_ladder")) cfg.survey_T = s["T_ladder"].get<std::vector<long long>>();
    if (s.contains("mode")) cfg.survey_mode = s["mode"].get<std::string>();
    if (s.contains("n")) cfg.survey_n = s["n"].get<int>();
    if (s.contains("mix_steps")) cfg.mix_steps = s["mix_steps"].get<int>();
  }
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("precision_bits")) cfg.precision_bits = j["precision_bits"].get<int>();
}

struct Experiment {
  algebra::IntMatrix L;
  dynamics::TorusMap f;
  std::string name;
  double epsilon = 0;
};

algebra::IntMatrix companion_matrix(const std::vector<long long>& coeffs_low_to_high) {
  int d = int(coeffs_low_to_high.size()) - 1;
  std::vector<big_int> e(std::size_t(d) * d, 0);
  for (int i = 0; i + 1 < d; ++i) e[std::size_t(i + 1) * d + i] = 1;
  for (int i = 0; i < d; ++i)
    e[std::size_t(i) * d + (d - 1)] = -big_int(coeffs_low_to_high[std::size_t(i)]);
  return algebra::IntMatrix(d, std::move(e));
}

algebra::IntMatrix cat_matrix() {
  return algebra::IntMatrix(2, {big_int(2), big_int(1), big_int(1), big_int(1)});
}

Experiment resolve_experiment(const Config& cfg) {
  if (!cfg.matrix_file.empty() && !cfg.map_file.empty()) {
    algebra::IntMatrix L = algebra::load_matrix_file(cfg.matrix_file);
    dynamics::TorusMap f = dynamics::load_map_file(cfg.map_file, L.dim());
    return Experiment{L, f, "custom", cfg.epsilon};
  }
  double eps = cfg.epsilon;
  if (cfg.preset == "conjugated-cat") {
    if (eps < 0) eps = 0.02;
    algebra::IntMatrix L = cat_matrix();
    return Experiment{L, dynamics::make_conjugated(L, dynamics::shear_map(2, {1, 0}, 0, eps, 1)),
                      cfg.preset, eps};
  }
  if (cfg.preset == "sheared-cat") {
    if (eps < 0) eps = 0.05;
    algebra::IntMatrix L = cat_matrix();
    dynamics::TorusMap f =
        dynamics::shear_map(2, {1, 0}, 0, eps, 1).composed_after(dynamics::linear_map(L));
    return Experiment{L, f, cfg.preset, eps};
  }
  if (cfg.preset == "conjugated-quartic") {
    if (eps < 0) eps = 0.005;
    algebra::IntMatrix L = companion_matrix({1, -1, 3, -1, 1});
    return Experiment{
        L, dynamics::make_conjugated(L, dynamics::shear_map(4, {1, 0, 0, 0}, 0, eps, 1)),
        cfg.preset, eps};
  }
  if (cfg.preset == "ph-quartic") {
    algebra::IntMatrix L = companion_matrix({1, -2, 0, -2, 1});
    return Experiment{L, dynamics::linear_map(L), cfg.preset, 0};
  }
  throw parse_error("unknown preset '" + cfg.preset +
                    "' (known: conjugated-cat, sheared-cat, conjugated-quartic, ph-quartic)");
}

struct RunContext {
  Config cfg;
  std::string hash;
  records::RecordWriter writer;
};

RunContext open_run(const Config& cfg) {
  fs::create_directories(cfg.out_dir);
  json resolved = cfg.resolved();
  std::string hash = records::config_hash(resolved);
  {
    std::ofstream echo(fs::path(cfg.out_dir) / "config_resolved.json");
    echo << resolved.dump(2) << "\n";
  }
  {
    auto now = std::chrono::system_clock::now().time_since_epoch();
    json meta{{"unix_time_seconds",
               std::chrono::duration_cast<std::chrono::seconds>(now).count()},
              {"config_hash", hash}};
    std::ofstream mo(fs::path(cfg.out_dir) / "run_meta.json");
    mo << meta.dump(2) << "\n";
  }
  return RunContext{cfg, hash,
                    records::RecordWriter((fs::path(cfg.out_dir) / "records.jsonl").string(), hash)};
}

void print_hypothesis_table(const algebra::HypothesisReport& rep) {
  auto flag = [](bool b) { return b ? "yes" : "no"; };
  std::printf("hypothesis check\n");
  std::printf("  %-26s %s\n", "irreducible", flag(rep.irreducible));
  std::printf("  %-26s %s\n", "L^4 irreducible", flag(rep.l4_irreducible));
  std::printf("  %-26s %s\n", "totally irreducible", flag(rep.totally_irreducible));
  std::printf("  %-26s %s\n", "hyperbolic", flag(rep.hyperbolic));
  std::printf("  %-26s %s\n", "no three same modulus", flag(rep.no_three_same_modulus));
  std::printf("  %-26s %s\n", "forbidden pairs", flag(rep.forbidden_pairs_present));
  std::printf("  %-26s %s\n", "two on unit circle", flag(rep.two_on_circle));
  std::printf("  %-26s %s\n", "real simple off circle", flag(rep.real_simple_off_circle));
  std::printf("  modulus classes           ");
  for (const auto& c : rep.spec.classes)
    std::printf("%.6f(x%d) ", to_double(c.modulus), c.multiplicity);
  std::printf("\n  %-26s %s\n", "verdict", algebra::verdict_name(rep.verdict));
  if (!rep.failure_reason.empty())
    std::printf("  %-26s %s\n", "first failed check", rep.failure_reason.c_str());
}

int cmd_check(const Config& cfg) {
  if (cfg.matrix_file.empty()) throw parse_error("check: --matrix <file> is required");
  algebra::IntMatrix m = algebra::load_matrix_file(cfg.matrix_file);
  RunContext run = open_run(cfg);
  algebra::HypothesisReport rep = algebra::check_hypotheses(m, cfg.precision_bits);
  run.writer.emit("hypothesis_report", records::hypothesis_json(rep));
  print_hypothesis_table(rep);
  return rep.verdict == algebra::Verdict::neither ? 1 : 0;
}

int cmd_perturb(const Config& cfg) {
  Experiment ex = resolve_experiment(cfg);
  RunContext run = open_run(cfg);
  dynamics::C1Distance c1 = dynamics::c1_distance(ex.f, ex.L, std::max(16, cfg.grid_n / 8));
  run.writer.emit("c1_distance", records::c1_distance_json(c1));
  std::string map_path = (fs::path(cfg.out_dir) / "map.txt").string();
  dynamics::write_map_file(map_path, ex.f, (fs::path(cfg.out_dir) / "map_aux").string());
  std::printf("perturbation '%s' (epsilon %.4g)\n", ex.name.c_str(), ex.epsilon);
  std::printf("  C1 distance to L: %.6g (C0 %.4g + C1 %.4g, grid step %.4g)\n", c1.value,
              c1.c0_part, c1.c1_part, c1.grid_step);
  std::printf("  map written to %s\n", map_path.c_str());
  return 0;
}

int cmd_conjugate(const Config& cfg) {
  Experiment ex = resolve_experiment(cfg);
  RunContext run = open_run(cfg);
  conjugacy::SolveReport sol =
      conjugacy::solve_spectral(ex.f, ex.L, cfg.grid_n, cfg.tau, nullptr, 5000, cfg.threads);
  run.writer.emit("spectral_solve", records::solve_json(sol));
  std::printf("spectral solve: %d sweeps, final delta %.3e, residual %.3e\n", sol.sweeps,
              sol.final_delta, sol.residual);
  std::string field_path = (fs::path(cfg.out_dir) / "conjugacy.field").string();
  conjugacy::save_field_binary(field_path, sol.u);
  std::printf("displacement field written to %s (sup |u| = %.4g)\n", field_path.c_str(),
              sol.u.norm_sup());

  CounterRng rng(cfg.seed, 0xc0);
  std::vector<dynamics::TorusPoint> pts;
  for (int i = 0; i < cfg.orbit_samples; ++i) {
    dynamics::TorusPoint x(std::size_t(ex.L.dim()));
    for (int k = 0; k < ex.L.dim(); ++k) x[std::size_t(k)] = rng.next_unit();
    pts.push_back(std::move(x));
  }
  conjugacy::OrbitSolveResult orb = conjugacy::solve_orbit(ex.f, ex.L, cfg.orbit_n_max, pts);
  run.writer.emit("orbit_solve", records::orbit_solve_json(orb));
  double cross = 0;
  for (const auto& s : orb.samples)
    cross = std::max(cross, torus_dist_inf<double>(sol.u.apply_lift(s.x), s.h_x));
  run.writer.emit("cross_solver_agreement", json{{"max_distance", cross}});
  std::printf("orbit solve: n_max %d at %d bits; cross-solver agreement %.3e\n", orb.n_max,
              orb.precision_bits, cross);
  return 0;
}

int cmd_lyapunov(const Config& cfg) {
  Experiment ex = resolve_experiment(cfg);
  RunContext run = open_run(cfg);
  cocycles::CocycleStats st =
      cocycles::volume_lyapunov(ex.f, cfg.lyap_samples, int(cfg.lyap_n), cfg.seed, cfg.threads);
  run.writer.emit("lyapunov_stats", records::lyapunov_json(st));
  std::printf("volume Lyapunov exponents (n = %lld, %d samples, seed %llu)\n", cfg.lyap_n,
              cfg.lyap_samples, (unsigned long long)cfg.seed);
  for (std::size_t i = 0; i < st.exponents.size(); ++i)
    std::printf("  chi_%zu = %+.9f  (stderr %.2e)\n", i + 1, st.exponents[i], st.stderrs[i]);
  return 0;
}

int cmd_survey(const Config& cfg) {
  RunContext run = open_run(cfg);
  std::vector<survey::SurveyRow> rows;
  for (long long T : cfg.survey_T) {
    survey::SurveyRow row;
    if (cfg.survey_mode == "enumerate")
      row = survey::survey_enumerate(cfg.survey_dim, T);
    else if (cfg.survey_mode == "sample")
      row = survey::survey_sample(cfg.survey_dim, T, cfg.survey_n, cfg.seed, cfg.mix_steps);
    else
      throw parse_error("survey: mode must be 'enumerate' or 'sample'");
    run.writer.emit("survey_row", records::survey_row_json(row));
    std::printf("T=%-6lld n=%-8lld fail=%-7lld fraction=%.5f\n", row.T, row.n_total, row.n_fail,
                row.fail_fraction);
    rows.push_back(std::move(row));
  }
  try {
    survey::DecayFit fit = survey::decay_fit(rows);
    run.writer.emit("decay_fit", records::decay_fit_json(fit));
    std::printf("fit: fraction ~ %.4g * T^(-%.4g), residual rms %.3g%s\n", fit.c, fit.delta,
                fit.residual_rms, fit.decaying ? "" : "  [not decaying]");
  } catch (const numeric_error& e) {
    run.writer.emit("decay_fit_error", json{{"message", e.what()}});
    std::printf("fit skipped: %s\n", e.what());
  }
  return 0;
}

int cmd_rigidity(const Config& cfg) {
  Experiment ex = resolve_experiment(cfg);
  RunContext run = open_run(cfg);
  std::string stage = "check";
  try {
    // stage 1: hypotheses of the linear model
    algebra::HypothesisReport hyp = algebra::check_hypotheses(ex.L, cfg.precision_bits);
    run.writer.emit("hypothesis_report", records::hypothesis_json(hyp));
    print_hypothesis_table(hyp);
    if (hyp.verdict == algebra::Verdict::neither) {
      std::printf("linear model fails the hypotheses; aborting after stage '%s'\n", stage.c_str());
      return 1;
    }

    stage = "perturbation";
    dynamics::C1Distance c1 = dynamics::c1_distance(ex.f, ex.L, std::max(16, cfg.grid_n / 8));
    run.writer.emit("c1_distance", records::c1_distance_json(c1));
    std::printf("C1 distance to L: %.6g\n", c1.value);

    stage = "lyapunov";
    cocycles::CocycleStats st =
        cocycles::volume_lyapunov(ex.f, cfg.lyap_samples, int(cfg.lyap_n), cfg.seed, cfg.threads);
    run.writer.emit("lyapunov_stats", records::lyapunov_json(st));
    bool spectra_match = true;
    {
      std::size_t i = 0;
      std::vector<double> target;
      for (auto it = hyp.spec.classes.rbegin(); it != hyp.spec.classes.rend(); ++it)
        for (int c = 0; c < it->multiplicity; ++c)
          target.push_back(std::log(to_double(it->modulus)));
      for (; i < st.exponents.size(); ++i) {
        double tol = 2 * std::max(st.stderrs[i], 1e-7);
        if (std::abs(st.exponents[i] - target[i]) > tol) spectra_match = false;
      }
    }
    std::printf("volume exponents%s match the linear spectrum (2 stderr)\n",
                spectra_match ? "" : " do NOT");

    stage = "conjugacy";
    conjugacy::SolveReport sol =
        conjugacy::solve_spectral(ex.f, ex.L, cfg.grid_n, cfg.tau, nullptr, 5000, cfg.threads);
    run.writer.emit("spectral_solve", records::solve_json(sol));
    conjugacy::save_field_binary((fs::path(cfg.out_dir) / "conjugacy.field").string(), sol.u);
    CounterRng rng(cfg.seed, 0xc0);
    std::vector<dynamics::TorusPoint> pts;
    for (int i = 0; i < cfg.orbit_samples; ++i) {
      dynamics::TorusPoint x(std::size_t(ex.L.dim()));
      for (int k = 0; k < ex.L.dim(); ++k) x[std::size_t(k)] = rng.next_unit();
      pts.push_back(std::move(x));
    }
    conjugacy::OrbitSolveResult orb = conjugacy::solve_orbit(ex.f, ex.L, cfg.orbit_n_max, pts);
    run.writer.emit("orbit_solve", records::orbit_solve_json(orb));
    double cross = 0;
    for (const auto& s : orb.samples)
      cross = std::max(cross, torus_dist_inf<double>(sol.u.apply_lift(s.x), s.h_x));
    run.writer.emit("cross_solver_agreement", json{{"max_distance", cross}});
    std::printf("conjugacy: residual %.3e, cross-solver agreement %.3e\n", sol.residual, cross);

    stage = "livsic";
    rigidity::ObstructionReport liv =
        rigidity::livsic_obstruction(ex.f, ex.L, int(hyp.spec.classes.size()) - 1,
                                     cfg.max_period);
    run.writer.emit("livsic", records::livsic_json(liv));
    rigidity::JacobianAverage ja = rigidity::volume_jacobian_average(
        ex.f, ex.L, int(hyp.spec.classes.size()) - 1, int(cfg.lyap_n / 10),
        std::max(8, cfg.lyap_samples / 4), cfg.seed + 1);
    run.writer.emit("jacobian_average", records::jacobian_average_json(ja));
    std::printf("livsic: max obstruction %.3e over %d orbits (%d failed)\n", liv.max_obstruction,
                liv.n_orbits, liv.n_failed);

    stage = "holder";
    std::vector<double> scales = cfg.scales;
    if (scales.empty())
      for (double s = 4.0 / cfg.grid_n; (scales.size() < 4 || s <= 0.13) && s <= 0.26; s *= 2)
        scales.push_back(s);
    conjugacy::SpectralSplit split = conjugacy::spectral_split(ex.L);
    std::vector<rigidity::HolderDirection> dirs;
    {
      rigidity::HolderDirection g;
      g.mode = rigidity::HolderDirection::Mode::global;
      dirs.push_back(g);
      rigidity::HolderDirection du;
      du.mode = rigidity::HolderDirection::Mode::subspace;
      du.tag = "unstable";
      du.basis = split.block_onb(int(split.blocks.size()) - 1);
      dirs.push_back(du);
      rigidity::HolderDirection ds;
      ds.mode = rigidity::HolderDirection::Mode::subspace;
      ds.tag = "stable";
      ds.basis = split.block_onb(0);
      dirs.push_back(ds);
    }
    double band_lo = 1e9, band_hi = -1e9;
    bool all_contain_one = true;
    for (const auto& dir : dirs) {
      rigidity::RegularityEstimate est =
          rigidity::holder_exponent(sol.u, dir, scales, cfg.holder_pairs, cfg.seed + 2);
      run.writer.emit("holder", records::holder_json(est));
      std::printf("holder[%s]: alpha %.4f band [%.4f, %.4f]%s\n", est.direction_tag.c_str(),
                  est.alpha, est.band_lo, est.band_hi, est.lipschitz ? "" : "  [excludes 1]");
      band_lo = std::min(band_lo, est.band_lo);
      band_hi = std::max(band_hi, est.band_hi);
      if (!est.lipschitz) all_contain_one = false;
    }

    stage = "transfer";
    rigidity::TransferReport tr = rigidity::transfer_check(
        sol.u, ex.f, ex.L, int(hyp.spec.classes.size()) - 1, 100, 1.0 / 32, cfg.seed + 3);
    run.writer.emit("transfer", records::transfer_json(tr));
    std::printf("transfer: max defect %.3e (median %.3e)\n", tr.max_defect, tr.median_defect);

    stage = "flag-transport";
    cocycles::SubBundleField flag =
        cocycles::flag_estimate(ex.f, ex.L, int(hyp.spec.classes.size()) - 1,
                                std::min(64, cfg.grid_n / 4), 40, 0.5, cfg.threads);
    rigidity::FlagTransportReport ft =
        rigidity::flag_transport_check(sol.u, ex.L, 1, flag, 100, 1.0 / 64, cfg.seed + 4);
    run.writer.emit("flag_transport", records::flag_transport_json(ft));
    std::printf("flag transport: max tangency defect %.3e at delta %.4g\n", ft.max_defect,
                ft.delta);

    stage = "bunching";
    auto [nu, nu_hat] = cocycles::default_bunching_rates(st);
    std::vector<double> betas{cfg.beta};
    if (cfg.beta_sweep) betas = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    Eigen::MatrixXd bref =
        cocycles::class_reference_frame(ex.L, int(hyp.spec.classes.size()) - 1);
    for (double beta : betas) {
      cocycles::BunchingReport br = cocycles::bunching_check(ex.f, flag, beta, nu, nu_hat, bref);
      run.writer.emit("bunching", records::bunching_json(br));
      std::printf("bunching[beta=%.2f]: margin %.4f\n", beta, br.margin);
    }

    json summary{{"spectra_matched", spectra_match},
                 {"regularity_band", {band_lo, band_hi}},
                 {"band_contains_one", all_contain_one},
                 {"residual", sol.residual},
                 {"cross_solver_agreement", cross},
                 {"livsic_max_obstruction", liv.max_obstruction},
                 {"transfer_max_defect", tr.max_defect},
                 {"flag_transport_max_defect", ft.max_defect}};
    run.writer.emit("rigidity_summary", summary);
    std::printf("summary: spectra-matched: %s; regularity-band: [%.4f, %.4f]\n",
                spectra_match ? "yes" : "no", band_lo, band_hi);
    return spectra_match ? 0 : 1;
  } catch (const numeric_error& e) {
    run.writer.emit("stage_error", json{{"stage", stage}, {"message", e.what()}});
    std::fprintf(stderr, "numerical failure in stage '%s': %s\n", stage.c_str(), e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laboratory for toral automorphisms and their volume-preserving perturbations"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  Config cfg;
  std::string config_file;
  app.add_option("--config", config_file, "JSON configuration file");
  app.add_option("--seed", cfg.seed, "RNG seed for all sampled statistics");
  app.add_option("--grid", cfg.grid_n, "grid resolution per axis");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--threads", cfg.threads, "worker thread cap");
  app.add_option("--precision-bits", cfg.precision_bits, "spectrum working precision");

  auto* c_check = app.add_subcommand("check", "theorem-eligibility of an integer matrix");
  c_check->add_option("--matrix", cfg.matrix_file, "matrix text file")->required();

  auto* c_perturb = app.add_subcommand("perturb", "build a perturbation and report C1 distance");
  auto* c_conj = app.add_subcommand("conjugate", "solve for the conjugacy h, two ways");
  auto* c_lyap = app.add_subcommand("lyapunov", "volume Lyapunov exponents");
  auto* c_rig = app.add_subcommand("rigidity", "full rigidity pipeline");
  auto* c_surv = app.add_subcommand("survey", "genericity survey over norm-bounded matrices");

  for (CLI::App* sub : {c_perturb, c_conj, c_lyap, c_rig}) {
    sub->add_option("--preset", cfg.preset,
                    "conjugated-cat | sheared-cat | conjugated-quartic | ph-quartic");
    sub->add_option("--epsilon", cfg.epsilon, "perturbation amplitude (preset default if unset)");
    sub->add_option("--matrix", cfg.matrix_file, "matrix file (with --map for custom runs)");
    sub->add_option("--map", cfg.map_file, "map description file");
  }
  c_conj->add_option("--tau", cfg.tau, "solver tolerance");
  c_conj->add_option("--orbit-n", cfg.orbit_n_max, "orbit solver depth");
  c_conj->add_option("--orbit-samples", cfg.orbit_samples, "orbit solver sample points");
  c_lyap->add_option("--n", cfg.lyap_n, "iterations per orbit");
  c_lyap->add_option("--samples", cfg.lyap_samples, "number of random starts");
  c_rig->add_option("--n", cfg.lyap_n, "Lyapunov iterations per orbit");
  c_rig->add_option("--samples", cfg.lyap_samples, "Lyapunov samples");
  c_rig->add_option("--tau", cfg.tau, "solver tolerance");
  c_rig->add_option("--orbit-n", cfg.orbit_n_max, "orbit solver depth");
  c_rig->add_option("--orbit-samples", cfg.orbit_samples, "orbit solver samples");
  c_rig->add_option("--max-period", cfg.max_period, "Livsic orbit periods");
  c_rig->add_option("--beta", cfg.beta, "bunching Holder exponent");
  c_rig->add_flag("--beta-sweep", cfg.beta_sweep, "sweep beta over 0.1..0.9");
  c_surv->add_option("--dim", cfg.survey_dim, "matrix dimension");
  c_surv->add_option("--T", cfg.survey_T, "norm ladder");
  c_surv->add_option("--mode", cfg.survey_mode, "enumerate | sample");
  c_surv->add_option("--n", cfg.survey_n, "samples per rung (sample mode)");
  c_surv->add_option("--mix-steps", cfg.mix_steps, "elementary factors per sample");

  try {
    app.parse(argc, argv);
    if (!config_file.empty()) merge_config_file(cfg, config_file);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (c_check->parsed()) return cmd_check(cfg);
    if (c_perturb->parsed()) return cmd_perturb(cfg);
    if (c_conj->parsed()) return cmd_conjugate(cfg);
    if (c_lyap->parsed()) return cmd_lyapunov(cfg);
    if (c_rig->parsed()) return cmd_rigidity(cfg);
    if (c_surv->parsed()) return cmd_survey(cfg);
  } catch (const parse_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 2;
}
