#include "toruslab/records.hpp"

namespace toruslab {
namespace records {

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string config_hash(const json& resolved_config) {
  // nlohmann dumps object keys sorted, so this is canonical
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                (unsigned long long)fnv1a64(resolved_config.dump()));
  return buf;
}

json spectrum_json(const algebra::SpectrumReport& s) {
  json eig = json::array();
  for (const auto& e : s.eigenvalues) {
    eig.push_back({{"re", to_double(e.re)},
                   {"im", to_double(e.im)},
                   {"modulus", to_double(e.modulus)},
                   {"radius", to_double(e.radius)},
                   {"multiplicity", e.multiplicity},
                   {"on_unit_circle", e.on_unit_circle},
                   {"class_index", e.class_index}});
  }
  json classes = json::array();
  for (const auto& c : s.classes)
    classes.push_back({{"modulus", to_double(c.modulus)}, {"multiplicity", c.multiplicity}});
  return {{"dim", s.dim},
          {"precision_bits", s.precision_bits},
          {"eigenvalues", eig},
          {"classes", classes},
          {"unit_circle_count", s.unit_circle_count},
          {"certified_gap", to_double(s.certified_gap)}};
}

json hypothesis_json(const algebra::HypothesisReport& r) {
  json chi = json::array();
  for (const auto& c : r.chi.coeffs) chi.push_back(c.str());
  json chi4 = json::array();
  for (const auto& c : r.chi4.coeffs) chi4.push_back(c.str());
  return {{"irreducible", r.irreducible},
          {"l4_irreducible", r.l4_irreducible},
          {"totally_irreducible", r.totally_irreducible},
          {"no_three_same_modulus", r.no_three_same_modulus},
          {"forbidden_pairs_present", r.forbidden_pairs_present},
          {"hyperbolic", r.hyperbolic},
          {"two_on_circle", r.two_on_circle},
          {"real_simple_off_circle", r.real_simple_off_circle},
          {"remark1_consistent", r.remark1_consistent},
          {"verdict", algebra::verdict_name(r.verdict)},
          {"failure_reason", r.failure_reason},
          {"charpoly", chi},
          {"charpoly_l4", chi4},
          {"spectrum", spectrum_json(r.spec)}};
}

json c1_distance_json(const dynamics::C1Distance& c) {
  return {{"value", c.value},
          {"c0_part", c.c0_part},
          {"c1_part", c.c1_part},
          {"grid_step", c.grid_step}};
}

json solve_json(const conjugacy::SolveReport& r) {
  return {{"grid_n", r.u.grid_n()},
          {"dim", r.u.dim()},
          {"sweeps", r.sweeps},
          {"final_delta", r.final_delta},
          {"residual", r.residual},
          {"grid_step", r.grid_step},
          {"norm_sup", r.u.norm_sup()}};
}

json orbit_solve_json(const conjugacy::OrbitSolveResult& r) {
  double worst_ratio = 0, last_increment = 0;
  for (const auto& s : r.samples) {
    worst_ratio = std::max(worst_ratio, s.contraction_ratio);
    if (!s.increments.empty()) last_increment = std::max(last_increment, s.increments.back());
  }
  return {{"n_max", r.n_max},
          {"precision_bits", r.precision_bits},
          {"n_samples", int(r.samples.size())},
          {"max_contraction_ratio", worst_ratio},
          {"max_final_increment", last_increment}};
}

json lyapunov_json(const cocycles::CocycleStats& s) {
  return {{"exponents", s.exponents},
          {"stderrs", s.stderrs},
          {"n_iters", s.n_iters},
          {"n_samples", s.n_samples},
          {"seed", s.seed}};
}

json bunching_json(const cocycles::BunchingReport& b) {
  return {{"margin", b.margin},
          {"margin_nu", b.margin_nu},
          {"margin_nu_hat", b.margin_nu_hat},
          {"nu", b.nu},
          {"nu_hat", b.nu_hat},
          {"beta", b.beta}};
}

json distortion_json(const cocycles::DistortionSeries& d) {
  return {{"value", d.value}, {"slope", d.slope}, {"log_distortion", d.log_distortion}};
}

json livsic_json(const rigidity::ObstructionReport& r) {
  json orbits = json::array();
  for (const auto& o : r.orbits) {
    json jo = {{"period", o.period}, {"refined", o.refined}};
    if (o.refined) {
      jo["value"] = o.value;
      jo["volume_defect"] = o.volume_defect;
      jo["point"] = o.point;
    } else {
      jo["warning"] = o.warning;
    }
    orbits.push_back(jo);
  }
  return {{"max_obstruction", r.max_obstruction},
          {"max_volume_defect", r.max_volume_defect},
          {"n_orbits", r.n_orbits},
          {"n_failed", r.n_failed},
          {"logdet_class", r.logdet_class},
          {"period_counts", r.period_counts},
          {"orbits", orbits}};
}

json jacobian_average_json(const rigidity::JacobianAverage& a) {
  return {{"mean", a.mean},
          {"stderr", a.stderr_of_mean},
          {"n_iters", a.n_iters},
          {"n_samples", a.n_samples}};
}

json density_ratio_json(const rigidity::DensityRatio& r) {
  return {{"value", r.value}, {"depth", r.depth}, {"tail_bound", r.tail_bound}};
}

json holder_json(const rigidity::RegularityEstimate& e) {
  return {{"direction", e.direction_tag},
          {"scales", e.scales},
          {"alpha", e.alpha},
          {"band_lo", e.band_lo},
          {"band_hi", e.band_hi},
          {"lipschitz", e.lipschitz},
          {"fit_residual_rms", e.fit_residual_rms},
          {"span_decades", e.span_decades},
          {"meets_span_target", e.meets_span_target},
          {"n_pairs", e.n_pairs}};
}

json transfer_json(const rigidity::TransferReport& t) {
  return {{"max_defect", t.max_defect},
          {"median_defect", t.median_defect},
          {"n_pts", t.n_pts},
          {"fd_scale", t.fd_scale},
          {"richardson_levels", t.richardson_levels}};
}

json flag_transport_json(const rigidity::FlagTransportReport& t) {
  return {{"max_defect", t.max_defect},
          {"mean_defect", t.mean_defect},
          {"n_pts", t.n_pts},
          {"delta", t.delta}};
}

json survey_row_json(const survey::SurveyRow& r) {
  return {{"T", r.T},
          {"dim", r.dim},
          {"mode", r.mode},
          {"sampling_caveat", r.sampling_caveat},
          {"n_total", r.n_total},
          {"n_non_hyperbolic", r.n_non_hyperbolic},
          {"n_reducible", r.n_reducible},
          {"n_l4_reducible", r.n_l4_reducible},
          {"n_three_same_modulus", r.n_three_same_modulus},
          {"n_fail", r.n_fail},
          {"fail_fraction", r.fail_fraction},
          {"fail_stderr", r.fail_stderr},
          {"seed", r.seed}};
}

json decay_fit_json(const survey::DecayFit& f) {
  return {{"c", f.c},
          {"delta", f.delta},
          {"residual_rms", f.residual_rms},
          {"n_used", f.n_used},
          {"decaying", f.decaying},
          {"warnings", f.warnings}};
}

RecordWriter::RecordWriter(const std::string& path, std::string config_hash_hex)
    : out_(path), hash_(std::move(config_hash_hex)) {
  if (!out_) throw parse_error("cannot open records file: " + path);
}

void RecordWriter::emit(const std::string& record_type, json payload) {
  json rec;
  rec["record"] = record_type;
  rec["config_hash"] = hash_;
  rec["data"] = std::move(payload);
  out_ << rec.dump() << "\n";
  out_.flush();
}

std::vector<survey::SurveyRow> load_survey_rows(const std::string& path,
                                                const std::string& expected_hash) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open rows file: " + path);
  std::vector<survey::SurveyRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json rec = json::parse(line);
    if (rec.value("record", "") != "survey_row") continue;
    if (rec.value("config_hash", "") != expected_hash)
      throw parse_error("load_survey_rows: mixed-config aggregation refused (hash " +
                        rec.value("config_hash", "") + " != " + expected_hash + ")");
    const json& d = rec["data"];
    survey::SurveyRow r;
    r.T = d["T"].get<long long>();
    r.dim = d["dim"].get<int>();
    r.mode = d["mode"].get<std::string>();
    r.sampling_caveat = d["sampling_caveat"].get<std::string>();
    r.n_total = d["n_total"].get<long long>();
    r.n_non_hyperbolic = d["n_non_hyperbolic"].get<long long>();
    r.n_reducible = d["n_reducible"].get<long long>();
    r.n_l4_reducible = d["n_l4_reducible"].get<long long>();
    r.n_three_same_modulus = d["n_three_same_modulus"].get<long long>();
    r.n_fail = d["n_fail"].get<long long>();
    r.fail_fraction = d["fail_fraction"].get<double>();
    r.fail_stderr = d["fail_stderr"].get<double>();
    r.seed = d["seed"].get<std::uint64_t>();
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace records
}  // namespace toruslab
