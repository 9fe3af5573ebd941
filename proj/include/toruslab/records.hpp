#pragma once

// Newline-delimited structured records with stable field names, plus the
// config hash that ties every record to the resolved run configuration.
// Records never carry timestamps, so reruns are byte-identical.

#include <json.hpp>

#include <fstream>
#include <string>

#include "toruslab/conjugacy.hpp"
#include "toruslab/rigidity.hpp"
#include "toruslab/survey.hpp"

namespace toruslab {
namespace records {

using json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& s);
// canonical hash of a resolved configuration (sorted-key dump)
std::string config_hash(const json& resolved_config);

json spectrum_json(const algebra::SpectrumReport& s);
json hypothesis_json(const algebra::HypothesisReport& r);
json c1_distance_json(const dynamics::C1Distance& c);
json solve_json(const conjugacy::SolveReport& r);
json orbit_solve_json(const conjugacy::OrbitSolveResult& r);
json lyapunov_json(const cocycles::CocycleStats& s);
json bunching_json(const cocycles::BunchingReport& b);
json distortion_json(const cocycles::DistortionSeries& d);
json livsic_json(const rigidity::ObstructionReport& r);
json jacobian_average_json(const rigidity::JacobianAverage& a);
json density_ratio_json(const rigidity::DensityRatio& r);
json holder_json(const rigidity::RegularityEstimate& e);
json transfer_json(const rigidity::TransferReport& t);
json flag_transport_json(const rigidity::FlagTransportReport& t);
json survey_row_json(const survey::SurveyRow& r);
json decay_fit_json(const survey::DecayFit& f);

// one self-describing object per line
class RecordWriter {
 public:
  RecordWriter() = default;
  RecordWriter(const std::string& path, std::string config_hash_hex);
  void emit(const std::string& record_type, json payload);
  bool open() const { return out_.is_open(); }

 private:
  std::ofstream out_;
  std::string hash_;
};

// rows loader that refuses mixed-config aggregation
std::vector<survey::SurveyRow> load_survey_rows(const std::string& path,
                                                const std::string& expected_hash);

}  // namespace records
}  // namespace toruslab
