// Serialization: self-describing JSON containers for fields and reports,
// and CSV tables with a fixed column order.
//
// Doubles are written in shortest round-trip form, so a field read back from
// its container is bit-identical to the one written.
#pragma once

#include "khess/coupled_solver.hpp"
#include "khess/energy.hpp"
#include "khess/geodesic.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace khess {

using json = nlohmann::ordered_json;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json background_to_json(const TorusBackground& bg);
BackgroundPtr background_from_json(const json& j);

/// {"format": "khess.field", "background": ..., "role": ..., "data": [...]}
json field_to_json(const PotentialField& f);
/// Reuses `bg` when given (the grids must agree), else builds a background.
PotentialField field_from_json(const json& j, BackgroundPtr bg = nullptr);

json hmat_to_json(const HMat& m);
HMat hmat_from_json(const json& j);

json twist_to_json(const TwistForm& alpha);
TwistForm twist_from_json(const json& j, const BackgroundPtr& bg);

json to_json(const CoupledSolution& sol);
CoupledSolution coupled_solution_from_json(const json& j);
json to_json(const MASolution& sol);
json to_json(const EnergyReport& r);
json to_json(const EstimateReport& r);
json to_json(const GeodesicPath& g);
PotentialPath geodesic_samples_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// Shortest round-trip text form of a double.
std::string format_double(double x);

/// CSV table with a fixed header; rows are written in insertion order.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(const std::vector<std::string>& cells);
  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] std::size_t rows() const { return rows_.size(); }
  [[nodiscard]] std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Column orders of the emitted tables.
inline const std::vector<std::string> kEstimateColumns{
    "instance_id", "n", "k", "N", "entropy", "A_F", "supF", "infF", "supPhi", "lemma2_max", "lambda_used"};
inline const std::vector<std::string> kCurvatureColumns{"sample_id", "n", "k", "value", "bound_margin"};
inline const std::vector<std::string> kGeodesicColumns{"t", "energy", "residual"};
inline const std::vector<std::string> kInequalityColumns{
    "sample_id", "n", "k", "sigma_k", "min_sigma_km1", "lemma22_max", "newton_ok", "garding_ratio", "detG_ratio"};
inline const std::vector<std::string> kEnergyColumns{"t", "mu_k", "dmu_formula", "dmu_difference"};

}  // namespace khess
