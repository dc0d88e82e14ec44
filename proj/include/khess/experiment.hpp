// Batch experiments: the spec-file format, the runner that writes artifacts
// with a manifest next to them, and the manufactured family used for the
// C^0-estimate table.
#pragma once

#include "khess/coupled_solver.hpp"
#include "khess/io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace khess {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kMaxExperimentDim = 4;  ///< field experiments
inline constexpr int kMaxPointwiseDim = 6;   ///< inequality sweeps (no grid)
inline constexpr int kMaxGrid = 64;
/// Curvature values at most this times curvature_scale count as non-positive.
inline constexpr double kCurvatureTolerance = 1e-10;

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ExperimentKind { solve, ma_solve, estimate_sweep, energy_scan, geodesic, curvature_sweep, inequality_sweep };

std::string to_string(ExperimentKind kind);
ExperimentKind kind_from_string(const std::string& s);
/// Kinds that draw random data and therefore need a seed.
bool is_randomized(ExperimentKind kind);

/// Description of the twist form.
///   zero          alpha = 0
///   scaled_omega  alpha = scale * omega
///   manufactured  alpha = ddbar log ratio(phi*) for a random phi* of the
///                 given amplitude (the exact solution is then phi*)
struct TwistSpec {
  std::string type = "zero";
  double scale = 0.0;
  double amplitude = 0.0;
};

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::solve;
  int n = 2;
  int k = 1;
  int grid = 8;
  std::optional<std::uint64_t> seed;
  double tolerance = 1e-9;
  TwistSpec alpha;
  double lambda = 0.0;
  double epsilon = 0.5;
  double amplitude = 0.05;  ///< amplitude of random potentials (scans, sweeps, geodesic endpoints)
  int samples = 100;
  int time_steps = 16;      ///< geodesic time intervals, energy-scan samples
  int shapes = 3;           ///< estimate sweep: number of random shapes
  int amplitudes = 10;      ///< estimate sweep: amplitudes per shape
  std::string output = "out";
  json raw;                 ///< the spec as read, echoed into the manifest
};

/// Parses and validates a spec object; throws SpecError with the offending key.
ExperimentSpec parse_spec(const json& j);
/// Every field with its resolved value; parse_spec(spec_to_json(s)) == s.
json spec_to_json(const ExperimentSpec& spec);
ExperimentSpec load_spec(const std::filesystem::path& path);

struct RunResult {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> artifacts;
  std::filesystem::path manifest;
  json summary;
};

/// Runs the experiment, writing artifacts and manifest.json into
/// spec.output. A spec file may also be a manifest: its "spec" member is run.
RunResult run_experiment(const ExperimentSpec& spec);

// ---------------------------------------------------------------------------
// Manufactured family for the estimate table.

struct EstimateFamilyConfig {
  int n = 2;
  int k = 1;
  int grid = 8;
  int shapes = 3;
  int amplitudes = 10;
  double epsilon = 0.5;
  double max_fraction = 0.9;  ///< largest amplitude as a fraction of the admissible maximum
  std::uint64_t seed = 1;
  double tolerance = 1e-9;
};

struct EstimateInstance {
  int instance_id = 0;
  int shape = 0;
  double fraction = 0.0;
  double amplitude = 0.0;
  double solve_error = 0.0;  ///< sup |phi - phi*| after the cold-start solve
  double r2 = 0.0;
  EstimateReport report;
};

/// Largest a with a * shape admissible, by bisection on [0, a_hi].
double max_admissible_amplitude(const PotentialField& shape, int k, double a_hi = 10.0);

/// Random sup-normalized shape with unit sup-norm.
PotentialField estimate_shape(const BackgroundPtr& bg, std::uint64_t seed, int shape);

/// Solves every instance from a cold start and evaluates the harness.
std::vector<EstimateInstance> estimate_family(const EstimateFamilyConfig& cfg);

CsvTable estimate_table(const std::vector<EstimateInstance>& family, int n, int k, int N);

/// The two monotone patterns of the estimate chain.
///  (a) F + eps psi - lambda phi is controlled by the entropy: the maximum of
///      lemma2_max over the lower-entropy half does not exceed that over the
///      upper half, and the Spearman correlation of (entropy, lemma2_max) is
///      at least 0.5.
///  (b) inf F is controlled by sup |phi|: the minimum of inf F over the half
///      with smaller sup |phi| is not below that of the other half, and the
///      Spearman correlation of (sup |phi|, -inf F) is at least 0.5.
struct EstimatePatterns {
  bool a_pass = false;
  bool b_pass = false;
  double a_lower_max = 0.0;
  double a_upper_max = 0.0;
  double a_spearman = 0.0;
  double b_lower_min = 0.0;
  double b_upper_min = 0.0;
  double b_spearman = 0.0;
  std::size_t instances = 0;
};

EstimatePatterns check_estimate_patterns(const std::vector<EstimateInstance>& family);

/// Spearman rank correlation (average ranks for ties).
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace khess
