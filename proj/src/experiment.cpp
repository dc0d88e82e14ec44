#include "khess/experiment.hpp"

#include "khess/parallel.hpp"
#include "khess/sampling.hpp"

#include "khess/energy.hpp"
#include "khess/geodesic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>

namespace khess {

namespace {

bool admissible(const PotentialField& phi, int k) {
  try {
    evaluate_state(phi, k);
    return true;
  } catch (const ConeError&) {
    return false;
  }
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return x[i] < x[j]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t q = i; q <= j; ++q) r[idx[q]] = avg;
    i = j + 1;
  }
  return r;
}

/// Indices sorted by key; the first half (rounded down) is the lower half.
std::vector<std::size_t> order_by(const std::vector<double>& key) {
  std::vector<std::size_t> idx(key.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return key[i] < key[j]; });
  return idx;
}

}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: need two samples of equal length");
  const auto rx = ranks(x), ry = ranks(y);
  const double m = 0.5 * static_cast<double>(x.size() + 1);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - m) * (ry[i] - m);
    sxx += (rx[i] - m) * (rx[i] - m);
    syy += (ry[i] - m) * (ry[i] - m);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double max_admissible_amplitude(const PotentialField& shape, int k, double a_hi) {
  if (admissible(a_hi * shape, k)) return a_hi;
  double lo = 0.0, hi = a_hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid * shape, k) ? lo : hi) = mid;
  }
  return lo;
}

PotentialField estimate_shape(const BackgroundPtr& bg, std::uint64_t seed, int shape) {
  Rng rng = sample_rng(seed, 0, static_cast<std::uint64_t>(shape));
  PotentialField f = random_potential(bg, rng, 1.0);
  f += -f.sup();
  f *= 1.0 / f.sup_abs();
  return f;
}

std::vector<EstimateInstance> estimate_family(const EstimateFamilyConfig& cfg) {
  if (cfg.k < 1 || cfg.k > cfg.n || cfg.n > kMaxExperimentDim) throw DomainError("estimate_family: bad (n, k)");
  if (cfg.shapes < 1 || cfg.amplitudes < 1) throw DomainError("estimate_family: empty family");
  const auto bg = TorusBackground::make(cfg.n, cfg.grid);
  std::vector<PotentialField> shapes;
  std::vector<double> amax;
  for (int s = 0; s < cfg.shapes; ++s) {
    shapes.push_back(estimate_shape(bg, cfg.seed, s));
    amax.push_back(max_admissible_amplitude(shapes.back(), cfg.k));
  }
  const auto count = static_cast<std::size_t>(cfg.shapes * cfg.amplitudes);
  std::vector<EstimateInstance> out(count);
  parallel_for(count, [&](std::size_t i) {
    EstimateInstance& inst = out[i];
    inst.instance_id = static_cast<int>(i);
    inst.shape = static_cast<int>(i) / cfg.amplitudes;
    const int j = static_cast<int>(i) % cfg.amplitudes + 1;
    inst.fraction = cfg.max_fraction * j / cfg.amplitudes;
    inst.amplitude = inst.fraction * amax[static_cast<std::size_t>(inst.shape)];
    const PotentialField phi_star = inst.amplitude * shapes[static_cast<std::size_t>(inst.shape)];
    SolveConfig sc;
    sc.background = bg;
    sc.k = cfg.k;
    sc.tol = cfg.tolerance;
    const CoupledSolution sol = solve_coupled(sc, manufactured_twist(phi_star, cfg.k));
    inst.solve_error = (sol.phi - phi_star).sup_abs();
    inst.r2 = sol.r2;
    inst.report = estimate_harness(sol, cfg.epsilon);
  });
  return out;
}

CsvTable estimate_table(const std::vector<EstimateInstance>& family, int n, int k, int N) {
  CsvTable t(kEstimateColumns);
  for (const auto& f : family) {
    const EstimateReport& r = f.report;
    t.add_row({std::to_string(f.instance_id), std::to_string(n), std::to_string(k), std::to_string(N),
               format_double(r.entropy), format_double(r.A_F), format_double(r.sup_F), format_double(r.inf_F),
               format_double(r.sup_abs_phi), format_double(r.lemma2_max), format_double(r.lambda_used)});
  }
  return t;
}

EstimatePatterns check_estimate_patterns(const std::vector<EstimateInstance>& family) {
  EstimatePatterns p;
  p.instances = family.size();
  if (family.size() < 4) return p;
  std::vector<double> entropy, lemma2, supphi, inff, neg_inff;
  for (const auto& f : family) {
    entropy.push_back(f.report.entropy);
    lemma2.push_back(f.report.lemma2_max);
    supphi.push_back(f.report.sup_abs_phi);
    inff.push_back(f.report.inf_F);
    neg_inff.push_back(-f.report.inf_F);
  }
  const std::size_t half = family.size() / 2;
  const auto by_entropy = order_by(entropy);
  p.a_lower_max = -std::numeric_limits<double>::infinity();
  p.a_upper_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < by_entropy.size(); ++i)
    (i < half ? p.a_lower_max : p.a_upper_max) =
        std::max(i < half ? p.a_lower_max : p.a_upper_max, lemma2[by_entropy[i]]);
  p.a_spearman = spearman(entropy, lemma2);
  p.a_pass = p.a_lower_max <= p.a_upper_max && p.a_spearman >= 0.5;

  const auto by_phi = order_by(supphi);
  p.b_lower_min = std::numeric_limits<double>::infinity();
  p.b_upper_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < by_phi.size(); ++i)
    (i < half ? p.b_lower_min : p.b_upper_min) =
        std::min(i < half ? p.b_lower_min : p.b_upper_min, inff[by_phi[i]]);
  p.b_spearman = spearman(supphi, neg_inff);
  p.b_pass = p.b_lower_min >= p.b_upper_min && p.b_spearman >= 0.5;
  return p;
}

}  // namespace khess

// ---------------------------------------------------------------------------
// Spec files and the runner.

namespace khess {

namespace {

const std::vector<std::pair<ExperimentKind, const char*>> kKinds{
    {ExperimentKind::solve, "solve"},
    {ExperimentKind::ma_solve, "ma_solve"},
    {ExperimentKind::estimate_sweep, "estimate_sweep"},
    {ExperimentKind::energy_scan, "energy_scan"},
    {ExperimentKind::geodesic, "geodesic"},
    {ExperimentKind::curvature_sweep, "curvature_sweep"},
    {ExperimentKind::inequality_sweep, "inequality_sweep"},
};

const std::vector<std::string> kSpecKeys{"kind",      "n",       "k",          "grid",   "seed",
                                         "tolerance", "alpha",   "lambda",     "epsilon", "amplitude",
                                         "samples",   "time_steps", "shapes",  "amplitudes", "output"};

template <class T>
T get_key(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw SpecError(std::string("spec key '") + key + "' has the wrong type: " + j.at(key).dump());
  }
}

void check(bool ok, const std::string& message) {
  if (!ok) throw SpecError(message);
}

TwistSpec parse_twist(const json& j) {
  TwistSpec t;
  if (j.is_string()) {
    t.type = j.get<std::string>();
  } else if (j.is_object()) {
    for (const auto& [key, _] : j.items())
      check(key == "type" || key == "scale" || key == "amplitude",
            "unknown key 'alpha." + key + "' (expected type, scale, amplitude)");
    t.type = get_key<std::string>(j, "type", "zero");
    t.scale = get_key<double>(j, "scale", 0.0);
    t.amplitude = get_key<double>(j, "amplitude", 0.0);
  } else {
    throw SpecError("spec key 'alpha' must be a string or an object");
  }
  check(t.type == "zero" || t.type == "scaled_omega" || t.type == "manufactured",
        "alpha.type '" + t.type + "' is not one of zero, scaled_omega, manufactured");
  check(std::isfinite(t.scale), "alpha.scale must be finite");
  check(t.amplitude >= 0.0 && std::isfinite(t.amplitude), "alpha.amplitude must be finite and >= 0");
  return t;
}

std::string compiler_string() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

/// Admissible random potential; fails with an actionable message when the
/// requested amplitude leaves the cone.
PotentialField admissible_potential(const BackgroundPtr& bg, Rng& rng, double amp, int k, const char* what) {
  PotentialField f = random_potential(bg, rng, amp);
  if (!admissible(f, k)) {
    throw SpecError(std::string(what) + ": a random potential of amplitude " + format_double(amp) +
                    " is not k-admissible; lower 'amplitude'");
  }
  return f;
}

/// Progress sink shared by concurrent solves.
class ProgressLog {
 public:
  explicit ProgressLog(const std::filesystem::path& path) : out_(path) {}
  void operator()(const std::string& line) {
    const std::lock_guard<std::mutex> lock(mutex_);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::mutex mutex_;
  std::ofstream out_;
};

struct Outcome {
  std::vector<std::string> artifacts;
  json summary = json::object();
};

class Runner {
 public:
  Runner(const ExperimentSpec& spec, const std::filesystem::path& dir) : spec_(spec), dir_(dir), log_(dir / "trace.log") {}

  Outcome run() {
    switch (spec_.kind) {
      case ExperimentKind::solve: return solve();
      case ExperimentKind::ma_solve: return ma_solve();
      case ExperimentKind::estimate_sweep: return estimate_sweep();
      case ExperimentKind::energy_scan: return energy_scan();
      case ExperimentKind::geodesic: return geodesic();
      case ExperimentKind::curvature_sweep: return curvature_sweep();
      case ExperimentKind::inequality_sweep: return inequality_sweep();
    }
    throw SpecError("unhandled kind");
  }

 private:
  BackgroundPtr background() const { return TorusBackground::make(spec_.n, spec_.grid); }
  std::uint64_t seed() const { return spec_.seed.value_or(0); }

  void write(Outcome& o, const std::string& name, const json& j) {
    write_json(dir_ / name, j);
    o.artifacts.push_back(name);
  }
  void write(Outcome& o, const std::string& name, const CsvTable& t) {
    t.write(dir_ / name);
    o.artifacts.push_back(name);
  }

  Outcome solve() {
    Outcome o;
    const auto bg = background();
    TwistForm alpha{HMat::Zero(spec_.n, spec_.n), std::nullopt};
    std::optional<PotentialField> exact;
    if (spec_.alpha.type == "scaled_omega") {
      alpha.A0 = spec_.alpha.scale * bg->omega();
    } else if (spec_.alpha.type == "manufactured") {
      Rng rng = sample_rng(seed(), 1, 0);
      PotentialField phi_star = admissible_potential(bg, rng, spec_.alpha.amplitude, spec_.k, "alpha");
      alpha = manufactured_twist(phi_star, spec_.k);
      phi_star += -phi_star.sup();
      exact = phi_star;
    }
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = spec_.k;
    cfg.tol = spec_.tolerance;
    cfg.log = [this](const std::string& line) { log_(line); };
    const CoupledSolution sol = solve_coupled(cfg, alpha);
    const auto [r1, r2] = coupled_residuals(sol.phi, sol.F, sol.alpha, spec_.k);
    json report{{"format", "khess.residual_report"}, {"r1", r1}, {"r2", r2}, {"iterations", sol.iterations}};
    if (exact) report["error_vs_manufactured"] = (sol.phi - *exact).sup_abs();
    write(o, "solution.json", to_json(sol));
    write(o, "residuals.json", report);
    o.summary = report;
    return o;
  }

  Outcome ma_solve() {
    Outcome o;
    const auto bg = background();
    Rng rng = sample_rng(seed(), 2, 0);
    PotentialField F = random_potential(bg, rng, spec_.amplitude);
    MAConfig cfg;
    cfg.tol = spec_.tolerance;
    const MASolution sol = solve_auxiliary_MA(F, spec_.k, cfg);
    json report{{"format", "khess.ma_report"},
                {"residual", sol.residual},
                {"resolved_residual", sol.resolved_residual},
                {"mass", sol.mass},
                {"mass_error", std::abs(sol.mass - bg->volume())},
                {"sup_abs_psi", sol.psi.sup_abs()},
                {"iterations", sol.iterations}};
    write(o, "F.json", field_to_json(F));
    write(o, "ma_solution.json", to_json(sol));
    write(o, "ma_report.json", report);
    o.summary = report;
    return o;
  }

  Outcome estimate_sweep() {
    Outcome o;
    EstimateFamilyConfig cfg;
    cfg.n = spec_.n;
    cfg.k = spec_.k;
    cfg.grid = spec_.grid;
    cfg.shapes = spec_.shapes;
    cfg.amplitudes = spec_.amplitudes;
    cfg.epsilon = spec_.epsilon;
    cfg.seed = seed();
    cfg.tolerance = spec_.tolerance;
    const auto family = estimate_family(cfg);
    const EstimatePatterns p = check_estimate_patterns(family);
    double worst = 0.0;
    json instances = json::array();
    for (const auto& f : family) {
      worst = std::max(worst, f.solve_error);
      json r = to_json(f.report);
      r["instance_id"] = f.instance_id;
      r["shape"] = f.shape;
      r["fraction"] = f.fraction;
      r["amplitude"] = f.amplitude;
      r["solve_error"] = f.solve_error;
      r["r2"] = f.r2;
      instances.push_back(r);
    }
    write(o, "estimate_table.csv", estimate_table(family, spec_.n, spec_.k, spec_.grid));
    write(o, "estimate_instances.json", json{{"format", "khess.estimate_family"}, {"instances", instances}});
    o.summary = json{{"instances", p.instances},
                     {"max_solve_error", worst},
                     {"entropy_controls_lemma2", {{"pass", p.a_pass},
                                                  {"lower_half_max", p.a_lower_max},
                                                  {"upper_half_max", p.a_upper_max},
                                                  {"spearman", p.a_spearman}}},
                     {"phi_controls_infF", {{"pass", p.b_pass},
                                            {"lower_half_min", p.b_lower_min},
                                            {"upper_half_min", p.b_upper_min},
                                            {"spearman", p.b_spearman}}}};
    return o;
  }

  Outcome energy_scan() {
    Outcome o;
    const auto bg = background();
    Rng rng = sample_rng(seed(), 3, 0);
    const PotentialField phi = admissible_potential(bg, rng, spec_.amplitude, spec_.k, "energy_scan");
    const double h = 1e-4;
    const auto mu = [&](double t) { return mu_k(t * phi, spec_.lambda, spec_.k).mu_k; };
    CsvTable t(kEnergyColumns);
    double worst = 0.0;
    for (int i = 0; i <= spec_.time_steps; ++i) {
      const double s = static_cast<double>(i) / spec_.time_steps;
      const double value = mu(s);
      const double formula = first_variation(evaluate_state(s * phi, spec_.k), phi, spec_.lambda);
      const double diff = (mu(s + h) - mu(s - h)) / (2.0 * h);
      worst = std::max(worst, std::abs(diff - formula));
      t.add_row({format_double(s), format_double(value), format_double(formula), format_double(diff)});
    }
    write(o, "phi.json", field_to_json(phi));
    write(o, "energy_scan.csv", t);
    o.summary = json{{"samples", spec_.time_steps + 1}, {"difference_step", h}, {"max_abs_mismatch", worst}};
    return o;
  }

  Outcome geodesic() {
    Outcome o;
    const auto bg = background();
    Rng rng0 = sample_rng(seed(), 4, 0), rng1 = sample_rng(seed(), 4, 1);
    const PotentialField phi0 = admissible_potential(bg, rng0, spec_.amplitude, spec_.k, "geodesic");
    const PotentialField phi1 = admissible_potential(bg, rng1, spec_.amplitude, spec_.k, "geodesic");
    GeodesicConfig cfg;
    cfg.k = spec_.k;
    cfg.time_steps = spec_.time_steps;
    cfg.tol = spec_.tolerance;
    cfg.log = [this](const std::string& line) { log_(line); };
    const GeodesicPath g = solve_geodesic(phi0, phi1, spec_.epsilon, cfg);
    CsvTable t(kGeodesicColumns);
    for (std::size_t i = 1; i + 1 < g.u.size(); ++i) {
      PotentialPath local;
      local.samples = {g.u.samples[i - 1], g.u.samples[i], g.u.samples[i + 1]};
      local.t0 = g.u.time(i - 1);
      local.h = g.u.h;
      t.add_row({format_double(g.u.time(i)), format_double(g.energies[i - 1]),
                 format_double(geodesic_residual(local, spec_.k))});
    }
    write(o, "geodesic.json", to_json(g));
    write(o, "geodesic.csv", t);
    o.summary = json{{"epsilon", g.epsilon},
                     {"geodesic_residual", g.residual},
                     {"equation_residual", g.equation_residual},
                     {"iterations", g.iterations}};
    return o;
  }

  Outcome curvature_sweep() {
    Outcome o;
    const auto bg = background();
    const auto count = static_cast<std::size_t>(spec_.samples);
    std::vector<double> value(count), margin(count);
    parallel_for(count, [&](std::size_t i) {
      Rng rng = sample_rng(seed(), 5, i);
      const PotentialField u = admissible_potential(bg, rng, spec_.amplitude, spec_.k, "curvature_sweep");
      const PotentialField X = random_potential(bg, rng, 1.0);
      const PotentialField Y = random_potential(bg, rng, 1.0);
      const HessianState state = evaluate_state(u, spec_.k);
      value[i] = curvature_terms(state, X, Y).total();
      margin[i] = kCurvatureTolerance * curvature_scale(state, X, Y) - value[i];
    });
    CsvTable t(kCurvatureColumns);
    std::size_t violations = 0;
    double max_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < count; ++i) {
      t.add_row({std::to_string(i), std::to_string(spec_.n), std::to_string(spec_.k), format_double(value[i]),
                 format_double(margin[i])});
      violations += margin[i] < 0.0 ? 1 : 0;
      max_value = std::max(max_value, value[i]);
    }
    write(o, "curvature.csv", t);
    o.summary = json{{"samples", count}, {"violations", violations}};
    if (count > 0) o.summary["max_value"] = max_value;
    return o;
  }

  Outcome inequality_sweep() {
    Outcome o;
    const int n = spec_.n, k = spec_.k;
    const auto count = static_cast<std::size_t>(spec_.samples);
    std::vector<std::vector<std::string>> rows(count);
    std::vector<int> bad(count, 0);
    parallel_for(count, [&](std::size_t s) {
      Rng rng = sample_rng(seed(), 6, s);
      const auto lambda = random_cone_vector(n, k, rng);
      const auto mu = random_cone_vector(n, k, rng);
      const auto real = random_real_vector(n, rng);
      const std::span<const double> l(lambda);
      double min_grad = std::numeric_limits<double>::infinity();
      for (int i = 0; i < n; ++i) min_grad = std::min(min_grad, sigma_raw<double>(k - 1, l, i));
      double l22 = -std::numeric_limits<double>::infinity();
      bool newton = true;
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          if (k >= 2) l22 = std::max(l22, lemma22_coefficient<double>(k, i, j, l));
          if (k >= 2) newton = newton && newton_check<double>(k, i, j, std::span<const double>(real));
        }
      const double garding = garding_ratio(k, mu, lambda);
      bad[s] = (min_grad <= 0.0 || l22 > 0.0 || !newton || garding < garding_constant(n, k) * (1 - 1e-12)) ? 1 : 0;
      rows[s] = {std::to_string(s),
                 std::to_string(n),
                 std::to_string(k),
                 format_double(sigma_raw<double>(k, l)),
                 format_double(min_grad),
                 std::isfinite(l22) ? format_double(l22) : "",
                 newton ? "1" : "0",
                 format_double(garding),
                 format_double(detG_lower_bound_ratio(k, lambda))};
    });
    CsvTable t(kInequalityColumns);
    for (const auto& r : rows) t.add_row(r);
    write(o, "inequalities.csv", t);
    o.summary = json{{"samples", count}, {"violations", std::accumulate(bad.begin(), bad.end(), 0)}};
    return o;
  }

  const ExperimentSpec& spec_;
  std::filesystem::path dir_;
  ProgressLog log_;
};

}  // namespace

std::string to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKinds)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind kind_from_string(const std::string& s) {
  for (const auto& [k, name] : kKinds)
    if (s == name) return k;
  std::string all;
  for (const auto& [k, name] : kKinds) all += (all.empty() ? "" : ", ") + std::string(name);
  throw SpecError("unknown kind '" + s + "' (expected one of " + all + ")");
}

bool is_randomized(ExperimentKind kind) { return kind != ExperimentKind::solve; }

ExperimentSpec parse_spec(const json& j) {
  check(j.is_object(), "a spec must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!key.empty() && key.front() == '_') continue;
    check(std::find(kSpecKeys.begin(), kSpecKeys.end(), key) != kSpecKeys.end(), "unknown spec key '" + key + "'");
  }
  check(j.contains("kind"), "spec key 'kind' is required");
  ExperimentSpec s;
  s.raw = j;
  s.kind = kind_from_string(get_key<std::string>(j, "kind", ""));
  s.n = get_key<int>(j, "n", s.n);
  s.k = get_key<int>(j, "k", s.k);
  s.grid = get_key<int>(j, "grid", s.grid);
  if (j.contains("seed") && !j.at("seed").is_null()) {
    const json& v = j.at("seed");
    check(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
          "spec key 'seed' must be a non-negative integer");
    s.seed = j.at("seed").get<std::uint64_t>();
  }
  s.tolerance = get_key<double>(j, "tolerance", s.tolerance);
  if (j.contains("alpha")) s.alpha = parse_twist(j.at("alpha"));
  s.lambda = get_key<double>(j, "lambda", s.lambda);
  s.epsilon = get_key<double>(j, "epsilon", s.epsilon);
  s.amplitude = get_key<double>(j, "amplitude", s.amplitude);
  s.samples = get_key<int>(j, "samples", s.samples);
  s.time_steps = get_key<int>(j, "time_steps", s.time_steps);
  s.shapes = get_key<int>(j, "shapes", s.shapes);
  s.amplitudes = get_key<int>(j, "amplitudes", s.amplitudes);
  s.output = get_key<std::string>(j, "output", s.output);

  const int nmax = s.kind == ExperimentKind::inequality_sweep ? kMaxPointwiseDim : kMaxExperimentDim;
  check(s.n >= 1 && s.n <= nmax, "n = " + std::to_string(s.n) + " is outside [1, " + std::to_string(nmax) + "] for kind " +
                                     to_string(s.kind));
  check(s.k >= 1 && s.k <= s.n, "k = " + std::to_string(s.k) + " must satisfy 1 <= k <= n = " + std::to_string(s.n));
  check(s.grid >= 2 && s.grid <= kMaxGrid, "grid = " + std::to_string(s.grid) + " is outside [2, 64]");
  check(s.tolerance > 0.0 && std::isfinite(s.tolerance), "tolerance must be positive");
  check(std::isfinite(s.lambda), "lambda must be finite");
  check(s.epsilon > 0.0 && std::isfinite(s.epsilon), "epsilon must be positive");
  check(s.amplitude >= 0.0 && std::isfinite(s.amplitude), "amplitude must be finite and >= 0");
  check(s.samples >= 0, "samples must be >= 0");
  check(s.time_steps >= 2, "time_steps must be >= 2");
  check(s.shapes >= 1 && s.amplitudes >= 1, "shapes and amplitudes must be >= 1");
  check(!s.output.empty(), "output must be a non-empty path");
  const bool needs_seed = is_randomized(s.kind) || s.alpha.type == "manufactured";
  check(!needs_seed || s.seed.has_value(),
        "kind " + to_string(s.kind) + (s.kind == ExperimentKind::solve ? " with a manufactured alpha" : "") +
            " draws random data: add an integer 'seed' to the spec");
  return s;
}

json spec_to_json(const ExperimentSpec& s) {
  json j{{"kind", to_string(s.kind)}, {"n", s.n}, {"k", s.k}, {"grid", s.grid}};
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
  j["tolerance"] = s.tolerance;
  j["alpha"] = json{{"type", s.alpha.type}, {"scale", s.alpha.scale}, {"amplitude", s.alpha.amplitude}};
  j["lambda"] = s.lambda;
  j["epsilon"] = s.epsilon;
  j["amplitude"] = s.amplitude;
  j["samples"] = s.samples;
  j["time_steps"] = s.time_steps;
  j["shapes"] = s.shapes;
  j["amplitudes"] = s.amplitudes;
  j["output"] = s.output;
  return j;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  const json j = read_json(path);
  if (j.is_object() && j.value("format", std::string()) == "khess.manifest") {
    if (!j.contains("spec")) throw SpecError(path.string() + ": manifest without a 'spec' member");
    return parse_spec(j.at("spec"));
  }
  return parse_spec(j);
}

RunResult run_experiment(const ExperimentSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.directory = spec.output;
  std::filesystem::create_directories(result.directory);
  result.manifest = result.directory / "manifest.json";

  json manifest{{"format", "khess.manifest"},
                {"version", kVersion},
                {"compiler", compiler_string()},
                {"workers", worker_count()},
                {"spec", spec_to_json(spec)}};
  Outcome outcome;
  try {
    Runner runner(spec, result.directory);
    outcome = runner.run();
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    manifest["artifacts"] = json::array({"trace.log"});
    manifest["timings"] = {
        {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
    write_json(result.manifest, manifest);
    throw;
  }
  outcome.artifacts.push_back("trace.log");
  manifest["status"] = "ok";
  manifest["artifacts"] = outcome.artifacts;
  manifest["summary"] = outcome.summary;
  manifest["timings"] = {
      {"total_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()}};
  write_json(result.manifest, manifest);
  for (const auto& a : outcome.artifacts) result.artifacts.push_back(result.directory / a);
  result.summary = outcome.summary;
  return result;
}

}  // namespace khess
