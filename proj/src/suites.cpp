#include "khess/suites.hpp"

#include "khess/energy.hpp"
#include "khess/exact.hpp"
#include "khess/experiment.hpp"
#include "khess/geodesic.hpp"
#include "khess/parallel.hpp"
#include "khess/sampling.hpp"
#include "khess/symcone.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>

namespace khess {

namespace {

/// Collects statistics and keeps the failure with the smallest sample index,
/// so the report does not depend on scheduling.
class Collector {
 public:
  void fail(std::size_t index, json sample) {
    const std::lock_guard<std::mutex> lock(mutex_);
    ++failures_;
    if (!first_ || index < first_index_) {
      first_index_ = index;
      first_ = std::move(sample);
    }
  }
  [[nodiscard]] std::size_t failures() const { return failures_; }
  [[nodiscard]] const std::optional<json>& first() const { return first_; }

 private:
  std::mutex mutex_;
  std::size_t failures_ = 0;
  std::size_t first_index_ = 0;
  std::optional<json> first_;
};

SuiteResult finish(const std::string& name, std::size_t samples, json stats, const Collector& c) {
  SuiteResult r;
  r.suite = name;
  r.pass = c.failures() == 0;
  r.report = json{{"suite", name}, {"pass", r.pass}, {"samples", samples}, {"failures", c.failures()},
                  {"statistics", std::move(stats)}};
  if (c.first()) r.report["failure"] = *c.first();
  return r;
}

SuiteResult vacuous(const std::string& name) {
  SuiteResult r;
  r.suite = name;
  r.pass = true;
  r.report = json{{"suite", name}, {"pass", true}, {"samples", 0}, {"failures", 0},
                  {"statistics", json::object()}, {"note", "no samples"}};
  return r;
}

std::string key(int n, int k) { return "n" + std::to_string(n) + "k" + std::to_string(k); }

double sup_norm(const std::vector<double>& v) {
  double m = 1.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Cone structure: sigma_{k-1,i} > 0 on Gamma_k, Newton on arbitrary vectors.
SuiteResult cone_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  for (int n = 1; n <= kMaxPointwiseDim; ++n)
    for (int k = 1; k <= n; ++k) {
      std::vector<double> min_grad(samples);
      parallel_for(samples, [&](std::size_t s) {
        Rng rng = sample_rng(seed, static_cast<std::uint64_t>(10 * n + k), s);
        const auto lambda = random_cone_vector(n, k, rng);
        const auto real = random_real_vector(n, rng);
        const std::span<const double> l(lambda);
        const double scale = std::pow(sup_norm(lambda), k - 1);
        double m = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
          const double g = sigma_raw<double>(k - 1, l, i);
          m = std::min(m, g / scale);
          if (!(g > 0.0)) c.fail(s, {{"check", "sigma_{k-1,i} > 0"}, {"n", n}, {"k", k}, {"i", i}, {"lambda", lambda}});
        }
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j)
            if (k >= 2 && !newton_check<double>(k, i, j, std::span<const double>(real)))
              c.fail(s, {{"check", "newton"}, {"n", n}, {"k", k}, {"i", i}, {"j", j}, {"vector", real}});
        min_grad[s] = m;
      });
      stats[key(n, k)] = {{"min_normalized_sigma_km1", *std::min_element(min_grad.begin(), min_grad.end())}};
    }
  return finish("cone", samples, stats, c);
}

// Garding pairing against the implemented constant.
SuiteResult garding_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  for (int n = 1; n <= kMaxPointwiseDim; ++n)
    for (int k = 1; k <= n; ++k) {
      std::vector<double> ratio(samples);
      parallel_for(samples, [&](std::size_t s) {
        Rng rng = sample_rng(seed, static_cast<std::uint64_t>(100 + 10 * n + k), s);
        const auto lambda = random_cone_vector(n, k, rng);
        const auto mu = random_cone_vector(n, k, rng);
        ratio[s] = garding_ratio(k, mu, lambda);
        if (!(ratio[s] >= garding_constant(n, k) * (1.0 - 1e-12)))
          c.fail(s, {{"check", "garding"}, {"n", n}, {"k", k}, {"mu", mu}, {"lambda", lambda}, {"ratio", ratio[s]}});
      });
      stats[key(n, k)] = {{"constant", garding_constant(n, k)},
                          {"min_ratio", *std::min_element(ratio.begin(), ratio.end())}};
    }
  return finish("garding", samples, stats, c);
}

// Non-positivity of the pair coefficient, with exact recheck near zero.
SuiteResult lemma22_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  for (int n = 2; n <= kMaxPointwiseDim; ++n)
    for (int k = 2; k <= n; ++k) {
      std::vector<double> worst(samples);
      std::vector<int> rechecked(samples, 0);
      parallel_for(samples, [&](std::size_t s) {
        Rng rng = sample_rng(seed, static_cast<std::uint64_t>(200 + 10 * n + k), s);
        const auto lambda = random_cone_vector(n, k, rng);
        const std::span<const double> l(lambda);
        const double scale = std::pow(sup_norm(lambda), k - 2);
        double w = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
          for (int j = i + 1; j < n; ++j) {
            const double v = lemma22_coefficient<double>(k, i, j, l) / scale;
            w = std::max(w, v);
            if (v > -1e-9) {
              ++rechecked[s];
              const auto z = exact::to_scaled_integers(lambda);
              if (lemma22_numerator<mpz_class>(k, i, j, std::span<const mpz_class>(z)) > 0)
                c.fail(s, {{"check", "pair coefficient <= 0"}, {"n", n}, {"k", k}, {"i", i}, {"j", j},
                           {"lambda", lambda}, {"value", v}});
            }
          }
        worst[s] = w;
      });
      int total = 0;
      for (int r : rechecked) total += r;
      stats[key(n, k)] = {{"max_normalized_coefficient", *std::max_element(worst.begin(), worst.end())},
                          {"exact_rechecks", total}};
    }
  return finish("lemma22", samples, stats, c);
}

// First and second variation formulas against centred differences.
SuiteResult variations_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  const std::vector<std::pair<int, int>> cases{{2, 1}, {2, 2}, {3, 2}, {3, 3}};
  for (const auto& [n, k] : cases) {
    // The formulas hold on the grid only up to aliasing of the nonlinear
    // integrands; at n = 3 the coarser grid needs a gentler path.
    const auto bg = TorusBackground::make(n, n == 2 ? 8 : 6);
    const double amp = n == 2 ? 0.03 : 0.01;
    double min_order = std::numeric_limits<double>::infinity();
    double max_rel = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
      Rng rng = sample_rng(seed, static_cast<std::uint64_t>(300 + 10 * n + k), s);
      const PotentialField A = random_potential(bg, rng, amp);
      const PotentialField B = random_potential(bg, rng, amp);
      const auto path = [&](double t) {
        PotentialField p = A;
        p.axpy(t, B);
        p.axpy(t * t, A);
        return p;
      };
      for (int which : {1, 2}) {
        const auto r = variation_refinement(path, 0.3, 0.2, 4, 0.5, k, which);
        min_order = std::min(min_order, r.min_order());
        max_rel = std::max(max_rel, r.relative.back());
        if (r.min_order() < 1.9)
          c.fail(s, {{"check", "variation order"}, {"n", n}, {"k", k}, {"variation", which},
                     {"A", field_to_json(A)}, {"B", field_to_json(B)}, {"residual", r.residual}, {"order", r.order}});
      }
    }
    stats[key(n, k)] = {{"min_order", min_order}, {"finest_relative_residual", max_rel}};
  }
  return finish("variations", samples, stats, c);
}

// Non-positivity of the curvature on random triples.
SuiteResult curvature_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  for (int n = 1; n <= 3; ++n)
    for (int k = 1; k <= n; ++k) {
      const auto bg = TorusBackground::make(n, n == 3 ? 4 : 6);
      std::vector<double> rel(samples);
      parallel_for(samples, [&](std::size_t s) {
        Rng rng = sample_rng(seed, static_cast<std::uint64_t>(400 + 10 * n + k), s);
        PotentialField u = random_potential(bg, rng, 0.02);
        const PotentialField X = random_potential(bg, rng, 1.0);
        const PotentialField Y = random_potential(bg, rng, 1.0);
        const HessianState state = evaluate_state(u, k);
        const double value = curvature_terms(state, X, Y).total();
        const double scale = curvature_scale(state, X, Y);
        rel[s] = scale > 0.0 ? value / scale : value;
        if (value > kCurvatureTolerance * scale)
          c.fail(s, {{"check", "curvature <= 0"}, {"n", n}, {"k", k}, {"u", field_to_json(u)},
                     {"X", field_to_json(X)}, {"Y", field_to_json(Y)}, {"value", value}, {"scale", scale}});
      });
      stats[key(n, k)] = {{"max_relative_value", *std::max_element(rel.begin(), rel.end())}};
    }
  return finish("curvature", samples, stats, c);
}

// Regularized geodesics between random endpoints.
SuiteResult geodesic_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  const auto bg = TorusBackground::make(2, 6);
  double worst = 0.0, worst_drift = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = sample_rng(seed, 500, s);
    const PotentialField a = random_potential(bg, rng, 0.03);
    const PotentialField b = random_potential(bg, rng, 0.03);
    GeodesicConfig cfg;
    cfg.k = 1 + static_cast<int>(s % 2);
    cfg.time_steps = 8;
    const GeodesicPath g = solve_geodesic(a, b, 1e-6, cfg);
    const auto [lo, hi] = std::minmax_element(g.energies.begin(), g.energies.end());
    const double drift = (*hi - *lo) / std::max(*hi, 1e-300);
    worst = std::max(worst, g.residual);
    worst_drift = std::max(worst_drift, drift);
    bool monotone = true;
    for (std::size_t i = 1; i < g.trace.size(); ++i)
      monotone = monotone && g.trace[i].geodesic_residual <= g.trace[i - 1].geodesic_residual * (1 + 1e-9);
    if (g.residual > 1e-5 || drift > 1e-3 || !monotone)
      c.fail(s, {{"check", "geodesic residual"}, {"k", cfg.k}, {"phi0", field_to_json(a)}, {"phi1", field_to_json(b)},
                 {"residual", g.residual}, {"energy_drift", drift}, {"monotone", monotone}});
  }
  stats["max_geodesic_residual"] = worst;
  stats["max_energy_drift"] = worst_drift;
  return finish("geodesic", samples, stats, c);
}

// Manufactured coupled solutions and the auxiliary equation.
SuiteResult solver_suite(std::size_t samples, std::uint64_t seed) {
  json stats = json::object();
  Collector c;
  const auto bg = TorusBackground::make(2, 8);
  double worst = 0.0, worst_mass = 0.0, worst_psi0 = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    Rng rng = sample_rng(seed, 600, s);
    const int k = 1 + static_cast<int>(s % 2);
    PotentialField phi_star = random_potential(bg, rng, 0.05);
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = k;
    const CoupledSolution sol = solve_coupled(cfg, manufactured_twist(phi_star, k));
    phi_star += -phi_star.sup();
    const double err = (sol.phi - phi_star).sup_abs();
    worst = std::max(worst, err);
    const PotentialField F = random_potential(bg, rng, 0.3);
    const MASolution ma = solve_auxiliary_MA(F, k);
    const double mass = std::abs(ma.mass - bg->volume()) / bg->volume();
    worst_mass = std::max(worst_mass, mass);
    const MASolution zero = solve_auxiliary_MA(PotentialField(bg), k);
    worst_psi0 = std::max(worst_psi0, zero.psi.sup_abs());
    if (err > 1e-8 || mass > 1e-10 || zero.psi.sup_abs() > 1e-12)
      c.fail(s, {{"check", "solver"}, {"k", k}, {"phi_star", field_to_json(phi_star)}, {"F", field_to_json(F)},
                 {"phi_error", err}, {"mass_error", mass}, {"psi_for_zero_F", zero.psi.sup_abs()}});
  }
  stats["max_phi_error"] = worst;
  stats["max_relative_mass_error"] = worst_mass;
  stats["max_psi_for_zero_F"] = worst_psi0;
  return finish("solver", samples, stats, c);
}

// Monotone patterns of the estimate table.
SuiteResult estimate_suite(std::size_t samples, std::uint64_t seed) {
  EstimateFamilyConfig cfg;
  cfg.seed = seed;
  cfg.shapes = static_cast<int>(std::max<std::size_t>(samples, 1));
  cfg.amplitudes = 6;
  const auto family = estimate_family(cfg);
  const EstimatePatterns p = check_estimate_patterns(family);
  Collector c;
  double worst = 0.0;
  for (const auto& f : family) worst = std::max(worst, f.solve_error);
  json stats{{"instances", family.size()},
             {"max_solve_error", worst},
             {"entropy_spearman", p.a_spearman},
             {"entropy_lower_half_max", p.a_lower_max},
             {"entropy_upper_half_max", p.a_upper_max},
             {"phi_spearman", p.b_spearman},
             {"phi_lower_half_min", p.b_lower_min},
             {"phi_upper_half_min", p.b_upper_min}};
  if (!p.a_pass || !p.b_pass || worst > 1e-8) {
    json rows = json::array();
    for (const auto& f : family) rows.push_back(to_json(f.report));
    c.fail(0, {{"check", "estimate patterns"}, {"seed", seed}, {"entropy_pattern", p.a_pass},
               {"phi_pattern", p.b_pass}, {"instances", rows}});
  }
  return finish("estimate", samples, stats, c);
}

struct SuiteEntry {
  std::size_t default_samples;
  std::function<SuiteResult(std::size_t, std::uint64_t)> run;
};

const std::map<std::string, SuiteEntry>& registry() {
  static const std::map<std::string, SuiteEntry> r{
      {"cone", {20000, cone_suite}},         {"garding", {20000, garding_suite}},
      {"lemma22", {20000, lemma22_suite}},   {"variations", {1, variations_suite}},
      {"curvature", {30, curvature_suite}},  {"geodesic", {2, geodesic_suite}},
      {"solver", {2, solver_suite}},         {"estimate", {2, estimate_suite}},
  };
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"cone",      "garding",  "lemma22", "variations",
                                              "curvature", "geodesic", "solver",  "estimate"};
  return names;
}

SuiteResult run_suite(const std::string& name, const SuiteOptions& options) {
  const auto it = registry().find(name);
  if (it == registry().end()) {
    std::string all;
    for (const auto& s : suite_names()) all += (all.empty() ? "" : ", ") + s;
    throw std::invalid_argument("unknown suite '" + name + "' (expected one of " + all + ")");
  }
  const std::size_t samples = options.samples.value_or(it->second.default_samples);
  if (samples == 0) return vacuous(name);
  return it->second.run(samples, options.seed);
}

}  // namespace khess
