#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khess/coupled_solver.hpp"
#include "khess/energy.hpp"
#include "khess/krylov.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

using namespace khess;

namespace {

PotentialField sup_normalized(PotentialField u) {
  u += -u.sup();
  return u;
}

PotentialField manufactured_phi(const BackgroundPtr& bg, std::uint64_t seed, double amp) {
  std::mt19937_64 rng(seed);
  return sup_normalized(oracle::sample(bg, oracle::random_trig(rng, 2 * bg->n(), 1, 5, amp)));
}

}  // namespace

TEST_CASE("gmres solves a small nonsymmetric system") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g(0.0, 1.0);
  const int N = 30;
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(N, N) * 4.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) A(i, j) += 0.3 * g(rng);
  Eigen::VectorXd b(N);
  for (int i = 0; i < N; ++i) b(i) = g(rng);
  const Eigen::VectorXd ref = A.partialPivLu().solve(b);
  const LinearOp op = [&](const Vec& x) {
    const Eigen::VectorXd y = A * Eigen::Map<const Eigen::VectorXd>(x.data(), N);
    return Vec(y.data(), y.data() + N);
  };
  const LinearOp id = [](const Vec& x) { return x; };
  Vec x(N, 0.0);
  const Vec bv(b.data(), b.data() + N);
  // A short restart forces several cycles.
  const auto r = gmres(op, id, bv, x, 1e-12, 7, 500);
  CHECK(r.converged);
  for (int i = 0; i < N; ++i) CHECK(x[static_cast<std::size_t>(i)] == doctest::Approx(ref(i)).epsilon(1e-9));
  Vec z(N, 1.0);
  CHECK(gmres(op, id, Vec(N, 0.0), z, 1e-12).converged);
  CHECK(norm2(z) == 0.0);
}

TEST_CASE("zero twist gives the trivial solution") {
  const auto bg = TorusBackground::make(2, 6);
  for (int k = 1; k <= 2; ++k) {
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = k;
    const auto sol = solve_coupled(cfg, TwistForm::zero(2));
    CHECK(sol.phi.sup_abs() == 0.0);
    CHECK(sol.F.sup_abs() == 0.0);
    CHECK(sol.iterations == 0);
    CHECK(sol.r1 == 0.0);
    CHECK(sol.r2 == 0.0);
  }
}

TEST_CASE("manufactured solutions are recovered from a cold start") {
  const auto bg = TorusBackground::make(2, 8);
  for (int k = 1; k <= 2; ++k) {
    const auto phi_star = manufactured_phi(bg, 5, 0.05);
    const auto alpha = manufactured_twist(phi_star, k);
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = k;
    const auto sol = solve_coupled(cfg, alpha);
    CAPTURE(k);
    CHECK((sol.phi - phi_star).sup_abs() < 1e-8);
    CHECK((sol.F - evaluate_state(phi_star, k).f()).sup_abs() < 1e-8);
    CHECK(sol.r1 < 1e-12);
    CHECK(sol.r2 < 1e-8);
    CHECK(sol.phi.sup() == 0.0);
    // Residual certificate from a fresh state.
    const auto [r1, r2] = coupled_residuals(sol.phi, sol.F, sol.alpha, k);
    CHECK(r1 == sol.r1);
    CHECK(r2 == sol.r2);
    CHECK(sol.continuation_trace.back().t == 1.0);
    CHECK(sol.continuation_trace.back().accepted);
  }
}

TEST_CASE("k = 1 matches the direct spectral solution") {
  // For k = 1 the system reduces to F = beta - log mean e^beta and
  // Delta_omega phi = n (e^F - 1).
  const int n = 2;
  const auto bg = TorusBackground::make(n, 12);
  std::mt19937_64 rng(17);
  const auto tp = oracle::random_trig(rng, 2 * n, 1, 5, 0.1);
  const auto beta = oracle::sample(bg, tp);
  std::vector<double> eb(beta.size());
  for (std::size_t p = 0; p < eb.size(); ++p) eb[p] = std::exp(beta[p]);
  const double logmean = std::log(integrate(*bg, eb) / bg->volume());
  PotentialField F = beta;
  F += -logmean;
  PotentialField rhs(bg);
  for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] = n * (std::exp(F[p]) - 1.0);
  const Spectral& sp = bg->spectral();
  std::vector<double> sym(sp.num_modes(), 0.0);
  for (std::size_t s = 0; s < sym.size(); ++s)
    for (int a = 0; a < 2 * n; ++a) sym[s] -= 0.25 * sp.kappa(s, a) * sp.kappa(s, a);
  const auto phi_ref = sup_normalized(solve_symbol(rhs, sym));

  SolveConfig cfg;
  cfg.background = bg;
  cfg.k = 1;
  const auto sol = solve_coupled(cfg, TwistForm{HMat::Zero(n, n), beta});
  CHECK((sol.phi - phi_ref).sup_abs() < 1e-10);
  CHECK((sol.F - F).sup_abs() < 1e-10);
}

TEST_CASE("gauge invariance under constant seed shifts") {
  const auto bg = TorusBackground::make(2, 8);
  const auto phi_star = manufactured_phi(bg, 7, 0.04);
  const auto alpha = manufactured_twist(phi_star, 2);
  const auto seed = manufactured_phi(bg, 8, 0.01);
  SolveConfig cfg;
  cfg.background = bg;
  cfg.k = 2;
  const auto a = solve_coupled(cfg, alpha, seed);
  PotentialField shifted = seed;
  shifted += 5.0;
  const auto b = solve_coupled(cfg, alpha, shifted);
  CHECK((a.phi - b.phi).sup_abs() < 1e-10);
  CHECK((a.F - b.F).sup_abs() < 1e-10);
}

TEST_CASE("a solution is a critical point of the twisted energy") {
  const auto bg = TorusBackground::make(2, 8);
  const auto phi_star = manufactured_phi(bg, 11, 0.04);
  for (int k = 1; k <= 2; ++k) {
    const auto alpha = manufactured_twist(phi_star, k);
    std::mt19937_64 rng(100 + k);
    double worst = 0.0;
    for (int dir = 0; dir < 20; ++dir) {
      const auto u = oracle::sample(bg, oracle::random_trig(rng, 4, 2, 4, 1.0));
      const double h = 1e-3;
      PotentialField p = phi_star, m = phi_star;
      p.axpy(h, u);
      m.axpy(-h, u);
      const double d = (mu_k_twisted(p, alpha, k).mu_k - mu_k_twisted(m, alpha, k).mu_k) / (2 * h);
      worst = std::max(worst, std::abs(d));
    }
    // The centred difference of a critical point is O(h^2) times the
    // third variation; the non-critical scale is O(|u|) ~ 1.
    CAPTURE(k);
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("auxiliary Monge-Ampere equation") {
  const auto bg = TorusBackground::make(2, 8);
  SUBCASE("F = 0 gives psi = 0") {
    const auto s = solve_auxiliary_MA(PotentialField(bg), 1);
    CHECK(s.psi.sup_abs() == 0.0);
    CHECK(s.residual == 0.0);
    CHECK(s.mass == doctest::Approx(bg->volume()).epsilon(1e-14));
  }
  SUBCASE("mass conservation") {
    std::mt19937_64 rng(23);
    for (int rep = 0; rep < 4; ++rep) {
      const auto F = oracle::sample(bg, oracle::random_trig(rng, 4, 1, 5, 0.3 + 0.2 * rep));
      const auto s = solve_auxiliary_MA(F, 1 + rep % 2);
      CHECK(std::abs(s.mass - bg->volume()) < 1e-10);
      CHECK(s.resolved_residual < 1e-10);
      CHECK(s.psi.sup() == 0.0);
      CHECK(detG_field_check(s.psi, 2) > 0.0);
    }
  }
}

TEST_CASE("auxiliary equation with data depending on one variable") {
  // With F = F(x1) and Omega = I the equation is 1 + psi''/4 = rho(x1),
  // solved mode by mode with coefficients from a fine 1D quadrature.
  const int N = 32;
  const auto bg = TorusBackground::make(2, std::vector<int>{N, 4}, HMat::Identity(2, 2));
  const double a = 0.3;
  const auto Ffun = [&](double x) { return a * std::cos(2 * M_PI * x) + 0.1 * std::sin(4 * M_PI * x); };
  const auto F = PotentialField::from_function(bg, [&](const std::vector<double>& x) { return Ffun(x[0]); });
  const int M = 512;
  std::vector<double> rho(M);
  double mean = 0.0;
  for (int i = 0; i < M; ++i) {
    const double f = Ffun(static_cast<double>(i) / M);
    rho[static_cast<std::size_t>(i)] = std::exp(2.0 * f) * std::sqrt(f * f + 1.0);
    mean += rho[static_cast<std::size_t>(i)] / M;
  }
  std::vector<double> psi1(static_cast<std::size_t>(N), 0.0);
  for (int m = 1; m < N / 2; ++m) {
    double c = 0.0, s = 0.0;
    for (int i = 0; i < M; ++i) {
      const double x = static_cast<double>(i) / M;
      c += rho[static_cast<std::size_t>(i)] / mean * std::cos(2 * M_PI * m * x) / M;
      s += rho[static_cast<std::size_t>(i)] / mean * std::sin(2 * M_PI * m * x) / M;
    }
    const double w = -4.0 / (4 * M_PI * M_PI * m * m);
    for (int j = 0; j < N; ++j) {
      const double x = static_cast<double>(j) / N;
      psi1[static_cast<std::size_t>(j)] += 2 * w * (c * std::cos(2 * M_PI * m * x) + s * std::sin(2 * M_PI * m * x));
    }
  }
  const double top = *std::max_element(psi1.begin(), psi1.end());
  const auto s = solve_auxiliary_MA(F, 1);
  double err = 0.0;
  for (std::size_t p = 0; p < bg->num_points(); ++p) {
    const int j = static_cast<int>(std::lround(bg->coordinates(p)[0] * N)) % N;
    err = std::max(err, std::abs(s.psi[p] - (psi1[static_cast<std::size_t>(j)] - top)));
  }
  CHECK(err < 1e-10);
}

TEST_CASE("estimate harness") {
  const auto bg = TorusBackground::make(2, 6);
  SUBCASE("trivial solution") {
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = 2;
    const TwistForm alpha = TwistForm::scaled_omega(*bg, 0.0);
    const auto sol = solve_coupled(cfg, alpha);
    const auto r = estimate_harness(sol, 0.5);
    CHECK(r.lambda_used == 10.0);
    CHECK(r.lemma2_max == 0.0);
    CHECK(r.entropy == 0.0);
    CHECK(r.sup_abs_F == 0.0);
    CHECK(r.sup_abs_phi == 0.0);
    CHECK(r.A_F == doctest::Approx(bg->volume()));
  }
  SUBCASE("lambda uses the omega norm of alpha") {
    const auto phi_star = manufactured_phi(bg, 29, 0.03);
    const auto alpha = manufactured_twist(phi_star, 1);
    SolveConfig cfg;
    cfg.background = bg;
    cfg.k = 1;
    const auto sol = solve_coupled(cfg, alpha);
    const auto r = estimate_harness(sol, 0.5);
    CHECK(r.lambda_used == doctest::Approx(10.0 + alpha_norm(bg, alpha.field(*bg)).sup()));
    CHECK(r.A_F >= r.entropy);
    CHECK(r.inf_F <= 0.0);
    CHECK(r.sup_F >= 0.0);
  }
}

TEST_CASE("det G lower bound on fields") {
  const auto bg = TorusBackground::make(3, 4);
  for (int k = 1; k <= 3; ++k) {
    CHECK(detG_field_check(PotentialField(bg), k) == doctest::Approx(detG_constant(3, k)).epsilon(1e-13));
  }
  std::mt19937_64 rng(31);
  const auto phi = oracle::sample(bg, oracle::random_trig(rng, 6, 1, 5, 0.04));
  CHECK(detG_field_check(phi, 3) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(detG_field_check(phi, 2) > 0.0);
}

TEST_CASE("solver input errors") {
  const auto bg = TorusBackground::make(2, 6);
  SolveConfig cfg;
  cfg.background = bg;
  cfg.k = 3;
  CHECK_THROWS_AS(solve_coupled(cfg, TwistForm::zero(2)), DomainError);
  cfg.k = 1;
  CHECK_THROWS_AS(solve_coupled(cfg, TwistForm::zero(3)), DomainError);
  const auto other = TorusBackground::make(2, 8);
  CHECK_THROWS_AS(solve_coupled(cfg, TwistForm::zero(2), PotentialField(other)), GridMismatch);
  const auto bad = PotentialField::from_function(bg, [](const std::vector<double>& x) {
    return 0.3 * std::cos(2 * M_PI * x[0]);
  });
  CHECK_THROWS_AS(solve_coupled(cfg, TwistForm::zero(2), bad), ConeError);
  SolveConfig none;
  CHECK_THROWS_AS(solve_coupled(none, TwistForm::zero(2)), DomainError);
  CHECK_THROWS_AS(solve_auxiliary_MA(PotentialField(bg), 0), DomainError);
}
