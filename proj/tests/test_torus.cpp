#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khess/hessian_state.hpp"
#include "khess/wedge.hpp"
#include "oracles.hpp"

#include <Eigen/Dense>

using namespace khess;

namespace {

HMat anisotropic_omega(int n) {
  HMat Om = HMat::Identity(n, n);
  for (int i = 0; i < n; ++i) Om(i, i) = 1.0 + 0.3 * i;
  if (n >= 2) {
    Om(0, 1) = cd(0.2, 0.15);
    Om(1, 0) = std::conj(Om(0, 1));
  }
  return Om;
}

double hmat_max_diff(const HermitianField& a, const std::vector<HMat>& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < b.size(); ++p) m = std::max(m, (a.at(p) - b[p]).cwiseAbs().maxCoeff());
  return m;
}

}  // namespace

TEST_CASE("background geometry") {
  const auto bg = TorusBackground::make(2, {6, 8}, anisotropic_omega(2));
  CHECK(bg->num_points() == 6u * 6u * 8u * 8u);
  CHECK(bg->volume() == doctest::Approx(anisotropic_omega(2).determinant().real()));
  const HMat L = bg->chol_inv().inverse();
  CHECK((L * L.adjoint() - bg->omega()).norm() < 1e-14);
  const auto x = bg->coordinates(1);
  CHECK(x[3] == doctest::Approx(1.0 / 8.0));
  CHECK_THROWS_AS(TorusBackground(2, {8, 2}, HMat::Identity(2, 2)), std::invalid_argument);
  HMat bad = HMat::Identity(2, 2);
  bad(1, 1) = -1.0;
  CHECK_THROWS_AS(TorusBackground(2, {8, 8}, bad), std::invalid_argument);
}

TEST_CASE("complex Hessian of constants and single modes") {
  const auto bg = TorusBackground::make(2, 8);
  PotentialField c(bg);
  c += 3.5;
  const auto H0 = complex_hessian(c);
  for (std::size_t p = 0; p < bg->num_points(); ++p) CHECK(H0.at(p).norm() < 1e-14);

  const double eps = 0.1;
  const auto phi = PotentialField::from_function(bg, [&](const std::vector<double>& x) {
    return eps * std::cos(2 * M_PI * x[0]);
  });
  const auto H = complex_hessian(phi);
  double err = 0.0;
  for (std::size_t p = 0; p < bg->num_points(); ++p) {
    const auto x = bg->coordinates(p);
    HMat want = HMat::Zero(2, 2);
    want(0, 0) = 0.25 * (-4 * M_PI * M_PI * eps * std::cos(2 * M_PI * x[0]));
    err = std::max(err, (H.at(p) - want).norm());
  }
  CHECK(err < 1e-12);
}

TEST_CASE("complex Hessian and gradient of resolved trigonometric fields") {
  std::mt19937_64 rng(7);
  for (int n = 1; n <= 3; ++n) {
    const auto bg = TorusBackground::make(n, n == 3 ? 6 : 8);
    const auto tp = oracle::random_trig(rng, 2 * n, 2, 6, 0.7);
    const auto phi = oracle::sample(bg, tp);
    const auto H = complex_hessian(phi);
    const auto g = complex_gradient(phi);
    std::vector<HMat> want;
    double gerr = 0.0;
    for (std::size_t p = 0; p < bg->num_points(); ++p) {
      const auto x = bg->coordinates(p);
      want.push_back(tp.complex_hessian(x, n));
      for (int i = 0; i < n; ++i) {
        const cd gi = 0.5 * cd(tp.first(x, 2 * i), -tp.first(x, 2 * i + 1));
        gerr = std::max(gerr, std::abs(g(p, i) - gi));
      }
    }
    CHECK(hmat_max_diff(H, want) < 1e-11);
    CHECK(gerr < 1e-12);
  }
}

TEST_CASE("spectral convergence on an analytic non-band-limited field") {
  auto f = [](const std::vector<double>& x) { return std::exp(0.4 * std::cos(2 * M_PI * x[0])) * 0.05; };
  auto fxx = [](double x) {
    const double c = std::cos(2 * M_PI * x), s = std::sin(2 * M_PI * x);
    const double w = 2 * M_PI;
    const double e = std::exp(0.4 * c) * 0.05;
    return e * (0.16 * w * w * s * s - 0.4 * w * w * c);
  };
  std::vector<double> errs;
  for (int N : {6, 12, 24}) {
    const auto bg = TorusBackground::make(1, N);
    const auto H = complex_hessian(PotentialField::from_function(bg, f));
    double e = 0.0;
    for (std::size_t p = 0; p < bg->num_points(); ++p) {
      const auto x = bg->coordinates(p);
      e = std::max(e, std::abs(H(p, 0, 0).real() - 0.25 * fxx(x[0])));
    }
    errs.push_back(e);
  }
  MESSAGE("spectral errors: " << errs[0] << " " << errs[1] << " " << errs[2]);
  // Faster than any fixed power: the reduction factor itself grows.
  CHECK(errs[0] / errs[1] > 64.0);
  CHECK(errs[1] / std::max(errs[2], 1e-16) > errs[0] / errs[1]);
  CHECK(errs[2] < 1e-11);
}

TEST_CASE("state at phi = 0") {
  for (int n = 1; n <= 3; ++n) {
    const auto bg = TorusBackground::make(n, std::vector<int>(static_cast<std::size_t>(n), 4), anisotropic_omega(n));
    for (int k = 1; k <= n; ++k) {
      const auto st = evaluate_state(PotentialField(bg, FieldRole::phi), k);
      const HMat want = (static_cast<double>(k) / n) * bg->omega_inv();
      for (std::size_t p = 0; p < bg->num_points(); p += 7) {
        for (double l : st.lambda(p)) CHECK(l == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(st.ratio()[p] == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(st.f()[p]) < 1e-14);
        CHECK((st.G().at(p) - want).norm() < 1e-14);
      }
    }
  }
}

TEST_CASE("state invariants on a random admissible potential") {
  std::mt19937_64 rng(13);
  for (int n = 1; n <= 3; ++n) {
    const auto bg = TorusBackground::make(n, std::vector<int>(static_cast<std::size_t>(n), n == 3 ? 6 : 8),
                                          anisotropic_omega(n));
    const auto phi = oracle::sample(bg, oracle::random_trig(rng, 2 * n, 1, 5, 0.04));
    const auto Hx = complex_hessian(phi);
    for (int k = 1; k <= n; ++k) {
      const auto st = evaluate_state(phi, k);
      double tr_err = 0.0, rec_err = 0.0, det_err = 0.0;
      const auto tr = trace_G(st, omega_phi(phi));
      for (std::size_t p = 0; p < bg->num_points(); ++p) {
        tr_err = std::max(tr_err, std::abs(tr[p] - k));
        const HMat& P = st.frame(p);
        const HMat Pinv = P.inverse();
        RVec l(n);
        for (int i = 0; i < n; ++i) l(i) = st.lambda(p)[static_cast<std::size_t>(i)];
        const HMat rec = Pinv.adjoint() * l.cast<cd>().asDiagonal() * Pinv;
        rec_err = std::max(rec_err, (rec - (bg->omega() + Hx.at(p))).norm());
        if (k == n) {
          const double d = (bg->omega_inv() * (bg->omega() + Hx.at(p))).determinant().real();
          det_err = std::max(det_err, std::abs(st.ratio()[p] - d));
        }
        // G is positive definite inside the cone.
        Eigen::SelfAdjointEigenSolver<HMat> es(st.G().at(p));
        CHECK(es.eigenvalues().minCoeff() > 0.0);
      }
      CHECK(tr_err < 1e-10);
      CHECK(rec_err < 1e-12);
      CHECK(det_err < 1e-13);
    }
  }
}

TEST_CASE("linearization of F at phi = 0") {
  std::mt19937_64 rng(19);
  const int n = 2;
  const auto bg = TorusBackground::make(n, 8);
  const auto u = oracle::sample(bg, oracle::random_trig(rng, 4, 1, 4, 0.1));
  for (int k = 1; k <= n; ++k) {
    const auto lap = laplace_omega(u);
    auto lin_err = [&](double eps) {
      const auto st = evaluate_state(eps * u, k);
      double e = 0.0;
      for (std::size_t p = 0; p < bg->num_points(); ++p)
        e = std::max(e, std::abs(st.f()[p] - eps * (static_cast<double>(k) / n) * lap[p]));
      return e;
    };
    const double e1 = lin_err(1e-2), e2 = lin_err(5e-3);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
    const auto st0 = evaluate_state(PotentialField(bg), k);
    CHECK(oracle::max_abs_diff(laplace_G(st0, u).data, ((static_cast<double>(k) / n) * lap).data) < 1e-12);
  }
}

TEST_CASE("Delta_G integrates to zero against omega_phi^k") {
  std::mt19937_64 rng(37);
  for (int n = 2; n <= 3; ++n) {
    const auto bg = TorusBackground::make(n, n == 2 ? 8 : 6);
    const auto phi = oracle::sample(bg, oracle::random_trig(rng, 2 * n, 1, 5, 0.04));
    const auto u = oracle::sample(bg, oracle::random_trig(rng, 2 * n, 1, 5, 1.0));
    for (int k = 1; k <= n; ++k) {
      const auto st = evaluate_state(phi, k);
      const auto lg = laplace_G(st, u);
      std::vector<double> w(lg.size());
      double scale = 0.0;
      for (std::size_t p = 0; p < w.size(); ++p) {
        w[p] = lg[p] * st.ratio()[p];
        scale = std::max(scale, std::abs(w[p]));
      }
      CHECK(std::abs(integrate(*bg, w)) < 1e-12 * scale);
    }
  }
}

TEST_CASE("self-adjointness defect of the raw contraction") {
  // Assemble Delta_G column by column at low resolution.
  std::mt19937_64 rng(41);
  const auto bg = TorusBackground::make(1, 12);
  const auto phi = oracle::sample(bg, oracle::random_trig(rng, 2, 1, 3, 0.03));
  const auto st = evaluate_state(phi, 1);
  const auto N = static_cast<Eigen::Index>(bg->num_points());
  Eigen::MatrixXd A(N, N), W(N, N);
  for (Eigen::Index c = 0; c < N; ++c) {
    PotentialField e(bg);
    e[static_cast<std::size_t>(c)] = 1.0;
    const auto col = laplace_G(st, e);
    for (Eigen::Index r = 0; r < N; ++r) {
      A(r, c) = col[static_cast<std::size_t>(r)];
      W(r, c) = col[static_cast<std::size_t>(r)] * st.ratio()[static_cast<std::size_t>(r)];
    }
  }
  const double raw = (A - A.transpose()).norm() / A.norm();
  const double weighted = (W - W.transpose()).norm() / W.norm();
  MESSAGE("raw defect " << raw << ", sigma_k-weighted defect " << weighted);
  CHECK(raw > 1e-3);
  CHECK(weighted < 1e-12);
}

TEST_CASE("generalized Ricci curvature") {
  std::mt19937_64 rng(43);
  const int n = 2;
  const auto bg = TorusBackground::make(n, 8);
  CHECK(generalized_ricci(PotentialField(bg), 2).at(5).norm() == 0.0);
  const auto tp = oracle::random_trig(rng, 4, 1, 4, 0.05);
  const auto phi = oracle::sample(bg, tp);
  const auto ric = generalized_ricci(phi, n);
  // Classical Ricci form -ddbar log det(omega + ddbar phi) from the exact Hessian.
  PotentialField logdet(bg);
  for (std::size_t p = 0; p < bg->num_points(); ++p) {
    const HMat A = bg->omega() + tp.complex_hessian(bg->coordinates(p), n);
    logdet[p] = std::log(A.determinant().real());
  }
  auto classical = complex_hessian(logdet);
  classical *= -1.0;
  std::vector<HMat> want;
  for (std::size_t p = 0; p < bg->num_points(); ++p) want.push_back(classical.at(p));
  CHECK(hmat_max_diff(ric, want) < 1e-10);
  for (int k = 1; k <= n; ++k) {
    const auto r = generalized_ricci(phi, k);
    std::vector<double> tr(bg->num_points());
    for (std::size_t p = 0; p < tr.size(); ++p) tr[p] = (bg->omega_inv() * r.at(p)).trace().real();
    CHECK(std::abs(integrate(*bg, tr)) < 1e-13);
  }
}

TEST_CASE("mixed discriminant") {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int n = 1; n <= 4; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<HMat> M;
      for (int i = 0; i < n; ++i) {
        HMat A(n, n);
        for (int r = 0; r < n; ++r)
          for (int c = 0; c < n; ++c) A(r, c) = cd(g(rng), g(rng));
        M.push_back(A + A.adjoint());
      }
      const cd a = mixed_discriminant(M);
      const cd b = oracle::mixed_discriminant_perm(M);
      CHECK(std::abs(a - b) < 1e-12 * (1.0 + std::abs(b)));
    }
    std::vector<HMat> I(static_cast<std::size_t>(n), HMat::Identity(n, n));
    CHECK(std::abs(mixed_discriminant(I) - 1.0) < 1e-14);
  }
}

TEST_CASE("wedge integrals") {
  std::mt19937_64 rng(53);
  for (int n = 2; n <= 3; ++n) {
    const auto bg = TorusBackground::make(n, std::vector<int>(static_cast<std::size_t>(n), n == 2 ? 8 : 6),
                                          anisotropic_omega(n));
    CHECK(wedge_integral(*bg, {WedgeFactor::of(bg->omega(), n)}) == doctest::Approx(bg->volume()).epsilon(1e-14));
    const auto phi = oracle::sample(bg, oracle::random_trig(rng, 2 * n, 1, 5, 0.04));
    const auto wphi = omega_phi(phi);
    const auto alpha = complex_hessian(oracle::sample(bg, oracle::random_trig(rng, 2 * n, 1, 3, 0.3)));
    for (int k = 1; k <= n; ++k) {
      const auto st = evaluate_state(phi, k);
      const auto dens = wedge_density(*bg, {WedgeFactor::of(wphi, k), WedgeFactor::of(bg->omega(), n - k)});
      CHECK(oracle::max_abs_diff(dens, st.ratio().data) < 1e-13);
      CHECK(integrate(*bg, dens) == doctest::Approx(bg->volume()).epsilon(1e-13));
      for (int m = 0; m < n; ++m) {
        const auto d1 = wedge_density(*bg, {WedgeFactor::of(alpha), WedgeFactor::of(wphi, m),
                                            WedgeFactor::of(bg->omega(), n - 1 - m)});
        CHECK(oracle::max_abs_diff(d1, wedge_one_form(st, alpha, m).data) < 1e-13);
      }
      // beta ^ omega_phi^{k-1} ^ omega^{n-k} = (1/k) tr_G(beta) s_k.
      const auto one = wedge_one_form(st, alpha, k - 1);
      const auto tr = trace_G(st, alpha);
      std::vector<double> rhs(tr.size());
      for (std::size_t p = 0; p < rhs.size(); ++p) rhs[p] = tr[p] * st.ratio()[p] / k;
      CHECK(oracle::max_abs_diff(one.data, rhs) < 1e-13);
    }
  }
  const auto bg = TorusBackground::make(2, 4);
  CHECK_THROWS_AS(wedge_density(*bg, {WedgeFactor::of(bg->omega(), 3)}), DomainError);
}

TEST_CASE("alpha_bar") {
  std::mt19937_64 rng(59);
  const int n = 3;
  const auto bg = TorusBackground::make(n, std::vector<int>(3, 6), anisotropic_omega(n));
  for (int k = 1; k <= n; ++k) {
    const auto st0 = evaluate_state(PotentialField(bg), k);
    CHECK(alpha_bar(st0, TwistForm::scaled_omega(*bg, 1.7)) == doctest::Approx(1.7 * k).epsilon(1e-13));
    CHECK(alpha_bar(st0, TwistForm::zero(n)) == 0.0);
  }
  const auto phi = oracle::sample(bg, oracle::random_trig(rng, 6, 1, 5, 0.04));
  TwistForm a{0.5 * bg->omega(), oracle::sample(bg, oracle::random_trig(rng, 6, 1, 3, 0.2))};
  for (int k = 1; k <= n; ++k) {
    const auto st = evaluate_state(phi, k);
    const double ab = alpha_bar(st, a);
    // Compatibility: tr_G alpha - alpha_bar is orthogonal to constants in the s_k measure.
    const auto tr = trace_G(st, a.field(*bg));
    std::vector<double> w(tr.size());
    for (std::size_t p = 0; p < w.size(); ++p) w[p] = (tr[p] - ab) * st.ratio()[p];
    CHECK(std::abs(integrate(*bg, w)) < 1e-13);
    // Equivalent wedge form: k * int alpha ^ omega_phi^{k-1} ^ omega^{n-k} / int s_k.
    const double wedge = wedge_integral(*bg, {WedgeFactor::of(a.field(*bg)), WedgeFactor::of(omega_phi(phi), k - 1),
                                              WedgeFactor::of(bg->omega(), n - k)});
    CHECK(k * wedge / integrate(st.ratio()) == doctest::Approx(ab).epsilon(1e-12));
  }
  CHECK(alpha_sup_norm(*bg, TwistForm::scaled_omega(*bg, 2.0)) == doctest::Approx(2.0 * std::sqrt(3.0)));
}

TEST_CASE("errors") {
  const auto bg = TorusBackground::make(2, 8);
  const auto phi = PotentialField::from_function(bg, [](const std::vector<double>& x) {
    return 0.2 * std::cos(2 * M_PI * x[0]);
  });
  // At x_1 = 0 the Hessian entry is -pi^2/5, so lambda_1 = 1 - 1.97 < 0 there.
  try {
    (void)evaluate_state(phi, 2);
    FAIL("expected ConeError");
  } catch (const ConeError& e) {
    CHECK(bg->coordinates(e.point())[0] == 0.0);
    CHECK(e.lambda()[0] < 0.0);
    CHECK(e.required_k() == 2);
  }
  CHECK_NOTHROW((void)evaluate_state(phi, 1));
  const auto other = TorusBackground::make(2, 6);
  CHECK_THROWS_AS(laplace_G(evaluate_state(PotentialField(bg), 1), PotentialField(other)), GridMismatch);
  CHECK_THROWS_AS(PotentialField(bg) + PotentialField(other), GridMismatch);
}
