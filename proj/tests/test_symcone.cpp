#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "khess/exact.hpp"
#include "khess/symcone.hpp"
#include "oracles.hpp"

#include <random>

using namespace khess;

namespace {

std::vector<double> random_cone_vector(std::mt19937_64& rng, int n, int k) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-1.0, 3.0);
  for (;;) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const double t = shift(rng);
    for (auto& x : v) x = g(rng) + t;
    if (in_cone<double>(k, v)) return v;
  }
}

}  // namespace

TEST_CASE("sigma on small vectors") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(sigma<double>(2, ones) == 3.0);
  CHECK(sigma<double>(0, ones) == 1.0);
  CHECK(sigma<double>(-1, ones) == 0.0);
  const std::vector<double> v{3, -1};
  CHECK(sigma<double>(1, v) == 2.0);
  const std::vector<double> w{2, 1, 0.5, -0.25};
  CHECK(sigma<double>(3, w) == doctest::Approx(oracle::sigma_enum(3, w)).epsilon(1e-15));
  CHECK_THROWS_AS(sigma<double>(4, ones), DomainError);
  CHECK_THROWS_AS(sigma<double>(-2, ones), DomainError);
}

TEST_CASE("sigma_minus drops entries") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(sigma_minus<double>(1, {0}, ones) == 2.0);
  const std::vector<double> v{4, 3, 2, 1};
  CHECK(sigma_minus<double>(0, {1, 2}, v) == 1.0);
  CHECK(sigma_minus<double>(2, {1}, v) == oracle::sigma_enum(2, oracle::drop(v, {1})));
  CHECK_THROWS_AS(sigma_minus<double>(1, {1, 1}, v), DomainError);
  CHECK_THROWS_AS(sigma_minus<double>(3, {0, 1}, v), DomainError);
  CHECK_THROWS_AS(sigma_minus<double>(1, {7}, v), DomainError);
}

TEST_CASE("exact sigma matches subset enumeration for n <= 8") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> ints(-9, 9);
  for (int n = 1; n <= 8; ++n) {
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<mpq_class> v;
      for (int i = 0; i < n; ++i) {
        v.emplace_back(ints(rng), 1 + (ints(rng) + 9) % 5);
        v.back().canonicalize();
      }
      for (int k = 0; k <= n; ++k) {
        CHECK(sigma<mpq_class>(k, v) == oracle::sigma_enum(k, v));
        for (int i = 0; i < n && k + 1 <= n; ++i) {
          CHECK(sigma_minus<mpq_class>(k, {i}, v) == oracle::sigma_enum(k, oracle::drop(v, {i})));
        }
      }
    }
  }
}

TEST_CASE("Euler and deletion identities") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 200; ++rep) {
    const int n = 2 + rep % 5;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = g(rng);
    for (int k = 1; k <= n; ++k) {
      double euler = 0.0;
      for (int i = 0; i < n; ++i) euler += v[static_cast<std::size_t>(i)] * sigma_raw<double>(k - 1, v, i);
      const double sk = sigma_raw<double>(k, v);
      double scale = 1.0;
      for (double x : v) scale *= std::max(1.0, std::abs(x));
      CHECK(std::abs(euler - k * sk) <= 1e-12 * scale * 10);
      for (int i = 0; i < n; ++i) {
        const double del = sigma_raw<double>(k, v, i) + v[static_cast<std::size_t>(i)] * sigma_raw<double>(k - 1, v, i);
        CHECK(std::abs(del - sk) <= 1e-12 * scale * 10);
      }
    }
  }
  // Exact mode.
  std::vector<mpq_class> q{mpq_class(3, 2), mpq_class(-1, 3), mpq_class(2), mpq_class(5, 7)};
  for (int k = 1; k <= 4; ++k) {
    mpq_class e = 0;
    for (int i = 0; i < 4; ++i) e += q[static_cast<std::size_t>(i)] * sigma_raw<mpq_class>(k - 1, q, i);
    CHECK(e == k * sigma<mpq_class>(k, q));
  }
}

TEST_CASE("cone_class") {
  CHECK(cone_class<double>(std::vector<double>{1, 1, 1}).k_max == 3);
  CHECK(cone_class<double>(std::vector<double>{3, -1}).k_max == 1);
  CHECK(cone_class<double>(std::vector<double>{-1, -1}).k_max == 0);
  // A margin rejects nearly degenerate spectra.
  CHECK(cone_class<double>(std::vector<double>{1, 1e-12}, 1e-10).k_max == 1);
  CHECK(cone_class<double>(std::vector<double>{1, 1e-12}).k_max == 2);

  std::mt19937_64 rng(17);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int rep = 0; rep < 20000; ++rep) {
    const int n = 1 + rep % 6;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = g(rng);
    const int before = cone_class<double>(v).k_max;
    std::vector<double> w = v;
    w.push_back(1e3);
    // Appending a dominant positive entry never lowers the class.
    CHECK(cone_class<double>(w).k_max >= before);
    const auto c = cone_class<double>(v);
    for (int j = 1; j <= c.k_max; ++j) CHECK(sigma_raw<double>(j, v) > 0.0);
  }
}

TEST_CASE("garding pairing") {
  const std::vector<double> mu{1.0, 2.0, 0.5};
  const std::vector<double> lam{0.3, 1.1, 2.0};
  CHECK(garding_pairing<double>(1, mu, lam) == doctest::Approx(3.5));
  for (int k = 1; k <= 3; ++k) {
    CHECK(garding_pairing<double>(k, lam, lam) == doctest::Approx(k * sigma<double>(k, lam)));
    // Equality case of the sharp constant.
    CHECK(garding_ratio(k, lam, lam) == doctest::Approx(garding_constant(3, k)));
  }
  CHECK_THROWS_AS(garding_pairing<double>(2, std::vector<double>{1, -2, 0}, lam), DomainError);

  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 5000; ++rep) {
    const int n = 2 + rep % 4;
    const int k = 1 + rep % n;
    const auto a = random_cone_vector(rng, n, k);
    const auto b = random_cone_vector(rng, n, k);
    CHECK(garding_ratio(k, a, b) >= garding_constant(n, k) * (1 - 1e-12));
  }
}

TEST_CASE("pair coefficient is non-positive on the cone") {
  const std::vector<double> ones{1, 1, 1};
  CHECK(lemma22_coefficient<double>(2, 0, 1, ones) == doctest::Approx(-1.0 / 3.0));
  const std::vector<double> v{0.5, 2.0, 1.5};
  CHECK(lemma22_coefficient<double>(1, 0, 2, v) == doctest::Approx(-1.0 / 4.0));
  CHECK_THROWS_AS(lemma22_coefficient<double>(2, 1, 1, ones), DomainError);
  CHECK_THROWS_AS(lemma22_coefficient<double>(2, 0, 1, std::vector<double>{1, -1, 0}), DomainError);

  // k = n vanishes identically, and exact arithmetic sees a true zero.
  const std::vector<double> w{0.7, 1.9, 3.25};
  const auto z = exact::to_scaled_integers(w);
  CHECK(lemma22_numerator<mpz_class>(3, 0, 2, z) == 0);

  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 5000; ++rep) {
    const int n = 2 + rep % 5;
    const int k = 1 + (rep / 5) % n;
    const auto l = random_cone_vector(rng, n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) {
          const double c = lemma22_coefficient<double>(k, i, j, l);
          if (c > -1e-9) {
            CHECK(exact::sign(lemma22_numerator<mpz_class>(k, i, j, exact::to_scaled_integers(l))) <= 0);
          } else {
            CHECK(c <= 0.0);
          }
        }
  }
}

TEST_CASE("Newton inequality") {
  const std::vector<double> ones{1, 1, 1, 1};
  CHECK(newton_check<double>(2, 0, 1, ones));
  CHECK(newton_normalized_gap(2, 0, 1, ones) == doctest::Approx(0.0));
  // n = 2 leaves an empty vector.
  const std::vector<double> two{3, -4};
  for (int k = 0; k <= 3; ++k) CHECK(newton_check<double>(k, 0, 1, two));
  CHECK_THROWS_AS(newton_check<double>(2, 1, 1, ones), DomainError);

  std::mt19937_64 rng(29);
  std::normal_distribution<double> g(0.0, 2.0);
  for (int rep = 0; rep < 5000; ++rep) {
    const int n = 2 + rep % 5;
    std::vector<double> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = g(rng);
    const auto z = exact::to_scaled_integers(v);
    for (int k = 0; k <= n; ++k) {
      CHECK(newton_check<double>(k, 0, n - 1, v));
      CHECK(newton_check<mpz_class>(k, 0, n - 1, z));
    }
  }
}

TEST_CASE("det G lower bound ratio") {
  for (int n = 1; n <= 5; ++n)
    for (int k = 1; k <= n; ++k) {
      const std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
      const double direct = std::pow(static_cast<double>(k) / n, n) *
                            std::pow(binomial(n, k), static_cast<double>(n) / k);
      CHECK(detG_lower_bound_ratio(k, ones) == doctest::Approx(direct).epsilon(1e-13));
      CHECK(detG_constant(n, k) == doctest::Approx(direct).epsilon(1e-13));
    }
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int n = 1 + rep % 5;
    std::vector<double> l(static_cast<std::size_t>(n));
    for (auto& x : l) x = u(rng);
    CHECK(std::abs(detG_lower_bound_ratio(n, l) - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(detG_lower_bound_ratio(2, std::vector<double>{1, -3}), DomainError);
}
