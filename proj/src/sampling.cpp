#include "khess/sampling.hpp"

#include "khess/symcone.hpp"

#include <algorithm>
#include <cmath>

namespace khess {

Rng sample_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

std::vector<double> random_cone_vector(int n, int k, Rng& rng) {
  if (k < 1 || k > n) throw DomainError("random_cone_vector: need 1 <= k <= n");
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-1.0, 3.0), logscale(-2.0, 2.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (;;) {
    const double s = shift(rng);
    const double scale = std::pow(10.0, logscale(rng));
    for (auto& x : v) x = scale * (g(rng) + s);
    if (in_cone<double>(k, v)) return v;
  }
}

std::vector<double> random_real_vector(int n, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(n));
  for (auto& x : v) x = g(rng);
  return v;
}

PotentialField random_potential(const BackgroundPtr& bg, Rng& rng, double amp, int fmax, int terms) {
  const int dims = 2 * bg->n();
  std::uniform_int_distribution<int> fd(-fmax, fmax);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<int>> freq;
  std::vector<double> a, b;
  double total = 0.0;
  for (int t = 0; t < terms; ++t) {
    std::vector<int> f(static_cast<std::size_t>(dims));
    do {
      for (auto& v : f) v = fd(rng);
    } while (std::all_of(f.begin(), f.end(), [](int v) { return v == 0; }));
    freq.push_back(f);
    a.push_back(g(rng));
    b.push_back(g(rng));
    total += std::abs(a.back()) + std::abs(b.back());
  }
  const double scale = total > 0.0 ? amp / total : 0.0;
  return PotentialField::from_function(bg, [&](const std::vector<double>& x) {
    double v = 0.0;
    for (std::size_t t = 0; t < freq.size(); ++t) {
      double ph = 0.0;
      for (std::size_t e = 0; e < x.size(); ++e) ph += freq[t][e] * x[e];
      ph *= 2.0 * M_PI;
      v += scale * (a[t] * std::cos(ph) + b[t] * std::sin(ph));
    }
    return v;
  });
}

}  // namespace khess
