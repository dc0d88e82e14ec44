#include "khess/torus.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

namespace khess {

namespace {

std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

HMat identity_matrix(int n) { return HMat::Identity(n, n); }

}  // namespace

// ---------------------------------------------------------------------------
// TorusBackground

TorusBackground::TorusBackground(int n, std::vector<int> grid, HMat omega)
    : n_(n), grid_(std::move(grid)), omega_(std::move(omega)) {
  if (n_ < 1 || n_ > kMaxDim) throw std::invalid_argument("TorusBackground: n must be in 1..4");
  if (static_cast<int>(grid_.size()) != n_) {
    throw std::invalid_argument("TorusBackground: one grid size per complex axis");
  }
  for (int N : grid_) {
    if (N < 4) throw std::invalid_argument("TorusBackground: grid resolution must be >= 4");
  }
  if (omega_.rows() != n_ || omega_.cols() != n_) {
    throw std::invalid_argument("TorusBackground: omega must be n x n");
  }
  if ((omega_ - omega_.adjoint()).norm() > 1e-12 * (1.0 + omega_.norm())) {
    throw std::invalid_argument("TorusBackground: omega must be Hermitian");
  }
  Eigen::LLT<HMat> llt(omega_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("TorusBackground: omega must be positive definite");
  }
  const HMat L = llt.matrixL();
  chol_inv_ = L.inverse();
  omega_inv_ = omega_.inverse();
  volume_ = omega_.determinant().real();
  num_points_ = 1;
  for (int N : grid_) {
    real_shape_.push_back(N);
    real_shape_.push_back(N);
    num_points_ *= static_cast<std::size_t>(N) * static_cast<std::size_t>(N);
  }
  spectral_ = std::make_shared<Spectral>(real_shape_);
}

TorusBackground::TorusBackground(int n, int N)
    : TorusBackground(n, std::vector<int>(static_cast<std::size_t>(n), N), identity_matrix(n)) {}

std::shared_ptr<const TorusBackground> TorusBackground::make(int n, int N) {
  return std::make_shared<const TorusBackground>(n, N);
}

std::shared_ptr<const TorusBackground> TorusBackground::make(int n, std::vector<int> grid, HMat omega) {
  return std::make_shared<const TorusBackground>(n, std::move(grid), std::move(omega));
}

std::vector<double> TorusBackground::coordinates(std::size_t p) const {
  std::vector<double> x(real_shape_.size());
  for (int a = static_cast<int>(real_shape_.size()) - 1; a >= 0; --a) {
    const auto M = static_cast<std::size_t>(real_shape_[static_cast<std::size_t>(a)]);
    x[static_cast<std::size_t>(a)] = static_cast<double>(p % M) / static_cast<double>(M);
    p /= M;
  }
  return x;
}

bool TorusBackground::same_grid(const TorusBackground& other) const {
  return this == &other ||
         (n_ == other.n_ && grid_ == other.grid_ && (omega_ - other.omega_).norm() == 0.0);
}

// ---------------------------------------------------------------------------
// Fields

std::string to_string(FieldRole r) {
  switch (r) {
    case FieldRole::phi: return "phi";
    case FieldRole::F: return "F";
    case FieldRole::psi: return "psi";
    default: return "generic";
  }
}

FieldRole role_from_string(const std::string& s) {
  if (s == "phi") return FieldRole::phi;
  if (s == "F") return FieldRole::F;
  if (s == "psi") return FieldRole::psi;
  return FieldRole::generic;
}

PotentialField::PotentialField(BackgroundPtr bg, FieldRole r)
    : background(std::move(bg)), role(r) {
  data.assign(background->num_points(), 0.0);
}

PotentialField::PotentialField(BackgroundPtr bg, std::vector<double> values, FieldRole r)
    : background(std::move(bg)), data(std::move(values)), role(r) {
  if (data.size() != background->num_points()) throw GridMismatch("PotentialField: wrong data size");
}

PotentialField PotentialField::from_function(
    BackgroundPtr bg, const std::function<double(const std::vector<double>&)>& f, FieldRole r) {
  PotentialField out(bg, r);
  for (std::size_t p = 0; p < out.size(); ++p) out.data[p] = f(bg->coordinates(p));
  return out;
}

double PotentialField::sup() const { return *std::max_element(data.begin(), data.end()); }
double PotentialField::inf() const { return *std::min_element(data.begin(), data.end()); }
double PotentialField::sup_abs() const {
  double m = 0.0;
  for (double v : data) m = std::max(m, std::abs(v));
  return m;
}
double PotentialField::mean() const { return compensated_sum(data) / static_cast<double>(data.size()); }

void require_same_grid(const PotentialField& a, const PotentialField& b, const char* where) {
  if (!a.background || !b.background || !a.background->same_grid(*b.background) ||
      a.size() != b.size()) {
    throw GridMismatch(std::string(where) + ": fields live on different grids");
  }
}

PotentialField& PotentialField::operator+=(const PotentialField& o) {
  require_same_grid(*this, o, "operator+=");
  for (std::size_t p = 0; p < data.size(); ++p) data[p] += o.data[p];
  return *this;
}
PotentialField& PotentialField::operator-=(const PotentialField& o) {
  require_same_grid(*this, o, "operator-=");
  for (std::size_t p = 0; p < data.size(); ++p) data[p] -= o.data[p];
  return *this;
}
PotentialField& PotentialField::operator*=(double s) {
  for (double& v : data) v *= s;
  return *this;
}
PotentialField& PotentialField::operator+=(double c) {
  for (double& v : data) v += c;
  return *this;
}
PotentialField& PotentialField::axpy(double s, const PotentialField& o) {
  require_same_grid(*this, o, "axpy");
  for (std::size_t p = 0; p < data.size(); ++p) data[p] += s * o.data[p];
  return *this;
}

PotentialField operator+(PotentialField a, const PotentialField& b) { return a += b; }
PotentialField operator-(PotentialField a, const PotentialField& b) { return a -= b; }
PotentialField operator*(double s, PotentialField a) { return a *= s; }

HermitianField::HermitianField(int n, std::size_t num_points)
    : n_(n), num_points_(num_points), data_(static_cast<std::size_t>(n * n) * num_points, cd(0.0, 0.0)) {}

HMat HermitianField::at(std::size_t p) const {
  HMat m(n_, n_);
  const cd* base = data_.data() + p * static_cast<std::size_t>(n_ * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) m(i, j) = base[i * n_ + j];
  return m;
}

void HermitianField::set(std::size_t p, const HMat& m) {
  cd* base = data_.data() + p * static_cast<std::size_t>(n_ * n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) base[i * n_ + j] = m(i, j);
}

HermitianField& HermitianField::operator+=(const HermitianField& o) {
  if (o.n_ != n_ || o.num_points_ != num_points_) throw GridMismatch("HermitianField: shape mismatch");
  for (std::size_t q = 0; q < data_.size(); ++q) data_[q] += o.data_[q];
  return *this;
}

HermitianField& HermitianField::operator*=(double s) {
  for (cd& v : data_) v *= s;
  return *this;
}

GradientField::GradientField(int n, std::size_t num_points)
    : n_(n), data_(static_cast<std::size_t>(n) * num_points, cd(0.0, 0.0)) {}

CVec GradientField::at(std::size_t p) const {
  CVec v(n_);
  for (int i = 0; i < n_; ++i) v(i) = (*this)(p, i);
  return v;
}

// ---------------------------------------------------------------------------
// Spectral

struct Spectral::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;
  double* rbuf = nullptr;
  fftw_complex* cbuf = nullptr;
  std::mutex exec;
};

Spectral::Spectral(std::vector<int> real_shape)
    : real_shape_(std::move(real_shape)), plans_(std::make_unique<Plans>()) {
  const int rank = static_cast<int>(real_shape_.size());
  num_points_ = 1;
  for (int M : real_shape_) num_points_ *= static_cast<std::size_t>(M);
  std::vector<int> mode_shape = real_shape_;
  mode_shape.back() = real_shape_.back() / 2 + 1;
  num_modes_ = 1;
  for (int M : mode_shape) num_modes_ *= static_cast<std::size_t>(M);

  kappa_.assign(num_modes_ * static_cast<std::size_t>(rank), 0.0);
  nyq_.assign(num_modes_ * static_cast<std::size_t>(rank), 0);
  for (std::size_t s = 0; s < num_modes_; ++s) {
    std::size_t rem = s;
    for (int a = rank - 1; a >= 0; --a) {
      const int M = real_shape_[static_cast<std::size_t>(a)];
      const auto ext = static_cast<std::size_t>(mode_shape[static_cast<std::size_t>(a)]);
      const int q = static_cast<int>(rem % ext);
      rem /= ext;
      const int freq = q <= M / 2 ? q : q - M;
      kappa_[s * static_cast<std::size_t>(rank) + static_cast<std::size_t>(a)] =
          2.0 * std::numbers::pi * freq;
      nyq_[s * static_cast<std::size_t>(rank) + static_cast<std::size_t>(a)] =
          (M % 2 == 0 && q == M / 2) ? 1 : 0;
    }
  }

  std::lock_guard<std::mutex> lock(planner_mutex());
  plans_->rbuf = fftw_alloc_real(num_points_);
  plans_->cbuf = fftw_alloc_complex(num_modes_);
  plans_->fwd = fftw_plan_dft_r2c(rank, real_shape_.data(), plans_->rbuf, plans_->cbuf, FFTW_ESTIMATE);
  plans_->bwd = fftw_plan_dft_c2r(rank, real_shape_.data(), plans_->cbuf, plans_->rbuf, FFTW_ESTIMATE);
}

Spectral::~Spectral() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(plans_->fwd);
  fftw_destroy_plan(plans_->bwd);
  fftw_free(plans_->rbuf);
  fftw_free(plans_->cbuf);
}

std::vector<cd> Spectral::forward(const std::vector<double>& u) const {
  std::lock_guard<std::mutex> lock(plans_->exec);
  std::memcpy(plans_->rbuf, u.data(), num_points_ * sizeof(double));
  fftw_execute(plans_->fwd);
  std::vector<cd> out(num_modes_);
  std::memcpy(static_cast<void*>(out.data()), plans_->cbuf, num_modes_ * sizeof(fftw_complex));
  return out;
}

std::vector<double> Spectral::backward(const std::vector<cd>& spectrum) const {
  std::lock_guard<std::mutex> lock(plans_->exec);
  std::memcpy(plans_->cbuf, static_cast<const void*>(spectrum.data()), num_modes_ * sizeof(fftw_complex));
  fftw_execute(plans_->bwd);
  std::vector<double> out(num_points_);
  const double scale = 1.0 / static_cast<double>(num_points_);
  for (std::size_t p = 0; p < num_points_; ++p) out[p] = plans_->rbuf[p] * scale;
  return out;
}

cd Spectral::d1(std::size_t s, int a) const {
  if (nyquist(s, a)) return {0.0, 0.0};
  return {0.0, kappa(s, a)};
}

double Spectral::d2(std::size_t s, int a, int b) const {
  if (a == b) return -kappa(s, a) * kappa(s, a);
  if (nyquist(s, a) || nyquist(s, b)) return 0.0;
  return -kappa(s, a) * kappa(s, b);
}

// ---------------------------------------------------------------------------
// Operators

namespace {

std::vector<double> second_derivative(const Spectral& sp, const std::vector<cd>& uhat, int a, int b) {
  std::vector<cd> w(uhat.size());
  for (std::size_t s = 0; s < uhat.size(); ++s) w[s] = sp.d2(s, a, b) * uhat[s];
  return sp.backward(w);
}

std::vector<double> first_derivative(const Spectral& sp, const std::vector<cd>& uhat, int a) {
  std::vector<cd> w(uhat.size());
  for (std::size_t s = 0; s < uhat.size(); ++s) w[s] = sp.d1(s, a) * uhat[s];
  return sp.backward(w);
}

}  // namespace

HermitianField complex_hessian(const PotentialField& phi) {
  const auto& bg = *phi.background;
  const int n = bg.n();
  const Spectral& sp = bg.spectral();
  const auto uhat = sp.forward(phi.data);
  const int R = 2 * n;
  std::vector<std::vector<double>> D(static_cast<std::size_t>(R * R));
  for (int a = 0; a < R; ++a) {
    for (int b = a; b < R; ++b) {
      D[static_cast<std::size_t>(a * R + b)] = second_derivative(sp, uhat, a, b);
    }
  }
  auto get = [&](int a, int b) -> const std::vector<double>& {
    return a <= b ? D[static_cast<std::size_t>(a * R + b)] : D[static_cast<std::size_t>(b * R + a)];
  };
  HermitianField H(n, bg.num_points());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto& xx = get(2 * i, 2 * j);
      const auto& yy = get(2 * i + 1, 2 * j + 1);
      const auto& xy = get(2 * i, 2 * j + 1);
      const auto& yx = get(2 * i + 1, 2 * j);
      for (std::size_t p = 0; p < bg.num_points(); ++p) {
        H(p, i, j) = 0.25 * cd(xx[p] + yy[p], xy[p] - yx[p]);
      }
    }
  }
  return H;
}

GradientField complex_gradient(const PotentialField& u) {
  const auto& bg = *u.background;
  const int n = bg.n();
  const Spectral& sp = bg.spectral();
  const auto uhat = sp.forward(u.data);
  GradientField g(n, bg.num_points());
  for (int i = 0; i < n; ++i) {
    const auto dx = first_derivative(sp, uhat, 2 * i);
    const auto dy = first_derivative(sp, uhat, 2 * i + 1);
    for (std::size_t p = 0; p < bg.num_points(); ++p) g(p, i) = 0.5 * cd(dx[p], -dy[p]);
  }
  return g;
}

PotentialField real_derivative(const PotentialField& u, int a) {
  const Spectral& sp = u.background->spectral();
  return PotentialField(u.background, first_derivative(sp, sp.forward(u.data), a));
}

std::vector<double> constant_laplacian_symbol(const TorusBackground& bg, const HMat& G) {
  const Spectral& sp = bg.spectral();
  const int n = bg.n();
  std::vector<double> sym(sp.num_modes(), 0.0);
  for (std::size_t s = 0; s < sp.num_modes(); ++s) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const cd g = G(j, i);
        const double re = sp.d2(s, 2 * i, 2 * j) + sp.d2(s, 2 * i + 1, 2 * j + 1);
        const double im = sp.d2(s, 2 * i, 2 * j + 1) - sp.d2(s, 2 * i + 1, 2 * j);
        acc += 0.25 * (g.real() * re - g.imag() * im);
      }
    }
    sym[s] = acc;
  }
  return sym;
}

PotentialField apply_symbol(const PotentialField& u, const std::vector<double>& symbol) {
  const Spectral& sp = u.background->spectral();
  auto uhat = sp.forward(u.data);
  for (std::size_t s = 0; s < uhat.size(); ++s) uhat[s] *= symbol[s];
  return PotentialField(u.background, sp.backward(uhat), u.role);
}

PotentialField solve_symbol(const PotentialField& rhs, const std::vector<double>& symbol) {
  const Spectral& sp = rhs.background->spectral();
  auto uhat = sp.forward(rhs.data);
  for (std::size_t s = 0; s < uhat.size(); ++s) {
    uhat[s] = (s == 0 || symbol[s] == 0.0) ? cd(0.0, 0.0) : uhat[s] / symbol[s];
  }
  return PotentialField(rhs.background, sp.backward(uhat), rhs.role);
}

PotentialField laplace_omega(const PotentialField& u) {
  return apply_symbol(u, constant_laplacian_symbol(*u.background, u.background->omega_inv()));
}

// ---------------------------------------------------------------------------
// Quadrature

double compensated_sum(const std::vector<double>& xs) {
  // Neumaier's variant of Kahan summation, fixed order.
  double sum = 0.0;
  double c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x)) {
      c += (sum - t) + x;
    } else {
      c += (x - t) + sum;
    }
    sum = t;
  }
  return sum + c;
}

double integrate(const TorusBackground& bg, const std::vector<double>& integrand) {
  return bg.cell_weight() * compensated_sum(integrand);
}

double integrate(const PotentialField& f) { return integrate(*f.background, f.data); }

}  // namespace khess
