// Flat complex tori C^n / (Z^n + i Z^n), periodic scalar fields on them and
// Fourier-spectral differentiation.
//
// Complex axis j carries the real coordinates (x_j, y_j), z_j = x_j + i y_j,
// each sampled on N_j points of [0, 1). Real axes are stored row-major in the
// order x_1, y_1, x_2, y_2, ..., so the last real axis (y_n) varies fastest.
//
// Volume convention: the measure written omega^n throughout the library is
// det(Omega) times Lebesgue measure on the unit cell, so V = det(Omega). The
// universal factor n! 2^n relating this to the literal top form cancels in
// every ratio of wedge products.
#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace khess {

using cd = std::complex<double>;
inline constexpr int kMaxDim = 4;
using HMat = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;
using CVec = Eigen::Matrix<cd, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;

class GridMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class Spectral;

class TorusBackground {
 public:
  /// `grid` holds N_j per complex axis; `omega` the constant Hermitian positive
  /// definite matrix Omega with omega = sqrt(-1) Omega_{ij} dz_i ^ dz_j-bar.
  TorusBackground(int n, std::vector<int> grid, HMat omega);
  TorusBackground(int n, int N);

  static std::shared_ptr<const TorusBackground> make(int n, int N);
  static std::shared_ptr<const TorusBackground> make(int n, std::vector<int> grid, HMat omega);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] const std::vector<int>& grid() const { return grid_; }
  [[nodiscard]] const std::vector<int>& real_shape() const { return real_shape_; }
  [[nodiscard]] std::size_t num_points() const { return num_points_; }
  [[nodiscard]] const HMat& omega() const { return omega_; }
  [[nodiscard]] const HMat& omega_inv() const { return omega_inv_; }
  /// L^{-1} for the Cholesky factor Omega = L L^H.
  [[nodiscard]] const HMat& chol_inv() const { return chol_inv_; }
  [[nodiscard]] double volume() const { return volume_; }
  /// Quadrature weight of a single grid point (uniform trapezoid).
  [[nodiscard]] double cell_weight() const { return volume_ / static_cast<double>(num_points_); }

  /// Real coordinates (x_1, y_1, ..., x_n, y_n) of grid point p.
  [[nodiscard]] std::vector<double> coordinates(std::size_t p) const;

  [[nodiscard]] bool same_grid(const TorusBackground& other) const;
  [[nodiscard]] Spectral& spectral() const { return *spectral_; }

 private:
  int n_;
  std::vector<int> grid_;
  std::vector<int> real_shape_;
  std::size_t num_points_;
  HMat omega_;
  HMat omega_inv_;
  HMat chol_inv_;
  double volume_;
  std::shared_ptr<Spectral> spectral_;
};

using BackgroundPtr = std::shared_ptr<const TorusBackground>;

enum class FieldRole { generic, phi, F, psi };
std::string to_string(FieldRole r);
FieldRole role_from_string(const std::string& s);

/// Real periodic scalar field on a torus grid.
struct PotentialField {
  BackgroundPtr background;
  std::vector<double> data;
  FieldRole role = FieldRole::generic;

  PotentialField() = default;
  explicit PotentialField(BackgroundPtr bg, FieldRole r = FieldRole::generic);
  PotentialField(BackgroundPtr bg, std::vector<double> values, FieldRole r = FieldRole::generic);
  /// Sample f(x_1, y_1, ..., x_n, y_n) at the grid points.
  static PotentialField from_function(BackgroundPtr bg,
                                      const std::function<double(const std::vector<double>&)>& f,
                                      FieldRole r = FieldRole::generic);

  [[nodiscard]] std::size_t size() const { return data.size(); }
  double& operator[](std::size_t p) { return data[p]; }
  double operator[](std::size_t p) const { return data[p]; }

  [[nodiscard]] double sup() const;
  [[nodiscard]] double inf() const;
  [[nodiscard]] double sup_abs() const;
  /// Average with respect to omega^n / V.
  [[nodiscard]] double mean() const;

  PotentialField& operator+=(const PotentialField& o);
  PotentialField& operator-=(const PotentialField& o);
  PotentialField& operator*=(double s);
  PotentialField& operator+=(double c);
  /// this += s * o
  PotentialField& axpy(double s, const PotentialField& o);
};

PotentialField operator+(PotentialField a, const PotentialField& b);
PotentialField operator-(PotentialField a, const PotentialField& b);
PotentialField operator*(double s, PotentialField a);

void require_same_grid(const PotentialField& a, const PotentialField& b, const char* where);

/// Hermitian n x n matrix at every grid point (row-major per point).
class HermitianField {
 public:
  HermitianField() = default;
  HermitianField(int n, std::size_t num_points);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] std::size_t num_points() const { return num_points_; }
  [[nodiscard]] HMat at(std::size_t p) const;
  void set(std::size_t p, const HMat& m);
  cd& operator()(std::size_t p, int i, int j) {
    return data_[p * static_cast<std::size_t>(n_ * n_) + static_cast<std::size_t>(i * n_ + j)];
  }
  cd operator()(std::size_t p, int i, int j) const {
    return data_[p * static_cast<std::size_t>(n_ * n_) + static_cast<std::size_t>(i * n_ + j)];
  }
  HermitianField& operator+=(const HermitianField& o);
  HermitianField& operator*=(double s);

 private:
  int n_ = 0;
  std::size_t num_points_ = 0;
  std::vector<cd> data_;
};

/// Complex vector field: (d_1 u, ..., d_n u) at every grid point.
class GradientField {
 public:
  GradientField() = default;
  GradientField(int n, std::size_t num_points);
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] CVec at(std::size_t p) const;
  cd& operator()(std::size_t p, int i) { return data_[p * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)]; }
  cd operator()(std::size_t p, int i) const { return data_[p * static_cast<std::size_t>(n_) + static_cast<std::size_t>(i)]; }

 private:
  int n_ = 0;
  std::vector<cd> data_;
};

/// FFTW-backed transforms for one real grid shape. Calls are serialized
/// internally; plans are created once per background.
class Spectral {
 public:
  explicit Spectral(std::vector<int> real_shape);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  [[nodiscard]] std::size_t num_points() const { return num_points_; }
  [[nodiscard]] std::size_t num_modes() const { return num_modes_; }
  [[nodiscard]] int rank() const { return static_cast<int>(real_shape_.size()); }

  std::vector<cd> forward(const std::vector<double>& u) const;
  /// Inverse transform including the 1/N normalisation.
  std::vector<double> backward(const std::vector<cd>& spectrum) const;

  /// Angular wavenumber 2 pi m along real axis a at spectral index s.
  [[nodiscard]] double kappa(std::size_t s, int a) const {
    return kappa_[s * real_shape_.size() + static_cast<std::size_t>(a)];
  }
  /// True if index s sits on the Nyquist plane of axis a (even sizes only).
  [[nodiscard]] bool nyquist(std::size_t s, int a) const {
    return nyq_[s * real_shape_.size() + static_cast<std::size_t>(a)] != 0;
  }
  /// Fourier symbol of d_a.
  [[nodiscard]] cd d1(std::size_t s, int a) const;
  /// Fourier symbol of d_a d_b (real).
  [[nodiscard]] double d2(std::size_t s, int a, int b) const;

 private:
  struct Plans;
  std::vector<int> real_shape_;
  std::size_t num_points_;
  std::size_t num_modes_;
  std::vector<double> kappa_;
  std::vector<unsigned char> nyq_;
  std::unique_ptr<Plans> plans_;
};

// ---------------------------------------------------------------------------
// Spectral differential operators.

/// d^2 phi / dz_i dz_j-bar at every point, evaluated spectrally.
HermitianField complex_hessian(const PotentialField& phi);

/// d u / dz_i at every point.
GradientField complex_gradient(const PotentialField& u);

/// Real partial derivative along real axis a (0 = x_1, 1 = y_1, ...).
PotentialField real_derivative(const PotentialField& u, int a);

/// Symbol of the constant-coefficient operator u -> Re tr(G ddbar u), built
/// from the same real second-derivative symbols as complex_hessian so it is
/// exactly diagonal for that discretisation.
std::vector<double> constant_laplacian_symbol(const TorusBackground& bg, const HMat& G);

/// u -> backward(symbol * forward(u)).
PotentialField apply_symbol(const PotentialField& u, const std::vector<double>& symbol);

/// Pseudo-inverse of a constant-coefficient symbol on mean-zero fields; the
/// zero mode of the result is set to 0.
PotentialField solve_symbol(const PotentialField& rhs, const std::vector<double>& symbol);

/// Delta_omega u = Re tr(Omega^{-1} ddbar u).
PotentialField laplace_omega(const PotentialField& u);

// ---------------------------------------------------------------------------
// Quadrature. Uniform weights, fixed-order compensated summation.

double integrate(const TorusBackground& bg, const std::vector<double>& integrand);
double integrate(const PotentialField& f);
double compensated_sum(const std::vector<double>& xs);

}  // namespace khess
