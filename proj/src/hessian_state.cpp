#include "khess/hessian_state.hpp"

#include "khess/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace khess {

ConeError::ConeError(const std::string& what, std::size_t point, std::vector<double> lambda,
                     int required_k)
    : DomainError(what), point_(point), lambda_(std::move(lambda)), required_k_(required_k) {}

EigenSpectrum HessianState::spectrum(std::size_t p) const {
  const auto l = lambda(p);
  return EigenSpectrum(std::vector<double>(l.begin(), l.end()));
}

PotentialField HessianState::wedge_ratio(int m) const {
  if (m < 0 || m > n_) throw DomainError("wedge_ratio: degree out of range");
  PotentialField out(bg_);
  const double c = binomial(n_, m);
  for (std::size_t p = 0; p < npts_; ++p) out.data[p] = sigma(p, m) / c;
  return out;
}

HessianState evaluate_state(const PotentialField& phi, int k, double eps_cone) {
  const auto& bg = *phi.background;
  const int n = bg.n();
  if (k < 1 || k > n) throw DomainError("evaluate_state: k must satisfy 1 <= k <= n");
  HessianState s;
  s.bg_ = phi.background;
  s.n_ = n;
  s.k_ = k;
  s.npts_ = bg.num_points();
  s.H_ = complex_hessian(phi);
  s.G_ = HermitianField(n, s.npts_);
  s.lambda_.assign(s.npts_ * static_cast<std::size_t>(n), 0.0);
  s.sigma_.assign(s.npts_ * static_cast<std::size_t>(n + 1), 0.0);
  s.d_.assign(s.npts_ * static_cast<std::size_t>(n), 0.0);
  s.frame_.assign(s.npts_, HMat());
  s.ratio_ = PotentialField(phi.background);
  s.f_ = PotentialField(phi.background, FieldRole::F);

  // Per-point admissibility margin: min_j sigma_j / max(1,|lambda|)^j over j <= k.
  std::vector<double> margin(s.npts_, 0.0);
  const HMat& Li = bg.chol_inv();
  const HMat& Om = bg.omega();
  const double ck = binomial(n, k);

  parallel_for(s.npts_, [&](std::size_t p) {
    HMat A = Om + s.H_.at(p);
    HMat M = Li * A * Li.adjoint();
    M = 0.5 * (M + M.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<HMat> es(M);
    const auto& ev = es.eigenvalues();
    double* lam = s.lambda_.data() + p * static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i) lam[i] = ev(i);
    const std::span<const double> lv(lam, static_cast<std::size_t>(n));
    const auto tab = sigma_table(lv, n);
    double* sg = s.sigma_.data() + p * static_cast<std::size_t>(n + 1);
    for (int m = 0; m <= n; ++m) sg[m] = tab[static_cast<std::size_t>(m)];

    double scale = 1.0;
    for (double x : lv) scale = std::max(scale, std::abs(x));
    double mg = std::numeric_limits<double>::infinity();
    double th = 1.0;
    for (int j = 1; j <= k; ++j) {
      th *= scale;
      mg = std::min(mg, sg[j] / th);
    }
    margin[p] = mg;

    const HMat P = Li.adjoint() * es.eigenvectors();
    s.frame_[p] = P;
    const double sk = sg[k];
    RVec dv(n);
    for (int i = 0; i < n; ++i) {
      dv(i) = sigma_raw(k - 1, lv, i) / sk;
      s.d_[p * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = dv(i);
    }
    HMat G = P * dv.cast<cd>().asDiagonal() * P.adjoint();
    s.G_.set(p, 0.5 * (G + G.adjoint()));
    s.ratio_.data[p] = sk / ck;
    s.f_.data[p] = sk > 0.0 ? std::log(sk / ck) : -std::numeric_limits<double>::infinity();
  });

  std::size_t worst = 0;
  for (std::size_t p = 1; p < s.npts_; ++p) {
    if (margin[p] < margin[worst]) worst = p;
  }
  const auto lw = s.lambda(worst);
  if (!in_cone(k, lw, eps_cone)) {
    std::ostringstream os;
    os << "phi is not " << k << "-admissible; worst grid point " << worst << " has lambda = (";
    for (int i = 0; i < n; ++i) os << (i ? ", " : "") << lw[static_cast<std::size_t>(i)];
    os << ")";
    throw ConeError(os.str(), worst, std::vector<double>(lw.begin(), lw.end()), k);
  }
  return s;
}

namespace {

void require_state_grid(const HessianState& st, const PotentialField& u, const char* where) {
  if (!u.background || !st.background()->same_grid(*u.background) || u.size() != st.num_points()) {
    throw GridMismatch(std::string(where) + ": field and state live on different grids");
  }
}

}  // namespace

PotentialField laplace_G(const HessianState& state, const PotentialField& u) {
  require_state_grid(state, u, "laplace_G");
  return trace_G(state, complex_hessian(u));
}

PotentialField trace_G(const HessianState& state, const HermitianField& alpha) {
  const int n = state.n();
  PotentialField out(state.background());
  const HermitianField& G = state.G();
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += (G(p, i, j) * alpha(p, j, i)).real();
    out.data[p] = acc;
  }
  return out;
}

PotentialField grad_norm_G(const HessianState& state, const GradientField& du) {
  const int n = state.n();
  PotentialField out(state.background());
  const HermitianField& G = state.G();
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += (std::conj(du(p, i)) * G(p, i, j) * du(p, j)).real();
    out.data[p] = acc;
  }
  return out;
}

PotentialField grad_norm_G(const HessianState& state, const PotentialField& u) {
  require_state_grid(state, u, "grad_norm_G");
  return grad_norm_G(state, complex_gradient(u));
}

PotentialField grad_pairing_G(const HessianState& state, const PotentialField& a,
                              const PotentialField& b) {
  require_state_grid(state, a, "grad_pairing_G");
  require_state_grid(state, b, "grad_pairing_G");
  const int n = state.n();
  const auto da = complex_gradient(a);
  const auto db = complex_gradient(b);
  PotentialField out(state.background());
  const HermitianField& G = state.G();
  for (std::size_t p = 0; p < state.num_points(); ++p) {
    double acc = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) acc += (std::conj(da(p, i)) * G(p, i, j) * db(p, j)).real();
    out.data[p] = acc;
  }
  return out;
}

HermitianField generalized_ricci(const HessianState& state) {
  HermitianField r = complex_hessian(state.f());
  r *= -1.0;
  return r;
}

HermitianField generalized_ricci(const PotentialField& phi, int k) {
  return generalized_ricci(evaluate_state(phi, k));
}

CVec frame_components(const HessianState& state, std::size_t p, const CVec& v) {
  return state.frame(p).adjoint() * v;
}

HMat frame_components(const HessianState& state, std::size_t p, const HMat& B) {
  const HMat& P = state.frame(p);
  return P.adjoint() * B * P;
}

}  // namespace khess
