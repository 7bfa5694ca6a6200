#pragma once

// Witten deformation of the de Rham complex of a circle.
//
// The deformed differential d_t = e^{-th} d e^{th} is discretized on N
// vertices x_j = j dx and N edges (midpoints x_{j+1/2}):
//
//   (D f)_j = a_j w_j f_{j+1} - b_j f_j,
//   a_j = e^{t(h_{j+1} - h_{j+1/2})} / dx,  b_j = e^{t(h_j - h_{j+1/2})} / dx,
//
// with w_j = e^{i theta} on the last edge and 1 elsewhere. Then
// Delta_0(t) = D^*D and Delta_1(t) = DD^* are cyclic tridiagonal matrices that
// discretize Delta_q + t^2|h'|^2 -/+ t h'' to second order. The explicit
// central-difference assembly is available as well.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "torsionlab/algebra.hpp"
#include "torsionlab/complex.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/morphism.hpp"
#include "torsionlab/parallel.hpp"

namespace torsionlab::witten {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSmallThreshold = 1.0;  // eigenvalues below this count as small
inline constexpr int kMinGrid = 256;

// ---------------------------------------------------------------------------
// Hermitian cyclic tridiagonal matrices

/// diag[j] on the diagonal, A(j, j+1) = off[j] for j < N-1, A(N-1, 0) = corner.
struct CyclicTridiag {
  std::vector<double> diag;
  std::vector<cplx> off;
  cplx corner = 0.0;

  int size() const { return static_cast<int>(diag.size()); }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& x) const {
    int n = size();
    Eigen::VectorXcd y(n);
    for (int j = 0; j < n; ++j) y[j] = diag[j] * x[j];
    for (int j = 0; j + 1 < n; ++j) {
      y[j] += off[j] * x[j + 1];
      y[j + 1] += std::conj(off[j]) * x[j];
    }
    y[n - 1] += corner * x[0];
    y[0] += std::conj(corner) * x[n - 1];
    return y;
  }

  Matrix dense() const {
    int n = size();
    Matrix m = Matrix::Zero(n, n);
    for (int j = 0; j < n; ++j) m(j, j) = diag[j];
    for (int j = 0; j + 1 < n; ++j) {
      m(j, j + 1) += off[j];
      m(j + 1, j) += std::conj(off[j]);
    }
    m(n - 1, 0) += corner;
    m(0, n - 1) += std::conj(corner);
    return m;
  }

  double norm_bound() const {
    double b = 0;
    int n = size();
    for (int j = 0; j < n; ++j) {
      double r = std::abs(diag[j]);
      r += (j + 1 < n) ? std::abs(off[j]) : std::abs(corner);
      r += (j > 0) ? std::abs(off[j - 1]) : std::abs(corner);
      b = std::max(b, r);
    }
    return b;
  }

  /// Number of eigenvalues strictly below sigma. LDL^* pivots on the leading
  /// (N-1) block plus the Schur complement of the last row (Haynsworth inertia).
  int count_below(double sigma) const {
    int n = size();
    double tiny = std::numeric_limits<double>::epsilon() * norm_bound();
    int neg = 0;
    double p = 0.0;
    cplx y = 0.0;
    double schur = diag[n - 1] - sigma;
    for (int j = 0; j + 1 < n; ++j) {
      cplx u = 0.0;
      if (j == 0) u += std::conj(corner);
      if (j == n - 2) u += off[n - 2];
      if (j == 0) {
        p = diag[0] - sigma;
        y = u;
      } else {
        cplx l = std::conj(off[j - 1]) / p;
        p = (diag[j] - sigma) - std::norm(off[j - 1]) / p;
        y = u - l * y;
      }
      if (p == 0.0) p = -tiny;
      if (p < 0) ++neg;
      schur -= std::norm(y) / p;
    }
    if (schur < 0) ++neg;
    return neg;
  }

  /// k-th smallest eigenvalue (k = 0, 1, ...) by bisection on count_below.
  double eigenvalue(int k, double rel_tol = 1e-13) const {
    require(k >= 0 && k < size(), "eigenvalue index out of range");
    double hi = norm_bound(), lo = -hi;
    for (int it = 0; it < 200 && hi - lo > rel_tol * std::max(1.0, std::abs(hi)) ; ++it) {
      double mid = 0.5 * (lo + hi);
      if (count_below(mid) > k) hi = mid;
      else lo = mid;
    }
    return 0.5 * (lo + hi);
  }

  /// log det for a positive definite matrix.
  double logdet() const {
    int n = size();
    double acc = 0, p = 0;
    cplx y = 0.0;
    double schur = diag[n - 1];
    for (int j = 0; j + 1 < n; ++j) {
      cplx u = 0.0;
      if (j == 0) u += std::conj(corner);
      if (j == n - 2) u += off[n - 2];
      if (j == 0) {
        p = diag[0];
        y = u;
      } else {
        cplx l = std::conj(off[j - 1]) / p;
        p = diag[j] - std::norm(off[j - 1]) / p;
        y = u - l * y;
      }
      if (!(p > 0)) throw DomainError("logdet: matrix is not positive definite");
      acc += std::log(p);
      schur -= std::norm(y) / p;
    }
    if (!(schur > 0)) throw DomainError("logdet: matrix is not positive definite");
    return acc + std::log(schur);
  }
};

// ---------------------------------------------------------------------------
// Potentials and parameters

/// h(x) = (1 - cos u)/2 + eps sin^3 u with u = 2 pi x / L. One minimum at 0,
/// one maximum at L/2, h(min) = 0, h(max) = 1, and h'' = -/+ (2pi/L)^2/2 there
/// for every |eps| < 1/3. With L = pi sqrt 2 the Hessians are +-1.
struct Potential {
  std::string name = "cosine";
  double eps = 0.0;

  static Potential cosine() { return {}; }
  static Potential skewed(double eps = 0.05) { return {"skewed", eps}; }

  double h(double x, double L) const {
    double u = 2 * kPi * x / L, s = std::sin(u);
    return 0.5 * (1 - std::cos(u)) + eps * s * s * s;
  }
  double dh(double x, double L) const {
    double k = 2 * kPi / L, u = k * x, s = std::sin(u), c = std::cos(u);
    return k * (0.5 * s + 3 * eps * s * s * c);
  }
  double d2h(double x, double L) const {
    double k = 2 * kPi / L, u = k * x, s = std::sin(u), c = std::cos(u);
    return k * k * (0.5 * c + eps * (6 * s * c * c - 3 * s * s * s));
  }
};

inline Potential parse_potential(const std::string& s) {
  if (s == "cosine") return Potential::cosine();
  if (s == "skewed") return Potential::skewed();
  throw ValidationError("unknown potential '" + s + "' (expected cosine or skewed)");
}

enum class Form { factored, explicit_stencil };

struct Params {
  int N = 8192;
  double L = kPi * std::numbers::sqrt2;
  double theta = kPi;
  Potential potential{};
  Form form = Form::factored;

  bool trivial() const {
    double r = std::remainder(theta, 2 * kPi);
    return std::abs(r) < 1e-15;
  }
  double dx() const { return L / N; }
  /// |1 - e^{i theta}|, the modulus of the Morse differential under the twist.
  double gamma() const { return std::abs(1.0 - std::polar(1.0, theta)); }
  void check() const {
    if (N < kMinGrid) throw ValidationError("grid size N must be >= " + std::to_string(kMinGrid));
    if (N % 2 != 0) throw ValidationError("grid size N must be even");
    if (!(L > 0)) throw ValidationError("length must be positive");
    if (std::abs(potential.eps) >= 1.0 / 3.0) throw ValidationError("|eps| >= 1/3 adds critical points");
  }
};

// ---------------------------------------------------------------------------
// The deformed operator

class DeformedOperator {
 public:
  DeformedOperator(Params p, double t) : p_(std::move(p)), t_(t) {
    if (t < 0) throw ValidationError("deformation parameter t must be >= 0");
    int n = p_.N;
    double dx = p_.dx();
    hv_.resize(n);
    he_.resize(n);
    la_.resize(n);
    lb_.resize(n);
    for (int j = 0; j < n; ++j) {
      hv_[j] = p_.potential.h(j * dx, p_.L);
      he_[j] = p_.potential.h((j + 0.5) * dx, p_.L);
    }
    for (int j = 0; j < n; ++j) {
      double hn = hv_[(j + 1) % n];
      la_[j] = t_ * (hn - he_[j]) - std::log(dx);
      lb_[j] = t_ * (hv_[j] - he_[j]) - std::log(dx);
    }
  }

  static DeformedOperator build(const Params& p, double t) {
    p.check();
    return DeformedOperator(p, t);
  }

  const Params& params() const { return p_; }
  double t() const { return t_; }
  int size() const { return p_.N; }
  const std::vector<double>& h_vertex() const { return hv_; }
  const std::vector<double>& h_edge() const { return he_; }
  double a(int j) const { return std::exp(la_[j]); }
  double b(int j) const { return std::exp(lb_[j]); }
  cplx twist() const { return std::polar(1.0, p_.theta); }

  /// Delta_q(t) as a Hermitian cyclic tridiagonal matrix, in the chosen form.
  CyclicTridiag laplacian(int q, std::optional<Form> form = std::nullopt) const {
    require(q == 0 || q == 1, "degree must be 0 or 1");
    return form.value_or(p_.form) == Form::factored ? factored(q) : explicit_stencil(q);
  }

  /// Solves D x = g. Requires a nontrivial twist.
  Eigen::VectorXcd solve(const Eigen::VectorXcd& g) const {
    int n = p_.N;
    std::vector<cplx> pp(n), qq(n);
    pp[0] = 0.0;
    qq[0] = 1.0;
    for (int j = 0; j + 1 < n; ++j) {
      double ab = std::exp(lb_[j] - la_[j]);
      pp[j + 1] = g[j] / a(j) + ab * pp[j];
      qq[j + 1] = ab * qq[j];
    }
    cplx den = a(n - 1) * twist() - b(n - 1) * qq[n - 1];
    if (std::abs(den) == 0.0) throw DomainError("D is singular (trivial twist)");
    cplx x0 = (g[n - 1] + b(n - 1) * pp[n - 1]) / den;
    Eigen::VectorXcd x(n);
    for (int j = 0; j < n; ++j) x[j] = pp[j] + qq[j] * x0;
    return x;
  }

  /// Solves D^* y = g.
  Eigen::VectorXcd solve_adjoint(const Eigen::VectorXcd& g) const {
    int n = p_.N;
    std::vector<cplx> pp(n), qq(n);
    pp[0] = -g[0] / b(0);
    qq[0] = a(n - 1) * std::conj(twist()) / b(0);
    for (int k = 1; k < n; ++k) {
      double ab = std::exp(la_[k - 1] - lb_[k]);
      pp[k] = ab * pp[k - 1] - g[k] / b(k);
      qq[k] = ab * qq[k - 1];
    }
    cplx den = 1.0 - qq[n - 1];
    if (std::abs(den) == 0.0) throw DomainError("D is singular (trivial twist)");
    cplx z = pp[n - 1] / den;
    Eigen::VectorXcd y(n);
    for (int k = 0; k < n; ++k) y[k] = pp[k] + qq[k] * z;
    return y;
  }

  /// log det of Delta_0(t) (product of nonzero eigenvalues when the twist is
  /// trivial) by the matrix-tree theorem, minus the free-grid constant
  /// 2N log(N/L). Exact for the discrete operator, O(N) and free of cancellation.
  double normalized_logdet() const {
    int n = p_.N;
    std::vector<double> lb(lb_.begin(), lb_.end()), la(la_.begin(), la_.end());
    double sum_b = pairwise_sum(lb), sum_a = pairwise_sum(la);
    double shift = 2.0 * n * std::log(p_.dx());
    if (!p_.trivial()) {
      // det D = (-1)^N (prod b - e^{i theta} prod a)
      cplx r = 1.0 - twist() * std::exp(sum_a - sum_b);
      return 2 * sum_b + std::log(std::norm(r)) + shift;
    }
    // pdet(D^*D) = sum over (removed edge j, root k) of |minor_jk|^2
    //            = B^2 sum_j e^{2P_j}/b_j^2 sum_k e^{-2P_k},  P_v = sum_{e<v} log(a_e/b_e)
    std::vector<double> u(n), v(n);
    double P = 0;
    for (int j = 0; j < n; ++j) {
      u[j] = 2 * P - 2 * lb_[j];
      v[j] = -2 * P;
      P += la_[j] - lb_[j];
    }
    return 2 * sum_b + logsumexp(u) + logsumexp(v) + shift;
  }

  /// Pointwise symmetry defect of the explicit assembly (diag must be real,
  /// couplings must mirror).
  double symmetry_residual(int q) const {
    auto m = explicit_stencil(q);
    double dx = p_.dx(), worst = 0;
    int n = p_.N;
    // the lower coupling from row j+1 computed independently
    for (int j = 0; j + 1 < n; ++j) {
      cplx lower = -1.0 / (dx * dx);
      worst = std::max(worst, std::abs(m.off[j] - std::conj(lower)));
    }
    cplx lower0 = -std::conj(twist()) / (dx * dx);  // row 0 sees f_{-1} = e^{-i theta} f_{N-1}
    worst = std::max(worst, std::abs(m.corner - std::conj(lower0)));
    return worst / m.norm_bound();
  }

 private:
  static double logsumexp(const std::vector<double>& x) {
    double m = *std::max_element(x.begin(), x.end());
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::exp(x[i] - m);
    return m + std::log(pairwise_sum(e));
  }

  CyclicTridiag factored(int q) const {
    int n = p_.N;
    CyclicTridiag m;
    m.diag.resize(n);
    m.off.resize(n - 1);
    if (q == 0) {
      for (int k = 0; k < n; ++k) m.diag[k] = b(k) * b(k) + a((k + n - 1) % n) * a((k + n - 1) % n);
      for (int k = 0; k + 1 < n; ++k) m.off[k] = -b(k) * a(k);
      m.corner = -b(n - 1) * a(n - 1) * twist();
    } else {
      for (int j = 0; j < n; ++j) m.diag[j] = a(j) * a(j) + b(j) * b(j);
      for (int j = 0; j + 1 < n; ++j) m.off[j] = -a(j) * b(j + 1);
      m.corner = -a(n - 1) * b(0) * twist();
    }
    return m;
  }

  CyclicTridiag explicit_stencil(int q) const {
    int n = p_.N;
    double dx = p_.dx(), inv = 1.0 / (dx * dx), sign = q == 0 ? -1.0 : 1.0;
    CyclicTridiag m;
    m.diag.resize(n);
    m.off.assign(n - 1, -inv);
    for (int j = 0; j < n; ++j) {
      double x = j * dx, g = p_.potential.dh(x, p_.L);
      m.diag[j] = 2 * inv + t_ * t_ * g * g + sign * t_ * p_.potential.d2h(x, p_.L);
    }
    m.corner = -inv * twist();
    return m;
  }

  Params p_;
  double t_;
  std::vector<double> hv_, he_, la_, lb_;
};

inline DeformedOperator build_deformed(const Params& p, double t) { return DeformedOperator::build(p, t); }

// ---------------------------------------------------------------------------
// Small eigenpairs

struct SmallPair {
  double value = 0;        // smallest eigenvalue of Delta_q(t)
  Eigen::VectorXcd vec;    // unit vector in the dx-weighted norm
  int iterations = 0;
};

namespace detail {

inline double wnorm(const Eigen::VectorXcd& v, double dx) { return std::sqrt(dx) * v.norm(); }

/// Fixes the phase so that the largest entry is real positive, and normalizes.
inline void normalize_phase(Eigen::VectorXcd& v, double dx) {
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  v *= std::conj(v[k]) / std::abs(v[k]);
  v /= wnorm(v, dx);
}

}  // namespace detail

/// Smallest eigenpair of Delta_q(t) in the factored form. For a nontrivial
/// twist this is inverse iteration with the cyclic bidiagonal solves, and the
/// eigenvalue is read off as |x|^2/|D^{-*}x|^2 (resp. |D^{-1}x|^2) so that it
/// keeps full relative accuracy far below eps * |Delta|. For the trivial twist
/// the kernel is e^{-th} in degree 0 and e^{th} on edges in degree 1.
inline SmallPair small_pair(const DeformedOperator& op, int q) {
  require(q == 0 || q == 1, "degree must be 0 or 1");
  int n = op.size();
  double dx = op.params().dx(), t = op.t();
  SmallPair out;
  out.vec.resize(n);
  if (op.params().trivial()) {
    const auto& h = q == 0 ? op.h_vertex() : op.h_edge();
    double sgn = q == 0 ? -1.0 : 1.0, top = sgn > 0 ? *std::max_element(h.begin(), h.end()) : *std::min_element(h.begin(), h.end());
    for (int j = 0; j < n; ++j) out.vec[j] = std::exp(sgn * t * (h[j] - top));
    detail::normalize_phase(out.vec, dx);
    return out;
  }
  Eigen::VectorXcd x = Eigen::VectorXcd::Ones(n);
  double prev = 0;
  for (int it = 1; it <= 500; ++it) {
    Eigen::VectorXcd y = q == 0 ? op.solve_adjoint(x) : op.solve(x);
    Eigen::VectorXcd z = q == 0 ? op.solve(y) : op.solve_adjoint(y);
    double val = x.squaredNorm() / y.squaredNorm();
    x = z / z.norm();
    out.iterations = it;
    if (it > 2 && std::abs(val - prev) <= 1e-14 * val) {
      prev = val;
      break;
    }
    prev = val;
  }
  Eigen::VectorXcd y = q == 0 ? op.solve_adjoint(x) : op.solve(x);
  out.value = x.squaredNorm() / y.squaredNorm();
  out.vec = x;
  detail::normalize_phase(out.vec, dx);
  return out;
}

// ---------------------------------------------------------------------------
// Harmonic oscillator model

struct HOReport {
  double t = 0, X = 0;
  int N = 0;
  std::vector<double> eigenvalues;  // lowest five
  std::vector<double> rel_errors;   // |lambda_k - 2kt| / (2kt), and |lambda_0|/t for k = 0
  double max_rel_error = 0;
  bool ok = false;
};

inline constexpr double kHOTol = 0.01;

/// -d^2/dx^2 + t^2 x^2 - t on [-X, X] with Dirichlet ends, N interior points.
/// X defaults to 12/sqrt(t).
inline HOReport ho_check(double t, std::optional<double> X = std::nullopt, int N = 4096) {
  require(t > 0, "ho_check needs t > 0");
  require(N >= 16, "ho_check needs N >= 16");
  HOReport r;
  r.t = t;
  r.N = N;
  r.X = X.value_or(12.0 / std::sqrt(t));
  if (t * r.X * r.X / 2 < 20)
    throw ValidationError("truncation too small: ground state e^{-tX^2/2} = " +
                          std::to_string(std::exp(-t * r.X * r.X / 2)) + " at the boundary");
  double dx = 2 * r.X / (N + 1), inv = 1 / (dx * dx);
  CyclicTridiag m;
  m.diag.resize(N);
  m.off.assign(N - 1, -inv);
  m.corner = 0.0;
  for (int j = 0; j < N; ++j) {
    double x = -r.X + (j + 1) * dx;
    m.diag[j] = 2 * inv + t * t * x * x - t;
  }
  for (int k = 0; k < 5; ++k) {
    double ev = m.eigenvalue(k);
    r.eigenvalues.push_back(ev);
    double e = k == 0 ? std::abs(ev) / t : std::abs(ev / (2.0 * k * t) - 1);
    r.rel_errors.push_back(e);
    r.max_rel_error = std::max(r.max_rel_error, e);
  }
  r.ok = r.max_rel_error < kHOTol;
  return r;
}

// ---------------------------------------------------------------------------
// Spectral gap

struct GapPoint {
  double t = 0;
  double small_max[2] = {0, 0};  // largest small eigenvalue per degree
  double large_min[2] = {0, 0};  // smallest large eigenvalue per degree
  int small_count[2] = {0, 0};   // eigenvalues below kSmallThreshold
  bool clean = false;            // small_count == expected in both degrees
};

struct GapReport {
  std::vector<GapPoint> points;
  int expected_small = 1;       // m_q * l for the circle
  double decay_slope = 0;       // fitted d log s / dt over clean points (nontrivial twist)
  double c_prime = 0;           // -decay_slope
  double c_double_prime = 0;    // min g(t)/t over clean points
  std::optional<double> t1;     // smallest sweep t with clean separation
  bool all_clean = false;
  bool degenerate = false;      // some point had no separation
};

inline GapPoint gap_point(const Params& p, double t) {
  auto op = build_deformed(p, t);
  GapPoint g;
  g.t = t;
  for (int q = 0; q < 2; ++q) {
    auto lap = op.laplacian(q);
    g.small_count[q] = lap.count_below(kSmallThreshold);
    if (p.form == Form::factored) g.small_max[q] = small_pair(op, q).value;
    else g.small_max[q] = lap.eigenvalue(0);
    g.large_min[q] = lap.eigenvalue(std::max(1, g.small_count[q]));
  }
  g.clean = g.small_count[0] == 1 && g.small_count[1] == 1;
  return g;
}

inline GapReport gap_report(const Params& p, const std::vector<double>& ts) {
  p.check();
  require(!ts.empty(), "gap_report needs a t-grid");
  GapReport r;
  r.points.resize(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) { r.points[i] = gap_point(p, ts[i]); });
  std::vector<double> tt, ls;
  r.all_clean = true;
  r.c_double_prime = std::numeric_limits<double>::infinity();
  for (const auto& g : r.points) {
    if (!g.clean) {
      r.all_clean = false;
      r.degenerate = true;
      continue;
    }
    if (!r.t1 || g.t < *r.t1) r.t1 = g.t;
    if (g.t > 0) r.c_double_prime = std::min(r.c_double_prime, std::min(g.large_min[0], g.large_min[1]) / g.t);
    if (g.small_max[0] > 0) {
      tt.push_back(g.t);
      ls.push_back(std::log(g.small_max[0]));
    }
  }
  if (tt.size() >= 2) {
    Eigen::MatrixXd A(tt.size(), 2);
    Eigen::VectorXd y(tt.size());
    for (std::size_t i = 0; i < tt.size(); ++i) {
      A(i, 0) = tt[i];
      A(i, 1) = 1;
      y[i] = ls[i];
    }
    Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
    r.decay_slope = c[0];
    r.c_prime = -c[0];
  }
  if (!std::isfinite(r.c_double_prime)) r.c_double_prime = 0;
  return r;
}

// ---------------------------------------------------------------------------
// Small complex

struct SmallComplex {
  double t = 0;
  cplx eta = 0.0;           // <phi_1, D phi_0>
  double scaled = 0;        // |eta| e^t (t/pi)^{-1/2}
  double gamma = 0;         // |1 - e^{i theta}|
  double log_volume = 0;    // frame comparison sum_q (-1)^q log r_q
  double int_ratio[2] = {0, 0};
  int rank[2] = {0, 0};
  cochain::CochainComplex complex = cochain::CochainComplex::point(TraceAlgebra::scalar());
};

/// The 1+1 dimensional small complex at t: spectral projectors onto the
/// eigenvalues below kSmallThreshold, the induced differential eta, and the
/// integration map compared with the Morse basis.
inline SmallComplex small_complex(const Params& p, double t) {
  require(t > 0, "small_complex needs t > 0");
  require(p.form == Form::factored, "small_complex uses the factored form");
  auto op = build_deformed(p, t);
  SmallComplex s;
  s.t = t;
  s.gamma = p.gamma();
  for (int q = 0; q < 2; ++q) {
    s.rank[q] = op.laplacian(q).count_below(kSmallThreshold);
    if (s.rank[q] != 1)
      throw ToleranceError("small eigenspace in degree " + std::to_string(q) + " has rank " +
                           std::to_string(s.rank[q]) + ", expected 1 (t below the gap threshold)");
  }
  auto e0 = small_pair(op, 0), e1 = small_pair(op, 1);
  double dx = p.dx();
  if (!p.trivial()) {
    // D phi_0 = sigma u with u = sigma D^{-*} phi_0, avoiding the cancellation in D phi_0
    double sigma = std::sqrt(e0.value);
    Eigen::VectorXcd u = sigma * op.solve_adjoint(e0.vec);
    s.eta = sigma * dx * e1.vec.dot(u);
  }
  s.scaled = std::abs(s.eta) * std::exp(t) * std::sqrt(kPi / t);

  // Int^{(0)}: value at the minimum; Int^{(1)}: integral over the 1-cell
  int n = p.N;
  const auto& he = op.h_edge();
  double i0 = std::abs(e0.vec[0]) * std::exp(t * op.h_vertex()[0]);
  cplx i1 = 0.0;
  for (int j = 0; j < n; ++j) i1 += std::exp(t * (he[j] - 1.0)) * e1.vec[j];
  double i1abs = std::abs(i1) * dx;  // times e^{-t}
  s.int_ratio[0] = i0 / std::pow(t / kPi, 0.25);
  s.int_ratio[1] = i1abs / std::pow(kPi / t, 0.25);
  s.log_volume = std::log(s.int_ratio[0]) - std::log(s.int_ratio[1]);

  auto alg = TraceAlgebra::scalar();
  s.complex = cochain::CochainComplex(alg, {1, 1}, {Morphism::scalar(AlgebraElement::unit(alg, s.eta))});
  return s;
}

// ---------------------------------------------------------------------------
// Torsion splitting

struct TorsionSplit {
  double t = 0;
  double log_an = 0, log_sm = 0, log_la = 0;  // Richardson-extrapolated in N
  double an_fine = 0, an_coarse = 0;          // at N and N/2
  double sm_fine = 0, sm_coarse = 0;
  double diagnostic = 0;                      // max |fine - coarse|
  double small[2] = {0, 0}, large[2] = {0, 0};
};

namespace detail {

inline std::pair<double, double> an_sm(const Params& p, double t) {
  auto op = build_deformed(p, t);
  // log T_an = 1/2 sum_q (-1)^{q+1} q log det Delta_q = 1/2 log det Delta_1,
  // and Delta_1 = DD^* has the nonzero spectrum of Delta_0 = D^*D.
  double an = 0.5 * op.normalized_logdet();
  // the small complex is C -> C with differential eta: log T_sm = log|eta|
  double sm = p.trivial() ? 0.0 : 0.5 * std::log(small_pair(op, 0).value);
  return {an, sm};
}

inline double richardson2(double fine, double coarse) { return (4 * fine - coarse) / 3; }

}  // namespace detail

inline TorsionSplit torsion_split(const Params& p, double t, bool with_gap = true) {
  p.check();
  TorsionSplit s;
  s.t = t;
  Params coarse = p;
  coarse.N = p.N / 2;
  auto [af, sf] = detail::an_sm(p, t);
  auto [ac, sc] = detail::an_sm(coarse, t);
  s.an_fine = af;
  s.an_coarse = ac;
  s.sm_fine = sf;
  s.sm_coarse = sc;
  s.log_an = detail::richardson2(af, ac);
  s.log_sm = detail::richardson2(sf, sc);
  s.log_la = s.log_an - s.log_sm;
  s.diagnostic = std::max(std::abs(af - ac), std::abs(sf - sc));
  if (with_gap) {
    auto g = gap_point(p, t);
    if (t > 0 && !g.clean)
      throw ToleranceError("no spectral gap at t = " + std::to_string(t) + "; torsion split undefined");
    for (int q = 0; q < 2; ++q) {
      s.small[q] = g.small_max[q];
      s.large[q] = g.large_min[q];
    }
  }
  return s;
}

/// Observed convergence order of the t-deformed discrete log det under grid
/// doubling, for the explicit stencil (the factored form is spectrally accurate).
struct DiscretizationReport {
  std::vector<int> grids;
  std::vector<double> values;  // 1/2 log det Delta_0 minus the free-grid constant
  double order = 0;
};

inline DiscretizationReport discretization_report(Params p, double t, int n0 = 256) {
  require(!p.trivial(), "discretization_report needs a nontrivial twist");
  DiscretizationReport r;
  for (int n : {n0, 2 * n0, 4 * n0}) {
    p.N = n;
    auto op = build_deformed(p, t);
    r.grids.push_back(n);
    r.values.push_back(0.5 * (op.laplacian(0, Form::explicit_stencil).logdet() + 2.0 * n * std::log(p.dx())));
  }
  double e1 = std::abs(r.values[0] - r.values[1]), e2 = std::abs(r.values[1] - r.values[2]);
  r.order = (e1 > 0 && e2 > 0) ? std::log2(e1 / e2) : std::numeric_limits<double>::infinity();
  return r;
}

// ---------------------------------------------------------------------------
// Sweeps and CSV

struct SweepRow {
  double t = 0;
  int q = 0;
  double small_max = 0, large_min = 0;
  double log_an = 0, log_sm = 0, log_la = 0;
};

struct SweepResult {
  Params params;
  std::vector<double> ts;
  std::vector<SweepRow> rows;  // ordered by t, then q
  std::vector<double> diagnostic;
};

inline std::vector<double> parse_range(const std::string& s) {
  // a:b:n -> n equally spaced points from a to b
  std::stringstream in(s);
  std::string a, b, n;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, n))
    throw ValidationError("t-range must look like a:b:n, got '" + s + "'");
  double lo, hi;
  int cnt;
  try {
    lo = std::stod(a);
    hi = std::stod(b);
    cnt = std::stoi(n);
  } catch (...) {
    throw ValidationError("t-range must look like a:b:n, got '" + s + "'");
  }
  require(cnt >= 1 && hi >= lo && lo >= 0, "t-range needs 0 <= a <= b and n >= 1");
  std::vector<double> ts(cnt);
  for (int i = 0; i < cnt; ++i) ts[i] = cnt == 1 ? lo : lo + (hi - lo) * i / (cnt - 1);
  return ts;
}

inline SweepResult sweep(const Params& p, const std::vector<double>& ts) {
  p.check();
  SweepResult r;
  r.params = p;
  r.ts = ts;
  std::vector<TorsionSplit> splits(ts.size());
  parallel_for(ts.size(), [&](std::size_t i) { splits[i] = torsion_split(p, ts[i], ts[i] > 0); });
  for (const auto& s : splits) {
    for (int q = 0; q < 2; ++q) r.rows.push_back({s.t, q, s.small[q], s.large[q], s.log_an, s.log_sm, s.log_la});
    r.diagnostic.push_back(s.diagnostic);
  }
  return r;
}

inline void write_csv(std::ostream& os, const SweepResult& r) {
  os << "t,q,small_max,large_min,logT_an,logT_sm,logT_la\n";
  os.precision(17);
  for (const auto& w : r.rows)
    os << w.t << ',' << w.q << ',' << w.small_max << ',' << w.large_min << ',' << w.log_an << ',' << w.log_sm << ','
       << w.log_la << '\n';
}

inline std::vector<SweepRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("t,q,", 0) != 0) throw ValidationError("sweep CSV: missing header");
  std::vector<SweepRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream in(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(in, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (...) {
        throw ValidationError("sweep CSV line " + std::to_string(lineno) + ": bad number '" + cell + "'");
      }
    }
    if (v.size() != 7) throw ValidationError("sweep CSV line " + std::to_string(lineno) + ": expected 7 columns");
    rows.push_back({v[0], static_cast<int>(v[1]), v[2], v[3], v[4], v[5], v[6]});
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Asymptotic fits

enum class Term { t, log_t, one, inv_t };

inline std::string to_string(Term b) {
  switch (b) {
    case Term::t: return "t";
    case Term::log_t: return "log t";
    case Term::one: return "1";
    case Term::inv_t: return "1/t";
  }
  return "?";
}

inline double eval_term(Term b, double t) {
  switch (b) {
    case Term::t: return t;
    case Term::log_t: return std::log(t);
    case Term::one: return 1.0;
    case Term::inv_t: return 1.0 / t;
  }
  return 0;
}

inline const std::vector<Term>& default_basis() {
  static const std::vector<Term> b{Term::t, Term::log_t, Term::one, Term::inv_t};
  return b;
}
inline const std::vector<Term>& three_term_basis() {
  static const std::vector<Term> b{Term::t, Term::log_t, Term::one};
  return b;
}

struct AsymptoticFit {
  std::vector<Term> basis;
  std::vector<double> coef;
  double residual = 0;      // rms of the fit
  double ft = 0;            // coefficient of t^0
  double ft_dropped = 0;    // FT refitted without the largest t sample
  double ft_stability = 0;  // |ft - ft_dropped|
  double condition = 0;

  double coefficient(Term b) const {
    for (std::size_t i = 0; i < basis.size(); ++i)
      if (basis[i] == b) return coef[i];
    return 0.0;
  }
};

inline constexpr double kMinSpread = 4.0;
inline constexpr double kMaxCondition = 1e12;

namespace detail {

inline std::pair<Eigen::VectorXd, double> lsq(const std::vector<double>& ts, const std::vector<double>& ys,
                                              const std::vector<Term>& basis, double* cond = nullptr) {
  Eigen::Index n = static_cast<Eigen::Index>(ts.size()), m = static_cast<Eigen::Index>(basis.size());
  Eigen::MatrixXd A(n, m);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < m; ++k) A(i, k) = eval_term(basis[k], ts[i]);
    y[i] = ys[i];
  }
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index k = 0; k < m; ++k) A.col(k) /= scale[k];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  auto sv = svd.singularValues();
  if (cond) *cond = sv[0] / sv[sv.size() - 1];
  Eigen::VectorXd c = svd.solve(y);
  double rms = std::sqrt((A * c - y).squaredNorm() / static_cast<double>(n));
  for (Eigen::Index k = 0; k < m; ++k) c[k] /= scale[k];
  return {c, rms};
}

}  // namespace detail

inline AsymptoticFit fit_asymptotic(const std::vector<double>& ts, const std::vector<double>& ys,
                                    const std::vector<Term>& basis = default_basis()) {
  require(ts.size() == ys.size(), "fit_asymptotic: t and value lists differ in length");
  require(ts.size() >= 6, "fit_asymptotic needs at least 6 samples");
  require(ts.size() > basis.size(), "fit_asymptotic: more basis terms than samples");
  double lo = *std::min_element(ts.begin(), ts.end()), hi = *std::max_element(ts.begin(), ts.end());
  require(lo > 0, "fit_asymptotic needs t > 0");
  if (hi / lo < kMinSpread)
    throw ValidationError("fit_asymptotic: t-range too narrow (ratio " + std::to_string(hi / lo) + " < " +
                          std::to_string(kMinSpread) + "), basis is ill-conditioned");
  AsymptoticFit f;
  f.basis = basis;
  auto [c, rms] = detail::lsq(ts, ys, basis, &f.condition);
  if (f.condition > kMaxCondition) throw ValidationError("fit_asymptotic: ill-conditioned basis");
  f.coef.assign(c.data(), c.data() + c.size());
  f.residual = rms;
  f.ft = f.coefficient(Term::one);

  std::size_t drop = static_cast<std::size_t>(std::max_element(ts.begin(), ts.end()) - ts.begin());
  std::vector<double> t2, y2;
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (i != drop) {
      t2.push_back(ts[i]);
      y2.push_back(ys[i]);
    }
  auto [c2, rms2] = detail::lsq(t2, y2, basis);
  (void)rms2;
  for (std::size_t k = 0; k < basis.size(); ++k)
    if (basis[k] == Term::one) f.ft_dropped = c2[static_cast<Eigen::Index>(k)];
  f.ft_stability = std::abs(f.ft - f.ft_dropped);
  return f;
}

/// Fits |r(t)| ~ C t^p on log-log axes and returns (p, log C).
inline std::pair<double, double> power_law(const std::vector<double>& ts, const std::vector<double>& rs) {
  require(ts.size() == rs.size() && ts.size() >= 2, "power_law needs matching samples");
  Eigen::MatrixXd A(ts.size(), 2);
  Eigen::VectorXd y(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    require(ts[i] > 0 && rs[i] != 0, "power_law needs t > 0 and nonzero remainders");
    A(i, 0) = std::log(ts[i]);
    A(i, 1) = 1;
    y[i] = std::log(std::abs(rs[i]));
  }
  Eigen::VectorXd c = A.colPivHouseholderQr().solve(y);
  return {c[0], c[1]};
}

}  // namespace torsionlab::witten
