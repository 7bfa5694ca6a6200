#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "torsionlab/algebra.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/morphism.hpp"
#include "torsionlab/vnla.hpp"

namespace torsionlab::cochain {

inline constexpr double kComposeTol = 1e-10;
inline constexpr double kHodgeTol = 1e-9;

/// 0 -> C^0 -> C^1 -> ... -> C^top -> 0, with d_i : C^i -> C^{i+1} an
/// (r_{i+1} x r_i) morphism.
class CochainComplex {
 public:
  CochainComplex(AlgebraPtr alg, std::vector<int> ranks, std::vector<Morphism> d)
      : alg_(std::move(alg)), ranks_(std::move(ranks)), d_(std::move(d)) {
    if (ranks_.empty()) throw ValidationError("complex needs at least one degree");
    for (int r : ranks_)
      if (r < 0) throw ValidationError("negative rank");
    if (d_.size() + 1 != ranks_.size())
      throw ValidationError("expected " + std::to_string(ranks_.size() - 1) + " differentials, got " +
                            std::to_string(d_.size()));
    for (std::size_t i = 0; i < d_.size(); ++i) {
      if (!d_[i].algebra()->same_structure(*alg_)) throw ValidationError("d_" + std::to_string(i) + ": algebra mismatch");
      if (d_[i].rows() != ranks_[i + 1] || d_[i].cols() != ranks_[i])
        throw ValidationError("d_" + std::to_string(i) + " has shape " + std::to_string(d_[i].rows()) + "x" +
                              std::to_string(d_[i].cols()) + ", expected " + std::to_string(ranks_[i + 1]) + "x" +
                              std::to_string(ranks_[i]));
    }
  }

  /// A single free module in degree 0 (unit for the tensor product).
  static CochainComplex point(AlgebraPtr alg, int rank = 1) { return CochainComplex(std::move(alg), {rank}, {}); }

  const AlgebraPtr& algebra() const { return alg_; }
  const std::vector<int>& ranks() const { return ranks_; }
  int top() const { return static_cast<int>(ranks_.size()) - 1; }
  int rank(int i) const { return (i < 0 || i > top()) ? 0 : ranks_[i]; }

  /// d_i, or the zero map outside the stored range.
  Morphism d(int i) const {
    if (i >= 0 && i < top()) return d_[i];
    return Morphism::zero(alg_, rank(i + 1), rank(i));
  }
  const std::vector<Morphism>& differentials() const { return d_; }

  CochainComplex with_algebra(AlgebraPtr alg) const {
    std::vector<Morphism> d;
    for (const auto& m : d_) {
      Morphism n(alg, m.rows(), m.cols());
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) {
          AlgebraElement e(alg);
          for (const auto& [s, c] : m.at(i, j).terms()) e.add(s, c);
          n.set(i, j, std::move(e));
        }
      d.push_back(std::move(n));
    }
    return CochainComplex(std::move(alg), ranks_, std::move(d));
  }

 private:
  AlgebraPtr alg_;
  std::vector<int> ranks_;
  std::vector<Morphism> d_;
};

struct ValidationReport {
  std::vector<double> residuals;  // ||d_{i+1} d_i|| per i
  double max_residual = 0.0;
  bool ok = true;
};

inline ValidationReport validate(const CochainComplex& c, double tol = kComposeTol) {
  ValidationReport r;
  for (int i = 0; i + 1 < c.top(); ++i) {
    double res = (c.d(i + 1) * c.d(i)).max_fiber_norm();
    r.residuals.push_back(res);
    r.max_residual = std::max(r.max_residual, res);
  }
  r.ok = r.max_residual < tol;
  return r;
}

inline void require_valid(const CochainComplex& c) {
  auto r = validate(c);
  if (!r.ok) throw ValidationError("d o d != 0 (residual " + std::to_string(r.max_residual) + ")");
}

/// Delta_i = d_i^* d_i + d_{i-1} d_{i-1}^*.
inline Morphism laplacian(const CochainComplex& c, int i) {
  Morphism a = c.d(i), b = c.d(i - 1);
  return a.adjoint() * a + b * b.adjoint();
}

inline std::vector<vnla::SpectralMeasure> laplacian_spectra(const CochainComplex& c) {
  std::vector<vnla::SpectralMeasure> out;
  for (int i = 0; i <= c.top(); ++i) out.push_back(vnla::spectral_measure(laplacian(c, i)));
  return out;
}

inline double betti(const vnla::SpectralMeasure& delta) { return delta.null_dim(); }
inline double betti(const CochainComplex& c, int i) { return betti(vnla::spectral_measure(laplacian(c, i))); }

struct EulerData {
  std::vector<double> betti;
  double chi = 0.0;
  double psi = 0.0;
};

inline EulerData euler_from_betti(std::vector<double> b) {
  EulerData e;
  e.betti = std::move(b);
  for (std::size_t i = 0; i < e.betti.size(); ++i) {
    double sign = (i % 2 == 0) ? 1.0 : -1.0;
    e.chi += sign * e.betti[i];
    e.psi += sign * static_cast<double>(i) * e.betti[i];
  }
  return e;
}

inline EulerData euler(const CochainComplex& c) {
  std::vector<double> b;
  for (int i = 0; i <= c.top(); ++i) b.push_back(betti(c, i));
  return euler_from_betti(std::move(b));
}

// ---------------------------------------------------------------------------
// Hodge decomposition.

namespace detail {

/// Fiberwise orthogonal projector onto the closure of the range of a
/// (given A A^*), selecting eigenvalues above the kernel band of A A^*.
inline FiberField range_projector(const Morphism& aat) {
  auto fe = vnla::fiber_eigen(aat);
  double norm = 0.0;
  for (const auto& v : fe.values)
    if (v.size()) norm = std::max(norm, v.cwiseAbs().maxCoeff());
  double kappa = std::max(1e-12, 1e-9 * norm);
  return vnla::spectral_projector(fe, kappa, std::numeric_limits<double>::infinity());
}

inline double max_fiber_norm(const FiberField& f) {
  double m = 0.0;
  for (const auto& x : f.fibers) m = std::max(m, x.size() ? x.norm() : 0.0);
  return m;
}

}  // namespace detail

struct HodgeDegree {
  FiberField harmonic;
  FiberField plus;   // closure of range d_{i-1}
  FiberField minus;  // closure of range d_i^*
  FiberField dbar;   // P^+_{i+1} d_i P^-_i : C^-_i -> C^+_{i+1}
  double projector_residual = 0.0;
  double block_residual = 0.0;
};

struct HodgeData {
  std::vector<HodgeDegree> degrees;
  double max_projector_residual = 0.0;
  double max_block_residual = 0.0;
};

inline HodgeData hodge(const CochainComplex& c, double tol = kHodgeTol) {
  require_valid(c);
  HodgeData h;
  int top = c.top();
  std::vector<FiberField> plus(top + 2), minus(top + 1);
  for (int i = 0; i <= top; ++i) {
    Morphism din = c.d(i - 1), dout = c.d(i);
    plus[i] = detail::range_projector(din * din.adjoint());
    minus[i] = detail::range_projector(dout.adjoint() * dout);
  }
  for (int i = 0; i <= top; ++i) {
    HodgeDegree deg;
    deg.plus = plus[i];
    deg.minus = minus[i];
    auto delta = vnla::spectral_measure(laplacian(c, i));
    deg.harmonic = vnla::spectral_projector(laplacian(c, i), -delta.kernel_band(), delta.kernel_band());
    FiberField id = FiberField::identity(c.algebra(), c.rank(i));
    double r = detail::max_fiber_norm(deg.harmonic + deg.plus + deg.minus - id);
    r = std::max(r, detail::max_fiber_norm(deg.harmonic * deg.plus));
    r = std::max(r, detail::max_fiber_norm(deg.harmonic * deg.minus));
    r = std::max(r, detail::max_fiber_norm(deg.plus * deg.minus));
    deg.projector_residual = r;
    if (i < top) {
      FiberField d = FiberField::of(c.d(i));
      deg.dbar = plus[i + 1] * d * deg.minus;
      deg.block_residual = detail::max_fiber_norm(d - deg.dbar);
    } else {
      deg.dbar = FiberField::of(c.d(i));
    }
    h.max_projector_residual = std::max(h.max_projector_residual, deg.projector_residual);
    h.max_block_residual = std::max(h.max_block_residual, deg.block_residual);
    h.degrees.push_back(std::move(deg));
  }
  if (h.max_projector_residual > tol || h.max_block_residual > tol)
    throw ToleranceError("Hodge residuals exceed tolerance: projectors " + std::to_string(h.max_projector_residual) +
                         ", blocks " + std::to_string(h.max_block_residual));
  return h;
}

// ---------------------------------------------------------------------------
// Torsion.

struct TorsionResult {
  std::vector<vnla::RegularizedLogDet> degrees;
  double log_t = 0.0;
  bool det_class = true;
  EulerData euler;
  std::vector<double> samples;     // combined v(lambda) on the common grid
  double spectral_identity = 0.0;  // max |N_i - beta_i - F_{i-1} - F_i| on the grid
};

/// log T = 1/2 sum_i (-1)^{i+1} i * x_i.
inline double combine(const std::vector<double>& per_degree) {
  double s = 0.0;
  for (std::size_t i = 0; i < per_degree.size(); ++i)
    s += ((i % 2 == 0) ? -1.0 : 1.0) * static_cast<double>(i) * per_degree[i];
  return 0.5 * s;
}

inline TorsionResult torsion(const CochainComplex& c, const vnla::LambdaGrid& grid = {}) {
  require_valid(c);
  TorsionResult t;
  auto spectra = laplacian_spectra(c);
  std::vector<double> betti, values;
  for (const auto& mu : spectra) {
    t.degrees.push_back(vnla::logdet_regularized(mu, grid));
    betti.push_back(t.degrees.back().null_dim);
    values.push_back(t.degrees.back().value);
    t.det_class = t.det_class && t.degrees.back().det_class;
  }
  t.euler = euler_from_betti(betti);
  t.log_t = combine(values);
  auto lambdas = grid.values();
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    std::vector<double> v;
    for (const auto& d : t.degrees) v.push_back(d.samples[k]);
    t.samples.push_back(combine(v));
  }

  std::vector<vnla::SpectralMeasure> dd;
  for (int i = 0; i < c.top(); ++i) dd.push_back(vnla::spectral_measure(c.d(i).adjoint() * c.d(i)));
  for (int i = 0; i <= c.top(); ++i)
    for (double lam : lambdas) {
      double rhs = betti[i];
      if (i >= 1) rhs += vnla::gs_function(dd[i - 1], lam);
      if (i < c.top()) rhs += vnla::gs_function(dd[i], lam);
      double lhs = spectra[i].cumulative(lam) - spectra[i].cumulative(-spectra[i].kernel_band() * 2);
      t.spectral_identity = std::max(t.spectral_identity, std::abs(lhs - rhs));
    }
  return t;
}

// ---------------------------------------------------------------------------
// Zeta function and heat traces.

/// zeta_C(lambda, s) = 1/2 sum_i (-1)^i i tr_N (Delta_i + lambda)^{-s}.
inline double zeta(const std::vector<vnla::SpectralMeasure>& spectra, double lambda, double s) {
  if (!(lambda > 0.0)) throw ValidationError("zeta_C needs lambda > 0");
  double z = 0.0;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    double sign = (i % 2 == 0) ? 1.0 : -1.0;
    double tr = spectra[i].integrate([&](double x) { return std::pow(std::max(x, 0.0) + lambda, -s); });
    z += sign * static_cast<double>(i) * tr;
  }
  return 0.5 * z;
}

inline double zeta(const CochainComplex& c, double lambda, double s) { return zeta(laplacian_spectra(c), lambda, s); }

/// d/ds zeta_C(lambda, s) at s = 0.
inline double zeta_derivative_at_zero(const std::vector<vnla::SpectralMeasure>& spectra, double lambda) {
  if (!(lambda > 0.0)) throw ValidationError("zeta_C needs lambda > 0");
  double z = 0.0;
  for (std::size_t i = 0; i < spectra.size(); ++i) {
    double sign = (i % 2 == 0) ? 1.0 : -1.0;
    double tr = spectra[i].integrate([&](double x) { return -std::log(std::max(x, 0.0) + lambda); });
    z += sign * static_cast<double>(i) * tr;
  }
  return 0.5 * z;
}

/// sum_q (-1)^q tr_N exp(-t Delta_q).
inline double heat_supertrace(const std::vector<vnla::SpectralMeasure>& spectra, double t) {
  double s = 0.0;
  for (std::size_t i = 0; i < spectra.size(); ++i)
    s += ((i % 2 == 0) ? 1.0 : -1.0) * spectra[i].integrate([&](double x) { return std::exp(-t * x); });
  return s;
}

/// 1/2 sum_q (-1)^q q tr_N exp(-t (Delta_q + lambda)); integrand of the heat form of zeta_C.
inline double weighted_heat_trace(const std::vector<vnla::SpectralMeasure>& spectra, double t, double lambda) {
  double s = 0.0;
  for (std::size_t i = 0; i < spectra.size(); ++i)
    s += ((i % 2 == 0) ? 1.0 : -1.0) * static_cast<double>(i) *
         spectra[i].integrate([&](double x) { return std::exp(-t * (x + lambda)); });
  return 0.5 * s;
}

// ---------------------------------------------------------------------------
// Perfectization and tensor products.

/// Replaces each d_i by its polar isometry d_i (d_i^* d_i)^{-1/2} on the
/// complement of the kernel. Needs a finite group algebra and nonzero
/// spectrum of d_i^* d_i bounded away from 0.
inline CochainComplex make_perfect(const CochainComplex& c, double gap = 1e-8) {
  require_valid(c);
  if (c.algebra()->rank() != 0)
    throw DomainError("make_perfect: spectrum of a torus complex is not bounded away from 0 in general");
  std::vector<Morphism> d;
  for (int i = 0; i < c.top(); ++i) {
    Morphism ddi = c.d(i).adjoint() * c.d(i);
    auto mu = vnla::spectral_measure(ddi);
    double kappa = mu.kernel_band();
    for (double x : mu.values())
      if (x > kappa && x < gap) throw DomainError("make_perfect: spectrum of d_i^* d_i accumulates at 0");
    Morphism inv_sqrt = ddi.apply([kappa](double x) { return x > kappa ? 1.0 / std::sqrt(x) : 0.0; });
    d.push_back(c.d(i) * inv_sqrt);
  }
  return CochainComplex(c.algebra(), c.ranks(), std::move(d));
}

/// C' (x) C'' with d = d' (x) id + (-1)^p id (x) d'' on C'^p (x) C''^r.
/// Degree-n module is the ordered sum over p = 0..n of C'^p (x) C''^{n-p}.
inline CochainComplex tensor(const CochainComplex& a, const CochainComplex& b) {
  require_valid(a);
  require_valid(b);
  if (a.algebra()->rank() > 0 && b.algebra()->rank() > 0 && a.algebra()->grid() != b.algebra()->grid())
    throw ValidationError("tensor: torus factors need a common grid");
  AlgebraPtr target = TraceAlgebra::tensor(*a.algebra(), *b.algebra());
  int top = a.top() + b.top();

  // offsets of the summands C'^p (x) C''^{n-p} inside degree n
  auto offset = [&](int n, int p) {
    int o = 0;
    for (int q = 0; q < p; ++q) o += a.rank(q) * b.rank(n - q);
    return o;
  };
  std::vector<int> ranks(top + 1, 0);
  for (int n = 0; n <= top; ++n) ranks[n] = offset(n, n + 1);

  auto place = [](Morphism& dst, const Morphism& src, int r0, int c0) {
    for (int i = 0; i < src.rows(); ++i)
      for (int j = 0; j < src.cols(); ++j)
        if (!src.at(i, j).empty()) dst.set(r0 + i, c0 + j, dst.at(r0 + i, c0 + j) + src.at(i, j));
  };

  std::vector<Morphism> d;
  for (int n = 0; n < top; ++n) {
    Morphism m = Morphism::zero(target, ranks[n + 1], ranks[n]);
    for (int p = 0; p <= n; ++p) {
      int r = n - p;
      if (a.rank(p) == 0 || b.rank(r) == 0) continue;
      int col = offset(n, p);
      if (p < a.top() && a.rank(p + 1) > 0) {
        Morphism blk = Morphism::tensor(a.d(p), Morphism::identity(b.algebra(), b.rank(r)), target);
        place(m, blk, offset(n + 1, p + 1), col);
      }
      if (r < b.top() && b.rank(r + 1) > 0) {
        Morphism blk = Morphism::tensor(Morphism::identity(a.algebra(), a.rank(p)), b.d(r), target);
        if (p % 2 == 1) blk *= -1.0;
        place(m, blk, offset(n + 1, p), col);
      }
    }
    d.push_back(std::move(m));
  }
  return CochainComplex(target, std::move(ranks), std::move(d));
}

/// Product-formula post-checks for C = C' (x) C'': Betti convolution and
/// psi(C) = psi' chi'' + chi' psi''. Returns the larger residual.
inline double tensor_euler_residual(const EulerData& a, const EulerData& b, const EulerData& ab) {
  double r = 0.0;
  for (std::size_t n = 0; n < ab.betti.size(); ++n) {
    double conv = 0.0;
    for (std::size_t p = 0; p <= n; ++p)
      if (p < a.betti.size() && n - p < b.betti.size()) conv += a.betti[p] * b.betti[n - p];
    r = std::max(r, std::abs(conv - ab.betti[n]));
  }
  r = std::max(r, std::abs(ab.chi - a.chi * b.chi));
  r = std::max(r, std::abs(ab.psi - (a.psi * b.chi + a.chi * b.psi)));
  return r;
}

// ---------------------------------------------------------------------------
// Random complexes over finite group algebras with d o d = 0 planted exactly.

inline Morphism random_morphism(const AlgebraPtr& alg, int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Morphism m(alg, rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      AlgebraElement e(alg);
      for (int h = 0; h < alg->order(); ++h) e.add(Site{h, std::vector<int>(alg->rank(), 0)}, g(rng));
      m.set(i, j, std::move(e));
    }
  return m;
}

/// d_i = Y_i (1 - P_i), P_i the projector onto range d_{i-1}.
inline CochainComplex random_complex(const AlgebraPtr& alg, const std::vector<int>& ranks, std::mt19937_64& rng) {
  require(alg->rank() == 0, "random complexes are built over finite group algebras");
  std::vector<Morphism> d;
  for (std::size_t i = 0; i + 1 < ranks.size(); ++i) {
    Morphism y = random_morphism(alg, ranks[i + 1], ranks[i], rng);
    if (i > 0 && ranks[i] > 0) {
      const Morphism& prev = d.back();
      Morphism gram = prev.adjoint() * prev;
      double kappa = vnla::spectral_measure(gram).kernel_band();
      Morphism pinv = gram.apply([kappa](double x) { return x > kappa ? 1.0 / x : 0.0; });
      Morphism p = prev * pinv * prev.adjoint();
      y = y * (Morphism::identity(alg, ranks[i]) - p);
    }
    d.push_back(std::move(y));
  }
  return CochainComplex(alg, ranks, std::move(d));
}

}  // namespace torsionlab::cochain
