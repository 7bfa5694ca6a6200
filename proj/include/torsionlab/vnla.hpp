#pragma once

// Linear algebra in the von Neumann sense: traces, dimensions, spectral
// functions, Fuglede-Kadison determinants and their regularized versions,
// Novikov-Shubin exponents and dilational comparison of spectral functions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "torsionlab/algebra.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/morphism.hpp"
#include "torsionlab/parallel.hpp"

namespace torsionlab::vnla {

inline constexpr double kSelfAdjointTol = 1e-10;
inline constexpr double kProjectorTol = 1e-10;

inline double trace_element(const AlgebraElement& a) { return a.trace(); }

inline double trace_element(const TraceAlgebra& alg, const AlgebraElement& a) {
  if (!a.algebra() || !a.algebra()->same_structure(alg))
    throw ValidationError("element does not belong to algebra of kind " + to_string(alg.kind()));
  return a.trace();
}

inline double trace_morphism(const Morphism& f) {
  if (!f.square()) throw ValidationError("trace of a non-square morphism");
  return f.trace();
}

/// Largest deviation from selfadjointness over the quadrature nodes.
inline double selfadjoint_residual(const Morphism& f) {
  if (!f.square()) return std::numeric_limits<double>::infinity();
  return (f - f.adjoint()).max_fiber_norm();
}

/// Spectral distribution of a selfadjoint morphism with von Neumann weights.
/// All fiber eigenvalues are kept in one sorted list; each carries the same
/// weight 1 / (nodes * |G|), so the total mass is the rank.
class SpectralMeasure {
 public:
  SpectralMeasure() = default;
  SpectralMeasure(std::vector<double> values, double weight, std::size_t fibers)
      : values_(std::move(values)), weight_(weight), fibers_(fibers) {
    std::sort(values_.begin(), values_.end());
  }

  const std::vector<double>& values() const { return values_; }
  double weight() const { return weight_; }
  std::size_t fibers() const { return fibers_; }
  double total_mass() const { return weight_ * static_cast<double>(values_.size()); }

  double norm() const {
    if (values_.empty()) return 0.0;
    return std::max(std::abs(values_.front()), std::abs(values_.back()));
  }
  double min_value() const { return values_.empty() ? 0.0 : values_.front(); }

  /// Kernel band: kappa = max(1e-12, 1e-9 * ||f||).
  double kernel_band() const { return std::max(1e-12, 1e-9 * norm()); }

  /// N(lambda): mass of (-inf, lambda]. Right-continuous.
  double cumulative(double lambda) const {
    auto it = std::upper_bound(values_.begin(), values_.end(), lambda);
    return weight_ * static_cast<double>(it - values_.begin());
  }
  /// Mass of (lo, hi].
  double mass_in(double lo, double hi) const { return hi <= lo ? 0.0 : cumulative(hi) - cumulative(lo); }

  double null_dim() const { return mass_in(-kernel_band(), kernel_band()); }

  /// sum of weight * fn(mu) over the values selected by keep, pairwise-summed.
  double integrate(const std::function<double(double)>& fn,
                   const std::function<bool(double)>& keep = nullptr) const {
    std::vector<double> terms;
    terms.reserve(values_.size());
    for (double v : values_)
      if (!keep || keep(v)) terms.push_back(fn(v));
    return weight_ * pairwise_sum(terms);
  }

 private:
  std::vector<double> values_;
  double weight_ = 1.0;
  std::size_t fibers_ = 1;
};

inline SpectralMeasure spectral_measure(const Morphism& f) {
  if (!f.square()) throw ValidationError("spectral measure of a non-square morphism");
  double res = selfadjoint_residual(f);
  if (res > kSelfAdjointTol) throw ValidationError("spectral measure needs a selfadjoint morphism (residual " +
                                                   std::to_string(res) + ")");
  const AlgebraPtr& alg = f.algebra();
  std::size_t nodes = alg->node_count();
  std::size_t per = static_cast<std::size_t>(f.rows()) * alg->order();
  std::vector<double> values(nodes * per);
  parallel_for(nodes, [&](std::size_t k) {
    Matrix m = f.realize_node(k);
    if (per == 0) return;
    if (per == 1) {
      values[k] = m(0, 0).real();
      return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    for (std::size_t i = 0; i < per; ++i) values[k * per + i] = es.eigenvalues()(static_cast<Eigen::Index>(i));
  });
  return SpectralMeasure(std::move(values), 1.0 / (static_cast<double>(nodes) * alg->order()), nodes);
}

/// Eigen-decomposition per fiber, kept for spectral projectors.
struct FiberEigen {
  AlgebraPtr algebra;
  int rank = 0;
  std::vector<RealVector> values;
  std::vector<Matrix> vectors;
};

inline FiberEigen fiber_eigen(const Morphism& f) {
  if (!f.square()) throw ValidationError("fiber eigen-decomposition of a non-square morphism");
  FiberEigen out{f.algebra(), f.rows(), {}, {}};
  std::size_t nodes = f.algebra()->node_count();
  out.values.resize(nodes);
  out.vectors.resize(nodes);
  parallel_for(nodes, [&](std::size_t k) {
    Matrix m = f.realize_node(k);
    if (m.rows() == 0) {
      out.values[k] = RealVector(0);
      out.vectors[k] = Matrix(0, 0);
      return;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    out.values[k] = es.eigenvalues();
    out.vectors[k] = es.eigenvectors();
  });
  return out;
}

/// Spectral projector of a selfadjoint morphism onto spectrum in [lo, hi].
inline FiberField spectral_projector(const FiberEigen& fe, double lo, double hi) {
  FiberField out{fe.algebra, fe.rank, fe.rank, {}};
  out.fibers.resize(fe.values.size());
  for (std::size_t k = 0; k < fe.values.size(); ++k) {
    const RealVector& v = fe.values[k];
    RealVector sel = v.unaryExpr([&](double x) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
    out.fibers[k] = fe.vectors[k] * sel.cast<cplx>().asDiagonal() * fe.vectors[k].adjoint();
  }
  return out;
}

inline FiberField spectral_projector(const Morphism& f, double lo, double hi) {
  return spectral_projector(fiber_eigen(f), lo, hi);
}

/// dim_N of the submodule cut out by an orthogonal projector.
inline double dim_N(const FiberField& p) {
  if (p.rows != p.cols) throw ValidationError("dim_N: projector must be square");
  double res = 0.0;
  for (const auto& m : p.fibers) {
    res = std::max(res, (m - m.adjoint()).norm());
    res = std::max(res, (m * m - m).norm());
  }
  if (res > kProjectorTol) throw ValidationError("dim_N: input is not an orthogonal projector (residual " +
                                                 std::to_string(res) + ")");
  return p.trace();
}

inline double dim_N(const Morphism& p) { return dim_N(FiberField::of(p)); }

/// F_f(lambda): mass of spec(f* f) in (0, lambda], kernel excluded.
inline double gs_function(const SpectralMeasure& ff, double lambda) {
  double kappa = ff.kernel_band();
  return ff.mass_in(kappa, std::max(lambda, kappa));
}

inline double gs_function(const Morphism& f, double lambda) {
  return gs_function(spectral_measure(f.adjoint() * f), lambda);
}

/// integral of log(mu) dN(mu) for a measure bounded below by its kernel band.
inline double logdet_N(const SpectralMeasure& mu) {
  if (mu.total_mass() == 0.0) return 0.0;
  if (mu.min_value() <= mu.kernel_band())
    throw DomainError("logdet_N: spectrum reaches the kernel band; use logdet_regularized");
  return mu.integrate([](double x) { return std::log(x); });
}

inline double logdet_N(const Morphism& f) { return logdet_N(spectral_measure(f)); }

/// log |det_FK f| = 1/2 logdet_N(f* f) for an arbitrary (invertible) morphism.
/// Square morphisms go through an LU of each fiber, which avoids squaring the
/// condition number.
inline double logdet_fk(const Morphism& f) {
  if (!f.square() || f.rows() == 0) return 0.5 * logdet_N(f.adjoint() * f);
  const AlgebraPtr& alg = f.algebra();
  std::size_t nodes = alg->node_count();
  std::vector<double> logs(nodes);
  std::vector<char> near_singular(nodes, 0);
  parallel_for(nodes, [&](std::size_t k) {
    Eigen::PartialPivLU<Matrix> lu(f.realize_node(k));
    auto d = lu.matrixLU().diagonal().cwiseAbs();
    near_singular[k] = !(d.minCoeff() > 1e-12 * d.maxCoeff());
    logs[k] = d.array().log().sum();
  });
  // a (numerical) kernel: defer to the spectral path, which reports it
  for (char c : near_singular)
    if (c) return 0.5 * logdet_N(f.adjoint() * f);
  return pairwise_sum(logs) / (static_cast<double>(nodes) * alg->order());
}

inline double vol_N(const Morphism& f) {
  auto ff = spectral_measure(f.adjoint() * f);
  if (ff.total_mass() > 0.0 && ff.min_value() <= ff.kernel_band())
    throw DomainError("vol_N: morphism is not an isomorphism");
  return std::exp(0.5 * logdet_N(ff));
}

// ---------------------------------------------------------------------------
// Determinant class.

/// Verdict on the convergence of int_{0+}^1 log(lambda) dN(lambda), read off
/// the decade integrals J_k over (10^{-k-1}, 10^{-k}].
struct DetClassVerdict {
  bool det_class = true;
  double partial_integral = 0.0;  // int over (floor, 1]
  double tail_slope = 0.0;        // log-log slope of |J_k| vs k, 0 if not fitted
  int resolved_decades = 0;
  std::vector<double> decade_integrals;
  std::string note;
};

/// Threshold on the decade slope: |J_k| ~ k^-1 diverges, k^-2 converges.
inline constexpr double kDetClassSlope = -1.5;

inline DetClassVerdict determinant_class_from_decades(std::vector<double> J) {
  DetClassVerdict v;
  while (!J.empty() && J.back() == 0.0) J.pop_back();
  v.decade_integrals = J;
  for (double x : J) v.partial_integral += x;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t k = 0; k < J.size(); ++k)
    if (J[k] != 0.0) pts.emplace_back(std::log(static_cast<double>(k + 1)), std::log(std::abs(J[k])));
  v.resolved_decades = static_cast<int>(pts.size());
  if (pts.size() < 4) {
    v.note = "no accumulation of spectrum at 0 within resolution";
    return v;
  }
  std::vector<std::pair<double, double>> tail(pts.begin() + static_cast<long>(pts.size() / 2), pts.end());
  double mx = 0, my = 0;
  for (auto [x, y] : tail) mx += x, my += y;
  mx /= tail.size();
  my /= tail.size();
  double sxx = 0, sxy = 0;
  for (auto [x, y] : tail) sxx += (x - mx) * (x - mx), sxy += (x - mx) * (y - my);
  v.tail_slope = sxx > 0 ? sxy / sxx : 0.0;
  v.det_class = v.tail_slope < kDetClassSlope;
  v.note = v.det_class ? "decade integrals decay summably" : "decade integrals decay like a divergent series";
  return v;
}

/// Weighted spectrum (mu_i, w_i): decade integrals of log over (0, 1].
inline DetClassVerdict determinant_class(std::span<const double> mu, std::span<const double> w, double kappa) {
  std::vector<double> J;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double x = mu[i];
    if (x <= kappa || x > 1.0) continue;
    auto k = static_cast<std::size_t>(std::floor(-std::log10(x)));
    if (x == 1.0) k = 0;
    if (J.size() <= k) J.resize(k + 1, 0.0);
    J[k] += w[i] * std::log(x);
  }
  return determinant_class_from_decades(std::move(J));
}

inline DetClassVerdict determinant_class(const SpectralMeasure& m) {
  std::vector<double> w(m.values().size(), m.weight());
  return determinant_class(m.values(), w, m.kernel_band());
}

// ---------------------------------------------------------------------------
// Regularized log determinants (elements of the space of germs D).

struct RegularizedLogDet {
  double null_dim = 0.0;
  std::vector<double> lambda_grid;
  std::vector<double> samples;  // v(lambda) = logdet(f + lambda) - null_dim log(lambda)
  bool det_class = true;
  bool samples_converge = true;  // cross-check from the sample sequence
  double value = 0.0;
  double diagnostic = 0.0;  // max successive-sample difference over the 4 smallest-lambda points
  DetClassVerdict verdict;
};

struct LambdaGrid {
  double lo = 1e-8;
  double hi = 1.0;
  int points = 16;

  std::vector<double> values() const {
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
      g[i] = lo * std::pow(hi / lo, points == 1 ? 0.0 : static_cast<double>(i) / (points - 1));
    return g;
  }
};

/// Aitken/Richardson extrapolation to lambda -> 0 on a geometric grid, using
/// the three smallest-lambda samples v0 (smallest), v1, v2.
inline double extrapolate_to_zero(double v0, double v1, double v2) {
  double d1 = v1 - v0, d2 = v2 - v1;
  if (std::abs(d1) < 1e-15 || std::abs(d2) < 1e-15) return v0;
  double rho = d2 / d1;
  if (!(rho > 1.0 + 1e-9)) return v0;
  return v0 - d1 / (rho - 1.0);
}

inline RegularizedLogDet logdet_regularized(const SpectralMeasure& mu, const LambdaGrid& grid = {}) {
  RegularizedLogDet r;
  double kappa = mu.kernel_band();
  if (mu.total_mass() > 0.0 && mu.min_value() < -kappa)
    throw ValidationError("logdet_regularized needs a nonnegative operator");
  r.null_dim = mu.null_dim();
  r.lambda_grid = grid.values();
  auto nonnull = [kappa](double x) { return x > kappa; };
  for (double lam : r.lambda_grid) {
    double v = mu.integrate([lam](double x) { return std::log(x + lam); }, nonnull);
    r.samples.push_back(v);
  }
  r.verdict = determinant_class(mu);
  r.det_class = r.verdict.det_class;
  const auto& s = r.samples;
  std::size_t n = s.size();
  if (n >= 2) {
    for (std::size_t i = 0; i + 1 < std::min<std::size_t>(n, 4); ++i)
      r.diagnostic = std::max(r.diagnostic, std::abs(s[i + 1] - s[i]));
  }
  // differences toward lambda -> 0 must not grow for a convergent germ
  if (n >= 3) {
    double d_small = std::abs(s[1] - s[0]), d_next = std::abs(s[2] - s[1]);
    r.samples_converge = d_small <= d_next + 1e-12;
  }
  r.value = n >= 3 ? extrapolate_to_zero(s[0], s[1], s[2]) : (n ? s[0] : 0.0);
  return r;
}

inline RegularizedLogDet logdet_regularized(const Morphism& f, const LambdaGrid& grid = {}) {
  return logdet_regularized(spectral_measure(f), grid);
}

// ---------------------------------------------------------------------------
// Novikov-Shubin exponent.

struct NovikovShubin {
  bool infinite = false;
  double alpha = std::numeric_limits<double>::infinity();
  int samples = 0;
  double residual = 0.0;
};

inline NovikovShubin novikov_shubin(const SpectralMeasure& ff, double lambda_min = 1e-6, double lambda_max = 1e-2,
                                    int per_decade = 5) {
  NovikovShubin out;
  double decades = std::log10(lambda_max / lambda_min);
  int n = std::max(2, static_cast<int>(std::lround(decades * per_decade)) + 1);
  std::vector<double> xs, ys;
  for (int i = 0; i < n; ++i) {
    double lam = lambda_min * std::pow(lambda_max / lambda_min, static_cast<double>(i) / (n - 1));
    double F = gs_function(ff, lam);
    if (F > 0.0) {
      xs.push_back(std::log(lam));
      ys.push_back(std::log(F));
    }
  }
  out.samples = static_cast<int>(xs.size());
  if (xs.empty()) {
    out.infinite = true;
    return out;
  }
  if (xs.size() < 4) throw ToleranceError("novikov_shubin: fewer than 4 nonzero F samples on the window");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i], my += ys[i];
  mx /= xs.size();
  my /= xs.size();
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) sxx += (xs[i] - mx) * (xs[i] - mx), sxy += (xs[i] - mx) * (ys[i] - my);
  out.alpha = sxy / sxx;
  double b = my - out.alpha * mx, rss = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) rss += std::pow(ys[i] - (out.alpha * xs[i] + b), 2);
  out.residual = std::sqrt(rss / xs.size());
  return out;
}

inline NovikovShubin novikov_shubin(const Morphism& f, double lambda_min = 1e-6, double lambda_max = 1e-2) {
  return novikov_shubin(spectral_measure(f.adjoint() * f), lambda_min, lambda_max);
}

// ---------------------------------------------------------------------------
// Dilational equivalence.

/// A nondecreasing function sampled on an increasing lambda grid.
struct SampledFunction {
  std::vector<double> lambda;
  std::vector<double> value;

  /// Piecewise-linear in log(lambda); nullopt outside the sampled range.
  std::optional<double> at(double x) const {
    if (lambda.empty() || x < lambda.front() * (1 - 1e-12) || x > lambda.back() * (1 + 1e-12)) return std::nullopt;
    auto it = std::lower_bound(lambda.begin(), lambda.end(), x);
    if (it == lambda.begin()) return value.front();
    if (it == lambda.end()) return value.back();
    std::size_t i = static_cast<std::size_t>(it - lambda.begin());
    double a = std::log(lambda[i - 1]), b = std::log(lambda[i]), t = (std::log(x) - a) / (b - a);
    return value[i - 1] + t * (value[i] - value[i - 1]);
  }

  static SampledFunction sample(const std::function<double(double)>& fn, double lo, double hi, int n) {
    SampledFunction s;
    for (int i = 0; i < n; ++i) {
      double x = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
      s.lambda.push_back(x);
      s.value.push_back(fn(x));
    }
    return s;
  }
};

struct DilationalResult {
  bool equivalent = false;
  double constant = std::numeric_limits<double>::infinity();
};

inline constexpr double kMaxDilation = 1e6;

/// Smallest C >= 1 with G(lambda/C) <= F(lambda) <= G(C lambda) at every grid
/// point of F where both scaled arguments are sampled.
inline DilationalResult dilational_compare(const SampledFunction& F, const std::function<std::optional<double>(double)>& G,
                                           double tol = 1e-12) {
  if (F.lambda.empty()) throw ValidationError("dilational_compare: empty grid");
  auto ok = [&](double C) {
    for (std::size_t i = 0; i < F.lambda.size(); ++i) {
      double x = F.lambda[i], f = F.value[i];
      auto lo = G(x / C), hi = G(x * C);
      if (lo && *lo > f + tol) return false;
      if (hi && f > *hi + tol) return false;
    }
    return true;
  };
  DilationalResult r;
  if (ok(1.0)) return {true, 1.0};
  if (!ok(kMaxDilation)) return r;
  double a = 0.0, b = std::log(kMaxDilation);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    double m = 0.5 * (a + b);
    (ok(std::exp(m)) ? b : a) = m;
  }
  return {true, std::exp(b)};
}

inline DilationalResult dilational_compare(const SampledFunction& F, const SampledFunction& G, double tol = 1e-12) {
  if (G.lambda.empty()) throw ValidationError("dilational_compare: empty grid");
  return dilational_compare(F, [&G](double x) { return G.at(x); }, tol);
}

}  // namespace torsionlab::vnla
