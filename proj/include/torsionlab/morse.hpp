#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "torsionlab/algebra.hpp"
#include "torsionlab/complex.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/morphism.hpp"

namespace torsionlab::morse {

enum class GroupKind { trivial, finite, free_abelian };

inline std::string to_string(GroupKind k) {
  switch (k) {
    case GroupKind::trivial: return "trivial";
    case GroupKind::finite: return "finite";
    case GroupKind::free_abelian: return "free_abelian";
  }
  return "?";
}

/// The deck group: trivial, a finite group by its table, or Z^rank.
/// Elements are keys: {} (trivial), {g} (finite), exponent vector (Z^rank).
struct Group {
  GroupKind kind = GroupKind::trivial;
  TraceAlgebra::Table table;  // finite only
  int rank = 0;                // free abelian only

  using Key = std::vector<int>;

  static Group trivial() { return {}; }
  static Group finite(TraceAlgebra::Table t) {
    TraceAlgebra::finite_group(t);  // validates the table
    return {GroupKind::finite, std::move(t), 0};
  }
  static Group free_abelian(int d) {
    require(d >= 1, "free abelian rank must be >= 1");
    return {GroupKind::free_abelian, {}, d};
  }

  Key identity() const {
    switch (kind) {
      case GroupKind::trivial: return {};
      case GroupKind::finite: return {TraceAlgebra::finite_group(table)->identity()};
      case GroupKind::free_abelian: return Key(rank, 0);
    }
    return {};
  }

  Key mul(const Key& a, const Key& b) const {
    switch (kind) {
      case GroupKind::trivial: return {};
      case GroupKind::finite: return {table[a[0]][b[0]]};
      case GroupKind::free_abelian: {
        Key c(rank);
        for (int i = 0; i < rank; ++i) c[i] = a[i] + b[i];
        return c;
      }
    }
    return {};
  }

  void check_key(const Key& k) const {
    switch (kind) {
      case GroupKind::trivial: require(k.empty(), "trivial group element must be []"); break;
      case GroupKind::finite:
        require(k.size() == 1 && k[0] >= 0 && k[0] < static_cast<int>(table.size()), "finite group index out of range");
        break;
      case GroupKind::free_abelian: require(static_cast<int>(k.size()) == rank, "lattice point has the wrong rank"); break;
    }
  }
};

/// Element of the integral group ring Z[G] with exact coefficients.
class GroupRing {
 public:
  GroupRing() = default;
  static GroupRing monomial(Group::Key g, std::int64_t c = 1) {
    GroupRing r;
    r.add(std::move(g), c);
    return r;
  }

  void add(Group::Key g, std::int64_t c) {
    if (c == 0) return;
    auto it = terms_.try_emplace(std::move(g), 0).first;
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
  const std::map<Group::Key, std::int64_t>& terms() const { return terms_; }
  bool zero() const { return terms_.empty(); }

  GroupRing operator-() const {
    GroupRing r = *this;
    for (auto& [g, c] : r.terms_) c = -c;
    return r;
  }
  friend GroupRing operator+(GroupRing a, const GroupRing& b) {
    for (const auto& [g, c] : b.terms_) a.add(g, c);
    return a;
  }
  friend GroupRing operator-(const GroupRing& a, const GroupRing& b) { return a + (-b); }

  static GroupRing mul(const Group& G, const GroupRing& a, const GroupRing& b) {
    GroupRing r;
    for (const auto& [ga, ca] : a.terms_)
      for (const auto& [gb, cb] : b.terms_) r.add(G.mul(ga, gb), ca * cb);
    return r;
  }

 private:
  std::map<Group::Key, std::int64_t> terms_;
};

using IntMatrix = std::vector<std::vector<GroupRing>>;

/// Harmonic data for the metric torsion: per degree, the integrals of an
/// orthonormal harmonic frame over the unstable cells (m_q x h_q).
struct HarmonicData {
  std::vector<Eigen::MatrixXd> cell_integrals;
};

/// Self-indexing generalized triangulation: critical counts m_q and
/// incidence matrices M_q (m_q x m_{q-1}) for q = 1..top.
struct MorseSpec {
  std::string name;
  Group group;
  std::vector<int> crit_counts;
  std::vector<IntMatrix> incidence;  // incidence[q-1] = M_q
  std::optional<HarmonicData> harmonic;
};

struct SpecReport {
  std::vector<std::int64_t> in4_residuals;  // max |coefficient| of M_{q+1} M_q
  bool ok = true;
};

inline SpecReport validate_spec(const MorseSpec& s) {
  if (s.crit_counts.empty()) throw ValidationError("crit_counts is empty");
  for (int m : s.crit_counts)
    if (m < 0) throw ValidationError("negative critical count");
  if (s.incidence.size() + 1 != s.crit_counts.size())
    throw ValidationError("expected " + std::to_string(s.crit_counts.size() - 1) + " incidence matrices");
  for (std::size_t q = 1; q < s.crit_counts.size(); ++q) {
    const IntMatrix& M = s.incidence[q - 1];
    if (static_cast<int>(M.size()) != s.crit_counts[q])
      throw ValidationError("M_" + std::to_string(q) + " needs " + std::to_string(s.crit_counts[q]) + " rows");
    for (const auto& row : M) {
      if (static_cast<int>(row.size()) != s.crit_counts[q - 1])
        throw ValidationError("M_" + std::to_string(q) + " needs " + std::to_string(s.crit_counts[q - 1]) + " columns");
      for (const auto& e : row)
        for (const auto& [g, c] : e.terms()) s.group.check_key(g);
    }
  }
  SpecReport r;
  for (std::size_t q = 1; q + 1 < s.crit_counts.size(); ++q) {
    const IntMatrix &A = s.incidence[q], &B = s.incidence[q - 1];
    std::int64_t worst = 0;
    for (int i = 0; i < s.crit_counts[q + 1]; ++i)
      for (int k = 0; k < s.crit_counts[q - 1]; ++k) {
        GroupRing sum;
        for (int j = 0; j < s.crit_counts[q]; ++j) sum = sum + GroupRing::mul(s.group, A[i][j], B[j][k]);
        for (const auto& [g, c] : sum.terms()) worst = std::max(worst, c < 0 ? -c : c);
      }
    r.in4_residuals.push_back(worst);
    if (worst != 0) r.ok = false;
  }
  if (!r.ok) throw ValidationError("In4 violated: M_{q+1} M_q != 0 in the integral group ring");
  return r;
}

// ---------------------------------------------------------------------------
// Representations.

/// A unitary representation of the deck group on a free module of rank
/// `dim` over `algebra`, given on generators (Z^d) or on all elements (finite).
struct Representation {
  std::string name;
  AlgebraPtr algebra;
  int dim = 1;
  std::vector<Morphism> images;  // Z^d: generator images; finite: image of every element; trivial: empty
  bool trivial_action = false;

  Morphism image(const Group& G, const Group::Key& g) const {
    switch (G.kind) {
      case GroupKind::trivial: return Morphism::identity(algebra, dim);
      case GroupKind::finite: return images.at(g[0]);
      case GroupKind::free_abelian: {
        Morphism m = Morphism::identity(algebra, dim);
        for (int i = 0; i < G.rank; ++i) {
          Morphism u = g[i] >= 0 ? images.at(i) : images.at(i).adjoint();
          for (int e = 0; e < std::abs(g[i]); ++e) m = m * u;
        }
        return m;
      }
    }
    return Morphism::identity(algebra, dim);
  }

  Morphism image(const Group& G, const GroupRing& x) const {
    Morphism m = Morphism::zero(algebra, dim, dim);
    for (const auto& [g, c] : x.terms()) m += image(G, g) * cplx(static_cast<double>(c));
    return m;
  }

  /// Unitarity of the images and the defining relations of G.
  double check(const Group& G) const {
    double r = 0.0;
    auto id = Morphism::identity(algebra, dim);
    for (const auto& u : images) r = std::max(r, (u.adjoint() * u - id).max_fiber_norm());
    if (G.kind == GroupKind::free_abelian) {
      if (static_cast<int>(images.size()) != G.rank) throw ValidationError("representation needs one image per generator");
      for (std::size_t i = 0; i < images.size(); ++i)
        for (std::size_t j = i + 1; j < images.size(); ++j)
          r = std::max(r, (images[i] * images[j] - images[j] * images[i]).max_fiber_norm());
    } else if (G.kind == GroupKind::finite) {
      if (images.size() != G.table.size()) throw ValidationError("representation needs one image per group element");
      for (std::size_t a = 0; a < images.size(); ++a)
        for (std::size_t b = 0; b < images.size(); ++b)
          r = std::max(r, (images[a] * images[b] - images[G.table[a][b]]).max_fiber_norm());
    }
    return r;
  }

  static Representation trivial(const Group& G, int dim = 1) {
    Representation r{"trivial", TraceAlgebra::scalar(), dim, {}, true};
    auto id = Morphism::identity(r.algebra, dim);
    if (G.kind == GroupKind::free_abelian) r.images.assign(G.rank, id);
    if (G.kind == GroupKind::finite) r.images.assign(G.table.size(), id);
    return r;
  }

  /// Unitary character of Z^d: every generator acts by exp(2 pi i k / p).
  static Representation character(const Group& G, int p, int k) {
    if (G.kind != GroupKind::free_abelian) throw ValidationError("char:p,k needs a free abelian deck group");
    require(p >= 1, "character order must be >= 1");
    auto sc = TraceAlgebra::scalar();
    double th = 2.0 * std::numbers::pi * k / p;
    Representation r{"char:" + std::to_string(p) + "," + std::to_string(k), sc, 1, {}, (k % p) == 0};
    r.images.assign(G.rank, Morphism::scalar(AlgebraElement::unit(sc, std::polar(1.0, th))));
    return r;
  }

  /// The regular representation on N(G): multipliers z_i on L^2(T^d), or
  /// left multiplication in the finite group algebra.
  static Representation regular(const Group& G, int grid) {
    switch (G.kind) {
      case GroupKind::trivial: return trivial(G);
      case GroupKind::finite: {
        auto alg = TraceAlgebra::finite_group(G.table);
        Representation r{"regular", alg, 1, {}, false};
        for (int g = 0; g < alg->order(); ++g) r.images.push_back(Morphism::scalar(AlgebraElement::group(alg, g)));
        return r;
      }
      case GroupKind::free_abelian: {
        auto alg = TraceAlgebra::torus(G.rank, grid);
        Representation r{"regular", alg, 1, {}, false};
        for (int i = 0; i < G.rank; ++i) {
          std::vector<int> k(G.rank, 0);
          k[i] = 1;
          r.images.push_back(Morphism::scalar(AlgebraElement::monomial(alg, k)));
        }
        return r;
      }
    }
    return trivial(G);
  }

  static Representation direct_sum(const Representation& a, const Representation& b) {
    if (!a.algebra->same_structure(*b.algebra)) throw ValidationError("direct sum needs a common algebra");
    require(a.images.size() == b.images.size(), "direct sum of representations of different groups");
    Representation r{a.name + "+" + b.name, a.algebra, a.dim + b.dim, {}, a.trivial_action && b.trivial_action};
    for (std::size_t i = 0; i < a.images.size(); ++i) r.images.push_back(Morphism::direct_sum(a.images[i], b.images[i]));
    return r;
  }
};

/// Parses trivial | char:p,k | regular.
inline Representation parse_representation(const Group& G, const std::string& s, int grid) {
  if (s == "trivial") return Representation::trivial(G);
  if (s == "regular") return Representation::regular(G, grid);
  if (s.rfind("char:", 0) == 0) {
    auto comma = s.find(',');
    if (comma == std::string::npos) throw ValidationError("expected char:p,k");
    try {
      int p = std::stoi(s.substr(5, comma - 5)), k = std::stoi(s.substr(comma + 1));
      return Representation::character(G, p, k);
    } catch (const std::logic_error&) {
      throw ValidationError("expected char:p,k with integers p, k");
    }
  }
  throw ValidationError("unknown representation '" + s + "'");
}

inline constexpr double kRepresentationTol = 1e-10;

/// delta_{q-1} = rho(M_q), ranks m_q * dim.
inline cochain::CochainComplex build_complex(const MorseSpec& s, const Representation& rho) {
  validate_spec(s);
  double res = rho.check(s.group);
  if (res > kRepresentationTol)
    throw ValidationError("representation fails unitarity/relations (residual " + std::to_string(res) + ")");
  std::vector<int> ranks;
  for (int m : s.crit_counts) ranks.push_back(m * rho.dim);
  std::vector<Morphism> d;
  for (std::size_t q = 1; q < s.crit_counts.size(); ++q) {
    const IntMatrix& M = s.incidence[q - 1];
    std::vector<std::vector<Morphism>> grid;
    for (int i = 0; i < s.crit_counts[q]; ++i) {
      std::vector<Morphism> row;
      for (int j = 0; j < s.crit_counts[q - 1]; ++j) row.push_back(rho.image(s.group, M[i][j]));
      grid.push_back(std::move(row));
    }
    if (grid.empty() || s.crit_counts[q - 1] == 0)
      d.push_back(Morphism::zero(rho.algebra, ranks[q], ranks[q - 1]));
    else
      d.push_back(Morphism::blocks(grid));
  }
  return cochain::CochainComplex(rho.algebra, std::move(ranks), std::move(d));
}

// ---------------------------------------------------------------------------
// Presets.

namespace detail {
inline GroupRing one_minus(const Group& G, Group::Key g) {
  return GroupRing::monomial(G.identity()) - GroupRing::monomial(std::move(g));
}
}  // namespace detail

/// S^1 of length L, height function with one minimum and one maximum.
inline MorseSpec circle(double length = 2.0 * std::numbers::pi) {
  require(length > 0, "circle length must be positive");
  MorseSpec s{"circle", Group::free_abelian(1), {1, 1}, {}, std::nullopt};
  s.incidence.push_back({{detail::one_minus(s.group, {1})}});
  HarmonicData h;
  h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(length)));
  h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, std::sqrt(length)));
  s.harmonic = h;
  return s;
}

/// Flat square torus of side L; generators a, b.
inline MorseSpec torus2(double side = 2.0 * std::numbers::pi) {
  require(side > 0, "torus side must be positive");
  MorseSpec s{"torus2", Group::free_abelian(2), {1, 2, 1}, {}, std::nullopt};
  const Group& G = s.group;
  s.incidence.push_back({{detail::one_minus(G, {1, 0})}, {detail::one_minus(G, {0, 1})}});
  s.incidence.push_back({{-detail::one_minus(G, {0, 1}), detail::one_minus(G, {1, 0})}});
  HarmonicData h;
  h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0 / side));
  h.cell_integrals.push_back(Eigen::MatrixXd::Identity(2, 2));
  h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, side));
  s.harmonic = h;
  return s;
}

/// Round unit sphere S^n (n = 2, 3): one minimum, one maximum.
inline MorseSpec sphere(int n) {
  require(n >= 1, "sphere dimension must be >= 1");
  MorseSpec s{"s" + std::to_string(n), Group::trivial(), std::vector<int>(n + 1, 0), {}, std::nullopt};
  s.crit_counts.front() = 1;
  s.crit_counts.back() = 1;
  for (int q = 1; q <= n; ++q)
    s.incidence.push_back(IntMatrix(s.crit_counts[q], std::vector<GroupRing>(s.crit_counts[q - 1])));
  double vol = 2.0 * std::pow(std::numbers::pi, 0.5 * (n + 1)) / std::tgamma(0.5 * (n + 1));
  HarmonicData h;
  for (int q = 0; q <= n; ++q) {
    if (q == 0)
      h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, 1.0 / std::sqrt(vol)));
    else if (q == n)
      h.cell_integrals.push_back(Eigen::MatrixXd::Constant(1, 1, std::sqrt(vol)));
    else
      h.cell_integrals.push_back(Eigen::MatrixXd(0, 0));
  }
  s.harmonic = h;
  return s;
}

inline MorseSpec preset(const std::string& name, double length = 2.0 * std::numbers::pi) {
  if (name == "circle") return circle(length);
  if (name == "torus2") return torus2(length);
  if (name == "s2") return sphere(2);
  if (name == "s3") return sphere(3);
  throw ValidationError("unknown preset '" + name + "' (circle, torus2, s2, s3)");
}

// ---------------------------------------------------------------------------
// Torsions.

inline cochain::TorsionResult comb_torsion(const MorseSpec& s, const Representation& rho,
                                           const vnla::LambdaGrid& grid = {}) {
  return cochain::torsion(build_complex(s, rho), grid);
}

struct MetricTorsion {
  double log_t = 0.0;
  std::string note;
};

/// 1/2 sum_q (-1)^q logdet(theta_q^* theta_q), theta_q the inverse of the
/// projected integration map on the harmonic frame.
inline MetricTorsion metric_torsion(const MorseSpec& s, const Representation& rho) {
  auto c = build_complex(s, rho);
  auto eu = cochain::euler(c);
  bool any = false;
  for (double b : eu.betti) any = any || b > 1e-9;
  if (!any) return {0.0, "no harmonic forms"};
  if (!s.harmonic) throw ValidationError("metric torsion needs harmonic data for " + s.name);
  if (!rho.trivial_action)
    throw ValidationError("harmonic data is only stored for representations with trivial action");

  // trivial action: the complex is dim copies of the trivial-representation complex
  auto base = build_complex(s, Representation::trivial(s.group));
  MetricTorsion out;
  for (int q = 0; q <= base.top(); ++q) {
    const Eigen::MatrixXd& I = s.harmonic->cell_integrals.at(q);
    Matrix delta = cochain::laplacian(base, q).realize({});
    if (delta.rows() == 0) {
      if (I.cols() != 0) throw ValidationError("harmonic data for degree " + std::to_string(q) + " on an empty module");
      continue;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(delta);
    double kappa = std::max(1e-12, 1e-9 * es.eigenvalues().cwiseAbs().maxCoeff());
    std::vector<int> harm;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()(i)) <= kappa) harm.push_back(i);
    if (static_cast<int>(harm.size()) != I.cols())
      throw ValidationError("harmonic data for degree " + std::to_string(q) + " does not match the Betti number");
    if (harm.empty()) continue;
    Matrix V(delta.rows(), static_cast<Eigen::Index>(harm.size()));
    for (std::size_t j = 0; j < harm.size(); ++j) V.col(j) = es.eigenvectors().col(harm[j]);
    Matrix B = V.adjoint() * I.cast<cplx>();
    double logdet_tt = -std::log(std::norm(B.determinant()));
    out.log_t += 0.5 * ((q % 2 == 0) ? 1.0 : -1.0) * logdet_tt;
  }
  out.log_t *= rho.dim;
  return out;
}

struct ReidemeisterResult {
  cochain::TorsionResult comb;
  MetricTorsion met;
  double log_t = 0.0;
  bool germ_level = false;
};

inline ReidemeisterResult reidemeister(const MorseSpec& s, const Representation& rho, const vnla::LambdaGrid& grid = {}) {
  ReidemeisterResult r;
  r.comb = comb_torsion(s, rho, grid);
  r.met = metric_torsion(s, rho);
  r.germ_level = !r.comb.det_class;
  r.log_t = r.comb.log_t + r.met.log_t;
  return r;
}

}  // namespace torsionlab::morse
