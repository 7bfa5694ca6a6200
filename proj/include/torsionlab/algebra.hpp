#pragma once

// Concrete finite von Neumann algebras: group algebras of finite groups, the
// multiplier algebra of Z^d (Laurent polynomials realized on the torus), and
// their tensor products. Everything is realized as G x torus with either
// factor allowed to be trivial, so scalars are the trivial group with d = 0.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "torsionlab/errors.hpp"

namespace torsionlab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

enum class AlgebraKind { scalar, finite_group, torus, mixed };

inline std::string to_string(AlgebraKind k) {
  switch (k) {
    case AlgebraKind::scalar: return "scalar";
    case AlgebraKind::finite_group: return "finite_group";
    case AlgebraKind::torus: return "torus";
    case AlgebraKind::mixed: return "mixed";
  }
  return "?";
}

class TraceAlgebra;
using AlgebraPtr = std::shared_ptr<const TraceAlgebra>;

class TraceAlgebra {
 public:
  using Table = std::vector<std::vector<int>>;

  static AlgebraPtr scalar() { return make(Table{{0}}, 0, 1); }

  /// table[i][j] is the index of g_i * g_j.
  static AlgebraPtr finite_group(Table table) { return make(std::move(table), 0, 1); }

  static AlgebraPtr cyclic(int p) {
    require(p >= 1, "cyclic group order must be positive");
    Table t(p, std::vector<int>(p));
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < p; ++j) t[i][j] = (i + j) % p;
    return finite_group(std::move(t));
  }

  /// S_3 as permutations of {0,1,2}; element 0 is the identity.
  static AlgebraPtr symmetric3() {
    const std::vector<std::array<int, 3>> perms = {{0, 1, 2}, {1, 0, 2}, {0, 2, 1},
                                                   {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
    auto index_of = [&](const std::array<int, 3>& p) {
      for (std::size_t i = 0; i < perms.size(); ++i)
        if (perms[i] == p) return static_cast<int>(i);
      return -1;
    };
    Table t(6, std::vector<int>(6));
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) {
        std::array<int, 3> c{};
        for (int k = 0; k < 3; ++k) c[k] = perms[i][perms[j][k]];
        t[i][j] = index_of(c);
      }
    return finite_group(std::move(t));
  }

  static AlgebraPtr torus(int rank, int grid) {
    require(rank >= 1, "torus rank must be >= 1");
    return make(Table{{0}}, rank, grid);
  }

  /// N(G1) (x) N(G2): product group and summed torus rank. The grid of the
  /// first torus factor wins when both carry one.
  static AlgebraPtr tensor(const TraceAlgebra& a, const TraceAlgebra& b) {
    int n1 = a.order(), n2 = b.order();
    Table t(n1 * n2, std::vector<int>(n1 * n2));
    for (int g1 = 0; g1 < n1; ++g1)
      for (int g2 = 0; g2 < n2; ++g2)
        for (int h1 = 0; h1 < n1; ++h1)
          for (int h2 = 0; h2 < n2; ++h2)
            t[g1 * n2 + g2][h1 * n2 + h2] = a.mul(g1, h1) * n2 + b.mul(g2, h2);
    int grid = a.rank() > 0 ? a.grid() : b.grid();
    return make(std::move(t), a.rank() + b.rank(), grid);
  }

  AlgebraPtr with_grid(int grid) const { return make(table_, rank_, grid); }

  AlgebraKind kind() const {
    if (rank_ == 0) return order() == 1 ? AlgebraKind::scalar : AlgebraKind::finite_group;
    return order() == 1 ? AlgebraKind::torus : AlgebraKind::mixed;
  }
  int order() const { return static_cast<int>(table_.size()); }
  int rank() const { return rank_; }
  int grid() const { return grid_; }
  const Table& table() const { return table_; }
  int identity() const { return identity_; }
  int mul(int a, int b) const { return table_[a][b]; }
  int inverse(int g) const { return inverse_[g]; }

  /// Quadrature nodes of the torus factor: grid^rank (1 when rank = 0).
  std::size_t node_count() const {
    std::size_t n = 1;
    for (int i = 0; i < rank_; ++i) n *= static_cast<std::size_t>(grid_);
    return n;
  }

  /// Angles of node idx, half-shifted: phi = 2 pi (j + 1/2) / grid.
  std::vector<double> node(std::size_t idx) const {
    std::vector<double> phi(rank_);
    for (int i = 0; i < rank_; ++i) {
      std::size_t j = idx % grid_;
      idx /= grid_;
      phi[i] = 2.0 * std::numbers::pi * (static_cast<double>(j) + 0.5) / grid_;
    }
    return phi;
  }

  bool same_structure(const TraceAlgebra& o) const {
    return rank_ == o.rank_ && table_ == o.table_;
  }
  bool operator==(const TraceAlgebra& o) const { return same_structure(o) && grid_ == o.grid_; }

 private:
  TraceAlgebra(Table table, int rank, int grid) : table_(std::move(table)), rank_(rank), grid_(grid) {}

  static AlgebraPtr make(Table table, int rank, int grid) {
    require(!table.empty(), "group table must be nonempty");
    require(grid >= 1, "quadrature grid must be positive");
    auto alg = std::shared_ptr<TraceAlgebra>(new TraceAlgebra(std::move(table), rank, grid));
    alg->validate_group();
    return alg;
  }

  void validate_group() {
    int n = order();
    for (const auto& row : table_) {
      require(static_cast<int>(row.size()) == n, "group table must be square");
      for (int v : row) require(v >= 0 && v < n, "group table entry out of range");
    }
    identity_ = -1;
    for (int e = 0; e < n && identity_ < 0; ++e) {
      bool ok = true;
      for (int j = 0; j < n && ok; ++j) ok = table_[e][j] == j && table_[j][e] == j;
      if (ok) identity_ = e;
    }
    require(identity_ >= 0, "group table has no identity");
    inverse_.assign(n, -1);
    for (int g = 0; g < n; ++g)
      for (int h = 0; h < n; ++h)
        if (table_[g][h] == identity_) inverse_[g] = h;
    for (int g = 0; g < n; ++g) require(inverse_[g] >= 0, "group table lacks inverses");
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          require(table_[table_[a][b]][c] == table_[a][table_[b][c]], "group table is not associative");
  }

  Table table_;
  int rank_ = 0;
  int grid_ = 1;
  int identity_ = 0;
  std::vector<int> inverse_;
};

/// A basis point of the algebra: group element g and lattice point k in Z^d.
struct Site {
  int g = 0;
  std::vector<int> k;
  auto operator<=>(const Site&) const = default;
};

class AlgebraElement {
 public:
  AlgebraElement() = default;
  explicit AlgebraElement(AlgebraPtr alg) : alg_(std::move(alg)) {}

  static AlgebraElement zero(AlgebraPtr alg) { return AlgebraElement(std::move(alg)); }
  static AlgebraElement unit(AlgebraPtr alg, cplx c = 1.0) {
    AlgebraElement e(alg);
    e.add(e.identity_site(), c);
    return e;
  }
  static AlgebraElement group(AlgebraPtr alg, int g, cplx c = 1.0) {
    require(g >= 0 && g < alg->order(), "group element index out of range");
    AlgebraElement e(alg);
    e.add(Site{g, std::vector<int>(alg->rank(), 0)}, c);
    return e;
  }
  /// z^k on the torus factor.
  static AlgebraElement monomial(AlgebraPtr alg, std::vector<int> k, cplx c = 1.0) {
    require(static_cast<int>(k.size()) == alg->rank(), "lattice point has wrong dimension");
    AlgebraElement e(alg);
    e.add(Site{alg->identity(), std::move(k)}, c);
    return e;
  }

  const AlgebraPtr& algebra() const { return alg_; }
  const std::map<Site, cplx>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  void add(const Site& s, cplx c) {
    require(alg_ != nullptr, "element has no algebra");
    require(s.g >= 0 && s.g < alg_->order() && static_cast<int>(s.k.size()) == alg_->rank(),
            "site does not belong to the algebra");
    if (c == cplx(0.0)) return;
    auto [it, inserted] = terms_.try_emplace(s, c);
    if (!inserted) {
      it->second += c;
      if (it->second == cplx(0.0)) terms_.erase(it);
    }
  }

  cplx coefficient(const Site& s) const {
    auto it = terms_.find(s);
    return it == terms_.end() ? cplx(0.0) : it->second;
  }

  Site identity_site() const { return Site{alg_->identity(), std::vector<int>(alg_->rank(), 0)}; }

  /// Normalized trace: the coefficient at the identity. Exact.
  double trace() const { return coefficient(identity_site()).real(); }

  AlgebraElement star() const {
    AlgebraElement r(alg_);
    for (const auto& [s, c] : terms_) {
      Site t{alg_->inverse(s.g), s.k};
      for (int& ki : t.k) ki = -ki;
      r.add(t, std::conj(c));
    }
    return r;
  }

  AlgebraElement& operator+=(const AlgebraElement& o) {
    check_same(o);
    for (const auto& [s, c] : o.terms_) add(s, c);
    return *this;
  }
  AlgebraElement& operator-=(const AlgebraElement& o) {
    check_same(o);
    for (const auto& [s, c] : o.terms_) add(s, -c);
    return *this;
  }
  AlgebraElement& operator*=(cplx c) {
    if (c == cplx(0.0)) {
      terms_.clear();
      return *this;
    }
    for (auto& [s, v] : terms_) v *= c;
    return *this;
  }

  friend AlgebraElement operator+(AlgebraElement a, const AlgebraElement& b) { return a += b; }
  friend AlgebraElement operator-(AlgebraElement a, const AlgebraElement& b) { return a -= b; }
  friend AlgebraElement operator*(AlgebraElement a, cplx c) { return a *= c; }
  friend AlgebraElement operator*(cplx c, AlgebraElement a) { return a *= c; }

  /// Convolution product.
  friend AlgebraElement operator*(const AlgebraElement& a, const AlgebraElement& b) {
    a.check_same(b);
    AlgebraElement r(a.alg_);
    for (const auto& [sa, ca] : a.terms_)
      for (const auto& [sb, cb] : b.terms_) {
        Site s{a.alg_->mul(sa.g, sb.g), sa.k};
        for (std::size_t i = 0; i < s.k.size(); ++i) s.k[i] += sb.k[i];
        r.add(s, ca * cb);
      }
    return r;
  }

  /// Fiber of the left regular realization at torus angles phi: a |G| x |G|
  /// matrix with column e holding the coefficients.
  Matrix realize(const std::vector<double>& phi) const {
    int n = alg_->order();
    Matrix m = Matrix::Zero(n, n);
    for (const auto& [s, c] : terms_) {
      double angle = 0.0;
      for (std::size_t i = 0; i < s.k.size(); ++i) angle += s.k[i] * phi[i];
      cplx v = c * std::polar(1.0, angle);
      for (int b = 0; b < n; ++b) m(alg_->mul(s.g, b), b) += v;
    }
    return m;
  }

  double max_abs_coefficient() const {
    double m = 0.0;
    for (const auto& [s, c] : terms_) m = std::max(m, std::abs(c));
    return m;
  }

  /// Tensor product of elements living in two algebras, placed in `target`
  /// (which must be TraceAlgebra::tensor of the two factors).
  static AlgebraElement tensor(const AlgebraElement& a, const AlgebraElement& b, AlgebraPtr target) {
    AlgebraElement r(target);
    int n2 = b.alg_->order();
    for (const auto& [sa, ca] : a.terms_)
      for (const auto& [sb, cb] : b.terms_) {
        Site s{sa.g * n2 + sb.g, sa.k};
        s.k.insert(s.k.end(), sb.k.begin(), sb.k.end());
        r.add(s, ca * cb);
      }
    return r;
  }

 private:
  void check_same(const AlgebraElement& o) const {
    require(alg_ && o.alg_ && alg_->same_structure(*o.alg_), "elements belong to different algebras");
  }

  AlgebraPtr alg_;
  std::map<Site, cplx> terms_;
};

}  // namespace torsionlab
