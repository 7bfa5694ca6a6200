#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "torsionlab/algebra.hpp"
#include "torsionlab/errors.hpp"
#include "torsionlab/parallel.hpp"

namespace torsionlab {

/// A rows x cols matrix over a TraceAlgebra, i.e. an A-linear map A^cols -> A^rows.
class Morphism {
 public:
  Morphism() = default;
  Morphism(AlgebraPtr alg, int rows, int cols)
      : alg_(std::move(alg)), rows_(rows), cols_(cols),
        entries_(static_cast<std::size_t>(rows) * cols, AlgebraElement(alg_)) {
    require(rows >= 0 && cols >= 0, "morphism dimensions must be nonnegative");
  }

  static Morphism zero(AlgebraPtr alg, int rows, int cols) { return Morphism(std::move(alg), rows, cols); }

  static Morphism identity(AlgebraPtr alg, int n, cplx c = 1.0) {
    Morphism m(alg, n, n);
    for (int i = 0; i < n; ++i) m.set(i, i, AlgebraElement::unit(alg, c));
    return m;
  }

  /// 1 x 1 morphism given by multiplication with a.
  static Morphism scalar(const AlgebraElement& a) {
    Morphism m(a.algebra(), 1, 1);
    m.set(0, 0, a);
    return m;
  }

  const AlgebraPtr& algebra() const { return alg_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  const AlgebraElement& at(int i, int j) const { return entries_[index(i, j)]; }
  void set(int i, int j, AlgebraElement e) {
    require(e.algebra() && e.algebra()->same_structure(*alg_), "entry belongs to another algebra");
    entries_[index(i, j)] = std::move(e);
  }

  Morphism adjoint() const {
    Morphism r(alg_, cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) r.entries_[r.index(j, i)] = at(i, j).star();
    return r;
  }

  friend Morphism operator*(const Morphism& a, const Morphism& b) {
    require(a.cols_ == b.rows_, "morphism product: inner dimensions differ (" + std::to_string(a.cols_) +
                                    " vs " + std::to_string(b.rows_) + ")");
    a.check_same(b);
    Morphism r(a.alg_, a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int k = 0; k < b.cols_; ++k) {
        AlgebraElement s(a.alg_);
        for (int j = 0; j < a.cols_; ++j)
          if (!a.at(i, j).empty() && !b.at(j, k).empty()) s += a.at(i, j) * b.at(j, k);
        r.entries_[r.index(i, k)] = std::move(s);
      }
    return r;
  }

  Morphism& operator+=(const Morphism& o) {
    check_shape(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] += o.entries_[i];
    return *this;
  }
  Morphism& operator-=(const Morphism& o) {
    check_shape(o);
    for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i] -= o.entries_[i];
    return *this;
  }
  Morphism& operator*=(cplx c) {
    for (auto& e : entries_) e *= c;
    return *this;
  }
  friend Morphism operator+(Morphism a, const Morphism& b) { return a += b; }
  friend Morphism operator-(Morphism a, const Morphism& b) { return a -= b; }
  friend Morphism operator*(Morphism a, cplx c) { return a *= c; }
  friend Morphism operator*(cplx c, Morphism a) { return a *= c; }

  /// Block matrix from a grid of morphisms; blocks in a row share row counts.
  static Morphism blocks(const std::vector<std::vector<Morphism>>& grid) {
    require(!grid.empty() && !grid.front().empty(), "empty block grid");
    AlgebraPtr alg = grid.front().front().alg_;
    std::vector<int> row_sizes, col_sizes;
    for (const auto& row : grid) row_sizes.push_back(row.front().rows_);
    for (const auto& b : grid.front()) col_sizes.push_back(b.cols_);
    int R = 0, C = 0;
    for (int r : row_sizes) R += r;
    for (int c : col_sizes) C += c;
    Morphism m(alg, R, C);
    int r0 = 0;
    for (std::size_t bi = 0; bi < grid.size(); ++bi) {
      require(grid[bi].size() == col_sizes.size(), "ragged block grid");
      int c0 = 0;
      for (std::size_t bj = 0; bj < grid[bi].size(); ++bj) {
        const Morphism& b = grid[bi][bj];
        require(b.rows_ == row_sizes[bi] && b.cols_ == col_sizes[bj], "block sizes are inconsistent");
        for (int i = 0; i < b.rows_; ++i)
          for (int j = 0; j < b.cols_; ++j) m.set(r0 + i, c0 + j, b.at(i, j));
        c0 += col_sizes[bj];
      }
      r0 += row_sizes[bi];
    }
    return m;
  }

  static Morphism direct_sum(const Morphism& a, const Morphism& b) {
    return blocks({{a, zero(a.alg_, a.rows_, b.cols_)}, {zero(a.alg_, b.rows_, a.cols_), b}});
  }

  /// f' (x) f'' over `target` = TraceAlgebra::tensor(alg', alg''); Kronecker layout (i'', i') -> i' * rows'' + i''.
  static Morphism tensor(const Morphism& a, const Morphism& b, AlgebraPtr target) {
    Morphism m(target, a.rows_ * b.rows_, a.cols_ * b.cols_);
    for (int i = 0; i < a.rows_; ++i)
      for (int j = 0; j < a.cols_; ++j) {
        if (a.at(i, j).empty()) continue;
        for (int k = 0; k < b.rows_; ++k)
          for (int l = 0; l < b.cols_; ++l)
            if (!b.at(k, l).empty())
              m.set(i * b.rows_ + k, j * b.cols_ + l, AlgebraElement::tensor(a.at(i, j), b.at(k, l), target));
      }
    return m;
  }

  /// Sum of the diagonal traces.
  double trace() const {
    require(square(), "trace of a non-square morphism");
    double s = 0.0;
    for (int i = 0; i < rows_; ++i) s += at(i, i).trace();
    return s;
  }

  /// Fiber of the realization at angles phi: (rows |G|) x (cols |G|).
  Matrix realize(const std::vector<double>& phi) const {
    int n = alg_->order();
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(rows_) * n, static_cast<Eigen::Index>(cols_) * n);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j)
        if (!at(i, j).empty()) m.block(i * n, j * n, n, n) = at(i, j).realize(phi);
    return m;
  }
  Matrix realize_node(std::size_t node) const { return realize(alg_->node(node)); }

  /// Max over quadrature nodes of the Frobenius norm of the realization.
  double max_fiber_norm() const {
    std::size_t nodes = alg_->node_count();
    std::vector<double> norms(nodes);
    parallel_for(nodes, [&](std::size_t k) { norms[k] = realize_node(k).norm(); });
    return nodes ? *std::max_element(norms.begin(), norms.end()) : 0.0;
  }

  /// Inverse of finite_group(...) style realizations; requires rank 0.
  static Morphism from_realization(AlgebraPtr alg, int rows, int cols, const Matrix& m, double drop = 0.0) {
    require(alg->rank() == 0, "exact extraction needs a finitely supported (rank 0) algebra");
    int n = alg->order();
    require(m.rows() == rows * n && m.cols() == cols * n, "realization has the wrong size");
    Morphism r(alg, rows, cols);
    int e = alg->identity();
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        AlgebraElement a(alg);
        for (int g = 0; g < n; ++g) {
          cplx c = m(i * n + g, j * n + e);
          if (std::abs(c) > drop) a.add(Site{g, {}}, c);
        }
        r.set(i, j, std::move(a));
      }
    return r;
  }

  Morphism inverse() const {
    require(square(), "inverse of a non-square morphism");
    require(alg_->rank() == 0, "inverse is only exact over finite group algebras");
    Matrix m = realize({});
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) throw DomainError("morphism is not invertible");
    return from_realization(alg_, rows_, cols_, lu.inverse());
  }

  /// Functional calculus fn(f) for selfadjoint f over a finite group algebra.
  Morphism apply(const std::function<double(double)>& fn) const {
    require(square(), "functional calculus needs a square morphism");
    require(alg_->rank() == 0, "functional calculus is only exact over finite group algebras");
    Matrix m = realize({});
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.adjoint()));
    RealVector v = es.eigenvalues().unaryExpr(fn);
    Matrix out = es.eigenvectors() * v.asDiagonal() * es.eigenvectors().adjoint();
    return from_realization(alg_, rows_, cols_, out);
  }

  bool operator==(const Morphism&) const = delete;

 private:
  std::size_t index(int i, int j) const {
    require(i >= 0 && i < rows_ && j >= 0 && j < cols_, "morphism index out of range");
    return static_cast<std::size_t>(i) * cols_ + j;
  }
  void check_same(const Morphism& o) const {
    require(alg_ && o.alg_ && alg_->same_structure(*o.alg_), "morphisms over different algebras");
  }
  void check_shape(const Morphism& o) const {
    check_same(o);
    require(rows_ == o.rows_ && cols_ == o.cols_, "morphism shapes differ");
  }

  AlgebraPtr alg_;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<AlgebraElement> entries_;
};

/// An A-linear operator known only fiberwise, e.g. a spectral projector of a
/// torus morphism. One matrix per quadrature node.
struct FiberField {
  AlgebraPtr algebra;
  int rows = 0;
  int cols = 0;
  std::vector<Matrix> fibers;

  static FiberField of(const Morphism& f) {
    FiberField out{f.algebra(), f.rows(), f.cols(), {}};
    std::size_t nodes = f.algebra()->node_count();
    out.fibers.resize(nodes);
    parallel_for(nodes, [&](std::size_t k) { out.fibers[k] = f.realize_node(k); });
    return out;
  }

  static FiberField identity(AlgebraPtr alg, int n) { return of(Morphism::identity(std::move(alg), n)); }

  /// Normalized trace: quadrature average of tr(fiber) / |G|.
  double trace() const {
    require(rows == cols, "trace of a non-square fiber field");
    std::vector<double> t(fibers.size());
    for (std::size_t k = 0; k < fibers.size(); ++k) t[k] = fibers[k].trace().real();
    return pairwise_sum(t) / (static_cast<double>(fibers.size()) * algebra->order());
  }

  FiberField adjoint() const {
    FiberField out{algebra, cols, rows, {}};
    out.fibers.reserve(fibers.size());
    for (const auto& m : fibers) out.fibers.push_back(m.adjoint());
    return out;
  }

  friend FiberField operator*(const FiberField& a, const FiberField& b) {
    require(a.cols == b.rows && a.fibers.size() == b.fibers.size(), "fiber field shapes differ");
    FiberField out{a.algebra, a.rows, b.cols, {}};
    out.fibers.resize(a.fibers.size());
    for (std::size_t k = 0; k < a.fibers.size(); ++k) out.fibers[k] = a.fibers[k] * b.fibers[k];
    return out;
  }
  friend FiberField operator+(const FiberField& a, const FiberField& b) {
    require(a.rows == b.rows && a.cols == b.cols && a.fibers.size() == b.fibers.size(), "fiber field shapes differ");
    FiberField out = a;
    for (std::size_t k = 0; k < a.fibers.size(); ++k) out.fibers[k] += b.fibers[k];
    return out;
  }
  friend FiberField operator-(const FiberField& a, const FiberField& b) {
    require(a.rows == b.rows && a.cols == b.cols && a.fibers.size() == b.fibers.size(), "fiber field shapes differ");
    FiberField out = a;
    for (std::size_t k = 0; k < a.fibers.size(); ++k) out.fibers[k] -= b.fibers[k];
    return out;
  }

  /// Max over nodes of the operator (2-)norm.
  double max_norm() const {
    double m = 0.0;
    for (const auto& f : fibers) {
      if (f.size() == 0) continue;
      Eigen::JacobiSVD<Matrix> svd(f);
      m = std::max(m, svd.singularValues()(0));
    }
    return m;
  }
};

}  // namespace torsionlab
