#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "torsionlab/vnla.hpp"

using namespace torsionlab;
using Catch::Approx;

namespace {

AlgebraElement laurent(const AlgebraPtr& alg, std::initializer_list<std::pair<int, double>> terms) {
  AlgebraElement a(alg);
  for (auto [k, c] : terms) a.add(Site{0, {k}}, c);
  return a;
}

Morphism one_by_one(const AlgebraElement& a) { return Morphism::scalar(a); }

Morphism random_square(const AlgebraPtr& alg, int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Morphism m(alg, n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      AlgebraElement e(alg);
      for (int h = 0; h < alg->order(); ++h) e.add(Site{h, {}}, cplx(g(rng), 0.0));
      m.set(i, j, e);
    }
  return m;
}

}  // namespace

TEST_CASE("trace of elements") {
  auto z3 = TraceAlgebra::cyclic(3);
  CHECK(vnla::trace_element(AlgebraElement::unit(z3)) == 1.0);
  auto z5 = TraceAlgebra::cyclic(5);
  CHECK(vnla::trace_element(AlgebraElement::group(z5, 2)) == 0.0);
  auto t1 = TraceAlgebra::torus(1, 64);
  CHECK(vnla::trace_element(laurent(t1, {{0, 2.0}, {1, 1.0}, {-1, 1.0}})) == 2.0);
  CHECK_THROWS_AS(vnla::trace_element(*z5, AlgebraElement::unit(z3)), ValidationError);
}

TEST_CASE("trace of morphisms") {
  for (auto alg : {TraceAlgebra::scalar(), TraceAlgebra::cyclic(4), TraceAlgebra::torus(2, 8)})
    CHECK(vnla::trace_morphism(Morphism::identity(alg, 3)) == Approx(3.0));
  auto z2 = TraceAlgebra::cyclic(2);
  auto f = Morphism::scalar(AlgebraElement::unit(z2, 2.0) + AlgebraElement::group(z2, 1));
  CHECK(vnla::trace_morphism(f) == 2.0);
  CHECK_THROWS_AS(vnla::trace_morphism(Morphism::zero(z2, 2, 3)), ValidationError);

  std::mt19937_64 rng(7);
  auto s3 = TraceAlgebra::symmetric3();
  for (int rep = 0; rep < 10; ++rep) {
    auto a = random_square(s3, 2, rng), b = random_square(s3, 2, rng);
    CHECK(std::abs(vnla::trace_morphism(a * b) - vnla::trace_morphism(b * a)) < 1e-12);
    double realized = (a * b).realize({}).trace().real() / s3->order();
    CHECK(std::abs(realized - vnla::trace_morphism(a * b)) < 1e-12);
  }
}

TEST_CASE("realization is multiplicative and respects adjoints") {
  std::mt19937_64 rng(11);
  auto s3 = TraceAlgebra::symmetric3();
  for (int rep = 0; rep < 5; ++rep) {
    auto a = random_square(s3, 2, rng), b = random_square(s3, 2, rng), c = random_square(s3, 2, rng);
    Matrix lhs = (a * b * c).realize({});
    Matrix rhs = a.realize({}) * b.realize({}) * c.realize({});
    CHECK((lhs - rhs).norm() < 1e-12 * (1 + rhs.norm()));
    CHECK((a.adjoint().realize({}) - a.realize({}).adjoint()).norm() < 1e-12);
  }
}

TEST_CASE("dim_N of projectors") {
  auto z4 = TraceAlgebra::cyclic(4);
  CHECK(vnla::dim_N(Morphism::identity(z4, 3)) == Approx(3.0));
  AlgebraElement avg(z4);
  for (int g = 0; g < 4; ++g) avg.add(Site{g, {}}, 0.25);
  CHECK(vnla::dim_N(Morphism::scalar(avg)) == Approx(0.25));
  auto f = Morphism::scalar(AlgebraElement::unit(z4, 2.0));
  CHECK_THROWS_AS(vnla::dim_N(f), ValidationError);

  auto t1 = TraceAlgebra::torus(1, 256);
  auto sym = one_by_one(laurent(t1, {{0, 2.0}, {1, -1.0}, {-1, -1.0}}));
  CHECK(vnla::dim_N(vnla::spectral_projector(sym, -1e-12, 1e-12)) == 0.0);
}

TEST_CASE("spectral measures") {
  auto sc = TraceAlgebra::scalar();
  auto m = vnla::spectral_measure(Morphism::identity(sc, 3, 2.0));
  CHECK(m.cumulative(1.9) == 0.0);
  CHECK(m.cumulative(2.0) == Approx(3.0));

  Morphism d(sc, 2, 2);
  d.set(0, 0, AlgebraElement::unit(sc, 1.0));
  d.set(1, 1, AlgebraElement::unit(sc, 4.0));
  CHECK(vnla::spectral_measure(d).cumulative(2.0) == Approx(1.0));

  auto t1 = TraceAlgebra::torus(1, 4096);
  auto sym = one_by_one(laurent(t1, {{0, 2.0}, {1, -1.0}, {-1, -1.0}}));
  CHECK(std::abs(vnla::spectral_measure(sym).cumulative(1.0) - 1.0 / 3.0) < 2e-3);

  Morphism nonsa(sc, 2, 2);
  nonsa.set(0, 1, AlgebraElement::unit(sc, 1.0));
  CHECK_THROWS_AS(vnla::spectral_measure(nonsa), ValidationError);
}

TEST_CASE("Gromov-Shubin function") {
  auto sc = TraceAlgebra::scalar();
  CHECK(vnla::gs_function(Morphism::identity(sc, 2, 3.0), 8.0) == 0.0);
  CHECK(vnla::gs_function(Morphism::zero(sc, 1, 1), 10.0) == 0.0);

  auto t1 = TraceAlgebra::torus(1, 4096);
  auto f = one_by_one(laurent(t1, {{0, 1.0}, {1, -1.0}}));
  auto ff = vnla::spectral_measure(f.adjoint() * f);
  CHECK(vnla::gs_function(ff, 2.0) == Approx(0.5).margin(1e-3));
  for (double lam : {0.1, 0.5, 1.0, 3.0})
    CHECK(vnla::gs_function(ff, lam) == Approx(std::acos(1 - lam / 2) / std::numbers::pi).margin(1e-3));
}

TEST_CASE("Fuglede-Kadison determinants") {
  auto sc = TraceAlgebra::scalar();
  CHECK(vnla::logdet_N(Morphism::identity(sc, 4, 3.0)) == Approx(4 * std::log(3.0)));

  auto z2 = TraceAlgebra::cyclic(2);
  auto f = Morphism::scalar(AlgebraElement::unit(z2, 2.0) + AlgebraElement::group(z2, 1));
  CHECK(vnla::logdet_N(f) == Approx(0.5 * std::log(3.0)).epsilon(1e-12));

  // Jensen: int log|2 - e^{i phi}|^2 = 2 log 2
  auto t1 = TraceAlgebra::torus(1, 8192);
  auto g = one_by_one(laurent(t1, {{0, 5.0}, {1, -2.0}, {-1, -2.0}}));
  CHECK(std::abs(vnla::logdet_N(g) - 2 * std::log(2.0)) < 1e-6);

  CHECK_THROWS_AS(vnla::logdet_N(Morphism::zero(sc, 1, 1)), DomainError);
}

TEST_CASE("regularized log determinants") {
  auto sc = TraceAlgebra::scalar();
  auto zero = vnla::logdet_regularized(Morphism::zero(sc, 1, 1));
  CHECK(zero.null_dim == 1.0);
  CHECK(zero.det_class);
  CHECK(zero.value == 0.0);
  for (double v : zero.samples) CHECK(v == 0.0);

  Morphism d(sc, 2, 2);
  d.set(1, 1, AlgebraElement::unit(sc, 4.0));
  auto r = vnla::logdet_regularized(d);
  CHECK(r.null_dim == 1.0);
  CHECK(r.value == Approx(std::log(4.0)).epsilon(1e-10));

  auto t1 = TraceAlgebra::torus(1, 8192);
  auto sym = one_by_one(laurent(t1, {{0, 2.0}, {1, -1.0}, {-1, -1.0}}));
  auto mahler = vnla::logdet_regularized(sym);
  CHECK(mahler.null_dim == 0.0);
  CHECK(mahler.det_class);
  CHECK(std::abs(mahler.value) < 2e-3);

  auto pos = Morphism::identity(sc, 2, 3.0);
  CHECK(std::abs(vnla::logdet_regularized(pos).value - vnla::logdet_N(pos)) < 1e-8);
}

TEST_CASE("volumes") {
  auto z3 = TraceAlgebra::cyclic(3);
  CHECK(vnla::vol_N(Morphism::scalar(AlgebraElement::group(z3, 1))) == Approx(1.0).epsilon(1e-10));
  CHECK(vnla::vol_N(Morphism::scalar(AlgebraElement::group(z3, 2, 2.0))) == Approx(2.0).epsilon(1e-10));
  std::mt19937_64 rng(3);
  auto s3 = TraceAlgebra::symmetric3();
  for (int rep = 0; rep < 5; ++rep) {
    auto a = random_square(s3, 2, rng), b = random_square(s3, 2, rng);
    double lhs = std::log(vnla::vol_N(b * a));
    double rhs = std::log(vnla::vol_N(a)) + std::log(vnla::vol_N(b));
    CHECK(std::abs(lhs - rhs) < 1e-8);
  }
  CHECK_THROWS_AS(vnla::vol_N(Morphism::zero(z3, 1, 1)), DomainError);
}

TEST_CASE("Novikov-Shubin exponents") {
  auto sc = TraceAlgebra::scalar();
  CHECK(vnla::novikov_shubin(Morphism::identity(sc, 2)).infinite);

  auto t1 = TraceAlgebra::torus(1, 8192);
  auto f = one_by_one(laurent(t1, {{0, 1.0}, {1, -1.0}}));
  auto a = vnla::novikov_shubin(f);
  REQUIRE_FALSE(a.infinite);
  CHECK(std::abs(a.alpha - 0.5) < 0.05);
  auto b = vnla::novikov_shubin(f * f);
  CHECK(std::abs(b.alpha - 0.25) < 0.05);
}

TEST_CASE("dilational comparison") {
  auto F = vnla::SampledFunction::sample([](double x) { return std::sqrt(x); }, 1e-6, 1e-2, 81);
  auto same = vnla::dilational_compare(F, F);
  CHECK(same.equivalent);
  CHECK(same.constant == 1.0);
  auto r = vnla::dilational_compare(F, [](double x) -> std::optional<double> { return std::sqrt(2 * x); });
  CHECK(r.equivalent);
  CHECK(r.constant == Approx(2.0).epsilon(1e-6));
  auto never = vnla::dilational_compare(F, [](double) -> std::optional<double> { return 10.0; });
  CHECK_FALSE(never.equivalent);
  CHECK_THROWS_AS(vnla::dilational_compare(vnla::SampledFunction{}, F), ValidationError);
}

TEST_CASE("properties of logdet") {
  std::mt19937_64 rng(5);
  auto z3 = TraceAlgebra::cyclic(3);
  auto a = random_square(z3, 2, rng);
  auto f = a.adjoint() * a + Morphism::identity(z3, 2);
  auto g = random_square(z3, 2, rng);
  g = g + g.adjoint();

  // derivative along f + t g
  double h = 1e-5;
  double fd = (vnla::logdet_N(f + g * cplx(h)) - vnla::logdet_N(f - g * cplx(h))) / (2 * h);
  CHECK(std::abs(fd - vnla::trace_morphism(g * f.inverse())) < 1e-6);

  // block triangular additivity: [[f1, 0], [k, f2]] realized as a rank-4 morphism over scalars
  auto sc = TraceAlgebra::scalar();
  Morphism blk(sc, 2, 2);
  blk.set(0, 0, AlgebraElement::unit(sc, 2.0));
  blk.set(1, 0, AlgebraElement::unit(sc, 0.7));
  blk.set(1, 1, AlgebraElement::unit(sc, 5.0));
  double fk = vnla::logdet_fk(blk);
  CHECK(std::abs(fk - (std::log(2.0) + std::log(5.0))) < 1e-10);

  // conjugation by an isometry
  auto u = Morphism::scalar(AlgebraElement::group(z3, 1));
  Morphism U = Morphism::blocks({{u, Morphism::zero(z3, 1, 1)}, {Morphism::zero(z3, 1, 1), u}});
  CHECK(std::abs(vnla::logdet_N(U * f * U.adjoint()) - vnla::logdet_N(f)) < 1e-10);

  // tensor trace
  auto z2 = TraceAlgebra::cyclic(2);
  auto b = random_square(z2, 2, rng);
  auto tgt = TraceAlgebra::tensor(*z3, *z2);
  double tr = vnla::trace_morphism(Morphism::tensor(a, b, tgt));
  CHECK(std::abs(tr - vnla::trace_morphism(a) * vnla::trace_morphism(b)) < 1e-12);

  // f* f and f f* agree away from 0
  auto t1 = TraceAlgebra::torus(1, 512);
  Morphism r(t1, 1, 2);
  r.set(0, 0, laurent(t1, {{0, 1.0}, {1, -1.0}}));
  r.set(0, 1, laurent(t1, {{0, 0.5}}));
  auto m1 = vnla::spectral_measure(r.adjoint() * r), m2 = vnla::spectral_measure(r * r.adjoint());
  for (double lam : {0.3, 1.0, 2.5}) CHECK(std::abs(vnla::gs_function(m1, lam) - vnla::gs_function(m2, lam)) < 1e-12);
}

TEST_CASE("determinant class verdicts") {
  auto sc = TraceAlgebra::scalar();
  CHECK(vnla::determinant_class(vnla::spectral_measure(Morphism::identity(sc, 1))).det_class);
  // synthetic measures with N(lambda) = 1/log(1/lambda) (divergent) and 1/log^2 (convergent)
  auto decades = [](auto N) {
    std::vector<double> J;
    for (int k = 1; k <= 200; ++k) {
      double a = std::pow(10.0, -k - 1), b = std::pow(10.0, -k);
      J.push_back(0.5 * (std::log(a) + std::log(b)) * (N(b) - N(a)));
    }
    return J;
  };
  auto div = decades([](double x) { return 1.0 / std::log(1.0 / x); });
  auto conv = decades([](double x) { return 1.0 / std::pow(std::log(1.0 / x), 2); });
  CHECK_FALSE(vnla::determinant_class_from_decades(div).det_class);
  CHECK(vnla::determinant_class_from_decades(conv).det_class);
}
