#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "torsionlab/morse.hpp"

using namespace torsionlab;
using namespace torsionlab::morse;
using Catch::Approx;

TEST_CASE("In4 on presets") {
  for (const char* name : {"circle", "torus2", "s2", "s3"}) {
    auto r = validate_spec(preset(name));
    CHECK(r.ok);
    for (auto x : r.in4_residuals) CHECK(x == 0);
  }
  auto bad = torus2();
  bad.incidence[1][0][0] = -bad.incidence[1][0][0];  // M_2 = [(1-b), 1-a]
  CHECK_THROWS_AS(validate_spec(bad), ValidationError);
  auto shape = circle();
  shape.crit_counts = {1, 2};
  CHECK_THROWS_AS(validate_spec(shape), ValidationError);
}

TEST_CASE("group ring arithmetic is exact") {
  Group G = Group::free_abelian(2);
  auto a = GroupRing::monomial({0, 0}) - GroupRing::monomial({1, 0});
  auto b = GroupRing::monomial({0, 0}) - GroupRing::monomial({0, 1});
  auto diff = GroupRing::mul(G, a, b) - GroupRing::mul(G, b, a);
  CHECK(diff.zero());
  CHECK(GroupRing::mul(G, a, b).terms().size() == 4);
}

TEST_CASE("building Morse complexes") {
  auto s = circle();
  auto triv = build_complex(s, Representation::trivial(s.group));
  CHECK(triv.d(0).max_fiber_norm() == 0.0);

  auto ch = build_complex(s, Representation::character(s.group, 5, 2));
  cplx expect = 1.0 - std::polar(1.0, 2 * std::numbers::pi * 2 / 5);
  CHECK(std::abs(ch.d(0).realize({})(0, 0) - expect) < 1e-14);

  auto reg = build_complex(s, Representation::regular(s.group, 8));
  for (std::size_t k = 0; k < 8; ++k) {
    double phi = reg.algebra()->node(k)[0];
    CHECK(std::abs(reg.d(0).realize_node(k)(0, 0) - (1.0 - std::polar(1.0, phi))) < 1e-14);
  }

  Representation broken = Representation::character(s.group, 5, 1);
  broken.images[0] = broken.images[0] * cplx(2.0);
  CHECK_THROWS_AS(build_complex(s, broken), ValidationError);
  CHECK_THROWS_AS(parse_representation(s.group, "char:5", 64), ValidationError);
  CHECK_THROWS_AS(preset("klein"), ValidationError);
}

TEST_CASE("combinatorial torsion") {
  auto s = circle();
  for (int k : {1, 2}) {
    double sn = std::sin(std::numbers::pi * k / 5);
    CHECK(comb_torsion(s, Representation::character(s.group, 5, k)).log_t ==
          Approx(0.5 * std::log(4 * sn * sn)).epsilon(1e-10));
  }
  CHECK(std::abs(comb_torsion(s, Representation::regular(s.group, 8192)).log_t) < 2e-3);

  // orientation flip: negate the row of M_1
  auto t = torus2();
  auto flipped = t;
  for (auto& e : flipped.incidence[0][1]) e = -e;
  for (auto& row : flipped.incidence[1]) row[1] = -row[1];
  auto rho = Representation::character(t.group, 7, 3);
  CHECK(std::abs(comb_torsion(t, rho).log_t - comb_torsion(flipped, rho).log_t) < 1e-12);
}

TEST_CASE("metric torsion") {
  for (double L : {1.0, 2 * std::numbers::pi, 7.5}) {
    auto s = circle(L);
    CHECK(metric_torsion(s, Representation::trivial(s.group)).log_t == Approx(std::log(L)).epsilon(1e-12));
    CHECK(std::abs(metric_torsion(torus2(L), Representation::trivial(Group::free_abelian(2))).log_t) < 1e-12);
  }
  auto s = circle();
  auto none = metric_torsion(s, Representation::character(s.group, 5, 1));
  CHECK(none.log_t == 0.0);
  CHECK(none.note == "no harmonic forms");
  CHECK(std::abs(metric_torsion(sphere(2), Representation::trivial(Group::trivial())).log_t) < 1e-12);
  CHECK(metric_torsion(sphere(3), Representation::trivial(Group::trivial())).log_t ==
        Approx(std::log(2 * std::numbers::pi * std::numbers::pi)).epsilon(1e-12));
  auto nodata = circle();
  nodata.harmonic.reset();
  CHECK_THROWS_AS(metric_torsion(nodata, Representation::trivial(nodata.group)), ValidationError);
}

TEST_CASE("Reidemeister torsion") {
  auto s = circle();
  CHECK(reidemeister(s, Representation::trivial(s.group)).log_t ==
        Approx(std::log(2 * std::numbers::pi)).epsilon(1e-12));
  double sn = std::sin(std::numbers::pi * 3 / 8);
  CHECK(reidemeister(s, Representation::character(s.group, 8, 3)).log_t ==
        Approx(0.5 * std::log(4 * sn * sn)).epsilon(1e-10));
  CHECK(std::abs(reidemeister(s, Representation::regular(s.group, 8192)).log_t) < 2e-3);

  // product preset: T^2 over N(Z^2) vanishes, as does chi(S^1) T(S^1) + chi(S^1) T(S^1)
  auto t = torus2();
  auto tr = reidemeister(t, Representation::regular(t.group, 256));
  CHECK(std::abs(tr.log_t) < 4e-3);
}

TEST_CASE("functoriality in the representation") {
  auto s = circle();
  auto a = Representation::character(s.group, 5, 1), b = Representation::character(s.group, 5, 2);
  auto ab = Representation::direct_sum(a, b);
  double lhs = comb_torsion(s, ab).log_t;
  CHECK(std::abs(lhs - (comb_torsion(s, a).log_t + comb_torsion(s, b).log_t)) < 1e-8);

  auto t = torus2();
  auto c = Representation::character(t.group, 3, 1), triv = Representation::trivial(t.group);
  auto ct = Representation::direct_sum(c, Representation::character(t.group, 4, 1));
  double sum = comb_torsion(t, c).log_t + comb_torsion(t, Representation::character(t.group, 4, 1)).log_t;
  CHECK(std::abs(comb_torsion(t, ct).log_t - sum) < 1e-8);
  CHECK(std::abs(reidemeister(t, Representation::direct_sum(triv, triv)).log_t) < 1e-10);
}
