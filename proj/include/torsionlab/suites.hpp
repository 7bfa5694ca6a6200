#pragma once

// Property bundles run by `torsionlab suite <name>`. Each criterion collects
// named checks of a measured value against a closed-form target.

#include <chrono>
#include <functional>
#include <random>

#include "torsionlab/analytic.hpp"
#include "torsionlab/io.hpp"
#include "torsionlab/witten.hpp"

namespace torsionlab::suites {

struct Check {
  std::string name;
  double value = 0;
  double target = 0;
  double tol = 0;
  std::string relation;  // "abs" |value - target| < tol, "lt" value < tol, "ge" value >= tol, "flag"
  bool pass = false;
};

inline Check near(std::string name, double value, double target, double tol) {
  return {std::move(name), value, target, tol, "abs", std::abs(value - target) < tol};
}
inline Check below(std::string name, double value, double tol) {
  return {std::move(name), value, 0, tol, "lt", value < tol};
}
inline Check at_least(std::string name, double value, double bound) {
  return {std::move(name), value, 0, bound, "ge", value >= bound};
}
inline Check flag(std::string name, bool ok) { return {std::move(name), ok ? 1.0 : 0.0, 1, 0, "flag", ok}; }

struct Criterion {
  int id = 0;  // 0 for checks outside the numbered list
  std::string title;
  std::vector<Check> checks;
  bool pass = true;
  double seconds = 0;
  std::string error;  // set when the bundle threw
};

struct SuiteReport {
  std::string name;
  std::uint64_t seed = 0;
  std::vector<Criterion> criteria;
  bool pass = true;
};

inline Criterion run_criterion(int id, std::string title, const std::function<void(std::vector<Check>&)>& body) {
  Criterion c;
  c.id = id;
  c.title = std::move(title);
  auto t0 = std::chrono::steady_clock::now();
  try {
    body(c.checks);
  } catch (const std::exception& e) {
    c.error = e.what();
  }
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.pass = c.error.empty() && !c.checks.empty();
  for (const auto& k : c.checks) c.pass = c.pass && k.pass;
  return c;
}

namespace detail {

inline constexpr double pi = std::numbers::pi;

inline Morphism random_matrix(const AlgebraPtr& alg, int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Morphism m(alg, rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      AlgebraElement e(alg);
      for (int h = 0; h < alg->order(); ++h) e.add(Site{h, {}}, cplx(g(rng), 0.0));
      m.set(i, j, e);
    }
  return m;
}

/// Redraws until f*f is well away from the kernel band (isomorphism).
inline Morphism random_iso(const AlgebraPtr& alg, int n, std::mt19937_64& rng) {
  for (;;) {
    auto f = random_matrix(alg, n, n, rng);
    auto m = vnla::spectral_measure(f.adjoint() * f);
    if (m.min_value() > 1e-6 * m.norm()) return f;
  }
}

inline Morphism laurent(const AlgebraPtr& t1, std::initializer_list<std::pair<int, double>> terms) {
  AlgebraElement a(t1);
  for (auto [k, c] : terms) a.add(Site{0, {k}}, c);
  return Morphism::scalar(a);
}

/// Worst-case residuals of the algebraic identities on one random instance.
struct IdentityResiduals {
  double trace = 0, block = 0, vol = 0, derivative = 0, hodge = 0;
};

inline IdentityResiduals identity_instance(const AlgebraPtr& alg, std::mt19937_64& rng) {
  IdentityResiduals r;
  auto a = random_matrix(alg, 2, 3, rng), b = random_matrix(alg, 3, 2, rng);
  r.trace = std::abs(vnla::trace_morphism(a * b) - vnla::trace_morphism(b * a));

  auto f1 = random_iso(alg, 2, rng), f2 = random_iso(alg, 1, rng);
  auto k = random_matrix(alg, 1, 2, rng);
  auto blk = Morphism::blocks({{f1, Morphism::zero(alg, 2, 1)}, {k, f2}});
  r.block = std::abs(vnla::logdet_fk(blk) - vnla::logdet_fk(f1) - vnla::logdet_fk(f2));

  auto u = random_iso(alg, 2, rng), v = random_iso(alg, 2, rng);
  r.vol = std::abs(std::log(vnla::vol_N(v * u)) - std::log(vnla::vol_N(u)) - std::log(vnla::vol_N(v)));

  auto f = u.adjoint() * u + Morphism::identity(alg, 2);
  auto g = v + v.adjoint();
  double h = 1e-5;
  double fd = (vnla::logdet_N(f + g * cplx(h)) - vnla::logdet_N(f - g * cplx(h))) / (2 * h);
  r.derivative = std::abs(fd - vnla::trace_morphism(g * f.inverse()));

  auto c = cochain::random_complex(alg, {1, 2, 1}, rng);
  auto hd = cochain::hodge(c, 1.0);
  r.hodge = std::max(hd.max_projector_residual, hd.max_block_residual);
  return r;
}

inline std::vector<double> witten_ts(double lo, double hi, int n) {
  return witten::parse_range(std::to_string(lo) + ":" + std::to_string(hi) + ":" + std::to_string(n));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Bundles

inline Criterion fk_oracles() {
  return run_criterion(4, "Fuglede-Kadison oracles", [](auto& out) {
    auto t1 = TraceAlgebra::torus(1, 8192);
    auto f = detail::laurent(t1, {{0, 5.0}, {1, -2.0}, {-1, -2.0}});
    out.push_back(near("logdet(5 - 4 cos)", vnla::logdet_N(f), 2 * std::log(2.0), 1e-6));
    auto m = detail::laurent(t1, {{0, 2.0}, {1, -1.0}, {-1, -1.0}});
    out.push_back(near("mahler(2 - 2 cos)", vnla::logdet_regularized(m).value, 0.0, 2e-3));
  });
}

inline Criterion novikov_shubin_bundle() {
  return run_criterion(5, "Novikov-Shubin exponents", [](auto& out) {
    auto t1 = TraceAlgebra::torus(1, 8192);
    auto d = detail::laurent(t1, {{0, 2.0}, {1, -1.0}, {-1, -1.0}});
    out.push_back(near("alpha(2 - 2 cos)", vnla::novikov_shubin(vnla::spectral_measure(d)).alpha, 0.5, 0.05));
    out.push_back(near("alpha((2 - 2 cos)^2)", vnla::novikov_shubin(vnla::spectral_measure(d * d)).alpha, 0.25, 0.05));
  });
}

inline Criterion identity_bundle(std::uint64_t seed, int instances = 50) {
  return run_criterion(6, "algebraic identities", [=](auto& out) {
    std::mt19937_64 rng(seed);
    std::vector<AlgebraPtr> algs = {TraceAlgebra::cyclic(4), TraceAlgebra::symmetric3()};
    detail::IdentityResiduals worst;
    for (int i = 0; i < instances; ++i) {
      auto r = detail::identity_instance(algs[i % 2], rng);
      worst.trace = std::max(worst.trace, r.trace);
      worst.block = std::max(worst.block, r.block);
      worst.vol = std::max(worst.vol, r.vol);
      worst.derivative = std::max(worst.derivative, r.derivative);
      worst.hodge = std::max(worst.hodge, r.hodge);
    }
    out.push_back(at_least("instances", instances, 50));
    out.push_back(below("trace symmetry", worst.trace, 1e-12));
    out.push_back(below("block-triangular logdet", worst.block, 1e-10));
    out.push_back(below("Vol multiplicativity", worst.vol, 1e-8));
    out.push_back(below("logdet derivative", worst.derivative, 1e-6));
    out.push_back(below("Hodge residuals", worst.hodge, 1e-9));
  });
}

inline Criterion product_bundle(std::uint64_t seed, int pairs = 10) {
  return run_criterion(7, "product formulas", [=](auto& out) {
    std::mt19937_64 rng(seed);
    auto z3 = TraceAlgebra::cyclic(3), z2 = TraceAlgebra::cyclic(2);
    std::uniform_int_distribution<int> rk(1, 2);
    double worst_t = 0, worst_z = 0;
    for (int i = 0; i < pairs; ++i) {
      // over finite groups every reduced differential is invertible, so these are perfect
      auto a = cochain::random_complex(z3, {rk(rng), rk(rng) + 1, rk(rng)}, rng);
      auto b = cochain::random_complex(z2, {1, rk(rng) + 1, 1}, rng);
      auto ab = cochain::tensor(a, b);
      auto ta = cochain::torsion(a), tb = cochain::torsion(b), tab = cochain::torsion(ab);
      double rhs = tb.euler.chi * ta.log_t + ta.euler.chi * tb.log_t;
      worst_t = std::max(worst_t, std::abs(tab.log_t - rhs));
      auto sa = cochain::laplacian_spectra(a), sb = cochain::laplacian_spectra(b), sab = cochain::laplacian_spectra(ab);
      for (double lam : {0.1, 1.0})
        for (double s : {-0.5, 0.3, 1.0}) {
          double z = cochain::zeta(sa, lam, s) * tb.euler.chi + cochain::zeta(sb, lam, s) * ta.euler.chi;
          worst_z = std::max(worst_z, std::abs(cochain::zeta(sab, lam, s) - z));
        }
    }
    out.push_back(below("torsion of tensor products", worst_t, 1e-8));
    out.push_back(below("zeta of tensor products", worst_z, 1e-8));

    auto t2 = morse::torus2();
    double lhs = morse::reidemeister(t2, morse::Representation::regular(t2.group, 256)).log_t;
    auto c = morse::circle();
    auto circ = morse::comb_torsion(c, morse::Representation::regular(c.group, 8192));
    double rhs = circ.euler.chi * circ.log_t + circ.euler.chi * circ.log_t;
    out.push_back(near("log T(T^2), L2", lhs, 0.0, 4e-3));
    out.push_back(near("chi T(S^1) + chi T(S^1), L2", rhs, 0.0, 4e-3));
  });
}

inline Criterion twisted_circles() {
  return run_criterion(1, "Cheeger-Mueller on twisted circles", [](auto& out) {
    for (auto [p, k] : {std::pair{5, 1}, {4, 1}, {2, 1}}) {
      std::string rep = "char:" + std::to_string(p) + "," + std::to_string(k);
      double s = std::sin(detail::pi * k / p);
      double oracle = 0.5 * std::log(4 * s * s);
      auto r = analytic::cheeger_mueller("circle", rep);
      out.push_back(below(rep + " |an - Re|", r.diff, 1e-6));
      out.push_back(near(rep + " an", r.log_an, oracle, 1e-6));
      out.push_back(near(rep + " Re", r.log_re, oracle, 1e-6));
    }
  });
}

inline Criterion harmonic_circle() {
  return run_criterion(2, "Cheeger-Mueller with harmonic forms", [](auto& out) {
    auto r = analytic::cheeger_mueller("circle", "trivial");
    double oracle = std::log(2 * detail::pi);
    out.push_back(near("an", r.log_an, oracle, 1e-6));
    out.push_back(near("Re", r.log_re, oracle, 1e-6));
    out.push_back(near("comb", r.log_comb, 0.0, 1e-6));
    out.push_back(near("met", r.log_met, oracle, 1e-6));
  });
}

inline Criterion l2_circle() {
  return run_criterion(3, "L2-torsion of the circle", [](auto& out) {
    auto r = analytic::cheeger_mueller("circle", "regular", 2 * detail::pi, 8192);
    out.push_back(near("comb", r.log_comb, 0.0, 2e-3));
    out.push_back(near("an", r.log_an, 0.0, 2e-3));
    out.push_back(below("refinement diagnostic", r.an_diagnostic, 1e-3));
    auto d = analytic::det_class_report("circle", "regular", 2 * detail::pi, 8192);
    out.push_back(flag("c-determinant class", d.combinatorial.det_class));
    out.push_back(flag("a-determinant class", d.analytic.det_class));
  });
}

inline Criterion mayer_vietoris_bundle() {
  return run_criterion(8, "Mayer-Vietoris in one dimension", [](auto& out) {
    double worst = 0;
    for (double L : {0.5, 1.0, 2.0, detail::pi, 2 * detail::pi})
      for (double m : {0.2, 0.5, 1.0, 2.0, 3.0}) worst = std::max(worst, std::abs(analytic::mayer_vietoris_1d(L, m).cbar - 0.5));
    out.push_back(below("max |cbar - 1/2| over 5x5", worst, 1e-6));
  });
}

inline Criterion witten_gap_bundle() {
  return run_criterion(9, "Witten spectral gap", [](auto& out) {
    witten::Params p;
    p.theta = detail::pi;
    auto g = witten::gap_report(p, detail::witten_ts(10, 40, 16));
    out.push_back(flag("one small eigenvalue per degree", g.all_clean));
    out.push_back(below("decay slope of s(t)", g.decay_slope, -0.1));
    out.push_back(at_least("min g(t)/t", g.c_double_prime, 0.5));
    double ho = 0;
    for (double t : {10.0, 20.0, 40.0}) ho = std::max(ho, witten::ho_check(t).max_rel_error);
    out.push_back(below("harmonic oscillator max rel error", ho, witten::kHOTol));
  });
}

inline Criterion witten_torsion_bundle() {
  return run_criterion(10, "deformed torsion asymptotics", [](auto& out) {
    witten::Params p;
    p.theta = 0;
    auto ts = detail::witten_ts(10, 40, 31);
    std::vector<double> sm;
    double last = 0;
    for (double t : ts) {
      auto s = witten::small_complex(p, t);
      // log T_sm in the Morse basis: log Int^(0) - log Int^(1)
      double v = std::log(s.int_ratio[0] * std::pow(t / detail::pi, 0.25)) -
                 std::log(s.int_ratio[1] * std::pow(detail::pi / t, 0.25)) - t;
      sm.push_back(v);
      last = v + 0.5 * (2 * t - std::log(t) + std::log(detail::pi));
    }
    out.push_back(near("trivial: log T_sm + (2t - log t + log pi)/2 at t=40", last, 0.0, 5e-2));
    auto f = witten::fit_asymptotic(ts, sm);
    out.push_back(near("trivial: fitted FT + (log pi)/2", f.ft + 0.5 * std::log(detail::pi), 0.0, 5e-2));

    p.theta = detail::pi;
    auto sw = witten::sweep(p, detail::witten_ts(5, 40, 36));
    std::vector<double> ts2, an;
    for (const auto& r : sw.rows)
      if (r.q == 0) {
        ts2.push_back(r.t);
        an.push_back(r.log_an);
      }
    auto fa = witten::fit_asymptotic(ts2, an);
    out.push_back(near("theta=pi: t coefficient of log T_an", fa.coefficient(witten::Term::t), 0.0, 0.05));
    out.push_back(near("theta=pi: log t coefficient of log T_an", fa.coefficient(witten::Term::log_t), 0.0, 0.05));
  });
}

inline Criterion witten_morse_bundle() {
  return run_criterion(11, "Morse-complex convergence", [](auto& out) {
    witten::Params p;
    p.theta = detail::pi;
    std::vector<double> ts, rem;
    double last = 0;
    for (double t : detail::witten_ts(10, 40, 7)) {
      auto s = witten::small_complex(p, t);
      ts.push_back(t);
      rem.push_back(s.scaled - s.gamma);
      last = s.scaled;
    }
    out.push_back(near("scaled eta at t=40", last, p.gamma(), 0.05 * p.gamma()));
    auto [exponent, logc] = witten::power_law(ts, rem);
    (void)logc;
    out.push_back(near("remainder exponent", exponent, -0.5, 0.2));
  });
}

inline Criterion det_class_bundle() {
  return run_criterion(0, "determinant-class verdicts", [](auto& out) {
    auto reg = analytic::det_class_report("circle", "regular", 2 * detail::pi, 8192);
    out.push_back(flag("circle regular: c-class", reg.combinatorial.det_class));
    out.push_back(flag("circle regular: a-class", reg.analytic.det_class));
    auto ch = analytic::det_class_report("circle", "char:5,2");
    out.push_back(flag("circle char:5,2: verdicts agree", ch.agree && ch.combinatorial.det_class));
    auto t2 = analytic::det_class_report("torus2", "regular", 2 * detail::pi, 256);
    out.push_back(flag("torus2 regular: verdicts agree", t2.agree && t2.combinatorial.det_class));
    auto synth = [](auto N) {
      std::vector<double> mu, w;
      for (int k = 1; k <= 290; ++k) {
        mu.push_back(std::pow(10.0, -k - 0.5));
        w.push_back(N(std::pow(10.0, -k)) - N(std::pow(10.0, -k - 1)));
      }
      return analytic::SpectrumModel::explicit_list(mu, w);
    };
    out.push_back(flag("N ~ 1/log: not det class",
                       !analytic::det_class_of(synth([](double x) { return 1.0 / std::log(1.0 / x); })).det_class));
    out.push_back(flag("N ~ 1/log^2: det class",
                       analytic::det_class_of(synth([](double x) { return 1.0 / std::pow(std::log(1.0 / x), 2); })).det_class));
  });
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> n = {"identities", "product-formulas", "cheeger-mueller", "witten-gap", "det-class"};
  return n;
}

inline SuiteReport run_suite(const std::string& name, std::uint64_t seed = 1) {
  SuiteReport r;
  r.name = name;
  r.seed = seed;
  if (name == "identities") {
    r.criteria = {fk_oracles(), novikov_shubin_bundle(), identity_bundle(seed)};
  } else if (name == "product-formulas") {
    r.criteria = {product_bundle(seed)};
  } else if (name == "cheeger-mueller") {
    r.criteria = {twisted_circles(), harmonic_circle(), l2_circle(), mayer_vietoris_bundle()};
  } else if (name == "witten-gap") {
    r.criteria = {witten_gap_bundle(), witten_torsion_bundle(), witten_morse_bundle()};
  } else if (name == "det-class") {
    r.criteria = {det_class_bundle()};
  } else {
    throw ValidationError("unknown suite \"" + name + "\"");
  }
  for (const auto& c : r.criteria) r.pass = r.pass && c.pass;
  return r;
}

inline io::Json to_json(const SuiteReport& r, bool timings = false) {
  auto j = io::report("suite");
  j["suite"] = r.name;
  j["seed"] = r.seed;
  io::Json cs = io::Json::array();
  for (const auto& c : r.criteria) {
    io::Json cj;
    if (c.id > 0) cj["criterion"] = c.id;
    cj["title"] = c.title;
    cj["pass"] = c.pass;
    if (!c.error.empty()) cj["error"] = c.error;
    if (timings) cj["seconds"] = c.seconds;
    io::Json ks = io::Json::array();
    for (const auto& k : c.checks)
      ks.push_back({{"name", k.name},
                    {"value", io::number(k.value)},
                    {"target", k.target},
                    {"tol", k.tol},
                    {"relation", k.relation},
                    {"pass", k.pass}});
    cj["checks"] = std::move(ks);
    cs.push_back(std::move(cj));
  }
  j["criteria"] = std::move(cs);
  j["pass"] = r.pass;
  return j;
}

}  // namespace torsionlab::suites
