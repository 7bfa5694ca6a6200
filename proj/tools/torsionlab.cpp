#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "torsionlab/analytic.hpp"
#include "torsionlab/io.hpp"
#include "torsionlab/suites.hpp"
#include "torsionlab/witten.hpp"

using namespace torsionlab;
using io::Json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitTolerance = 3;

struct RunConfig {
  std::string format = "text";
  std::uint64_t seed = 1;
  std::string file;
  std::string preset = "circle";
  std::string rep = "trivial";
  double length = 2 * std::numbers::pi;
  int grid = 8192;
  vnla::LambdaGrid lambda;
  double tol = 1e-6;

  // analytic mv
  double L = 2 * std::numbers::pi, m = 1.0;
  // witten
  std::string range = "5:40:36";
  std::string out;
  std::string potential = "cosine";
  double theta = std::numbers::pi;
  int N = 8192;
  std::optional<double> witten_length;

  std::string suite;
  bool timings = false;

  void check() const {
    if (format != "text" && format != "json" && format != "csv") throw ValidationError("unknown format " + format);
    if (!(lambda.lo > 0) || !(lambda.hi > lambda.lo) || lambda.points < 3)
      throw ValidationError("lambda grid needs 0 < lo < hi and at least 3 points");
    if (grid < 1) throw ValidationError("quadrature grid must be positive");
    if (!(tol > 0)) throw ValidationError("tolerance must be positive");
    if (!(length > 0)) throw ValidationError("length must be positive");
  }
};

// ---------------------------------------------------------------------------
// Rendering

void render_text(std::ostream& os, const Json& j, const std::string& prefix) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) render_text(os, v, prefix.empty() ? k : prefix + "." + k);
  } else if (j.is_array() && !j.empty() && (j[0].is_object() || j[0].is_array())) {
    for (std::size_t i = 0; i < j.size(); ++i) render_text(os, j[i], prefix + "[" + std::to_string(i) + "]");
  } else {
    os << prefix << ": " << (j.is_string() ? j.get<std::string>() : j.dump()) << "\n";
  }
}

void emit(const RunConfig& cfg, const Json& j) {
  if (cfg.format == "csv") throw ValidationError("csv output is only available for witten sweep");
  if (cfg.format == "json")
    std::cout << j.dump(2) << "\n";
  else
    render_text(std::cout, j, "");
}

Json verdict_json(const vnla::DetClassVerdict& v) {
  return {{"det_class", v.det_class},
          {"partial_integral", io::number(v.partial_integral)},
          {"tail_slope", v.tail_slope},
          {"resolved_decades", v.resolved_decades},
          {"note", v.note}};
}

Json torsion_json(const cochain::TorsionResult& t) {
  Json j;
  j["log_t"] = t.log_t;
  j["det_class"] = t.det_class;
  j["betti"] = t.euler.betti;
  j["chi"] = t.euler.chi;
  j["spectral_identity"] = t.spectral_identity;
  Json ds = Json::array();
  for (const auto& d : t.degrees)
    ds.push_back({{"logdet", d.value}, {"diagnostic", d.diagnostic}, {"null_dim", d.null_dim}, {"det_class", d.det_class}});
  j["degrees"] = std::move(ds);
  return j;
}

Json zeta_json(const analytic::ZetaDet& z) {
  return {{"logdet", z.value},
          {"diagnostic", z.diagnostic},
          {"fit_residual", z.fit_residual},
          {"kernel", z.kernel_weight},
          {"truncation", z.truncation}};
}

// ---------------------------------------------------------------------------
// Subcommands

int run_algebra(const RunConfig& cfg) {
  auto doc = io::load_document(cfg.file);
  auto j = io::report("algebra");
  j["file"] = cfg.file;
  j["algebra"] = io::to_json(*doc.algebra);
  Json ms = Json::object();
  for (const auto& [name, f] : doc.morphisms) {
    Json mj;
    mj["rows"] = f.rows();
    mj["cols"] = f.cols();
    if (f.square()) mj["trace"] = vnla::trace_morphism(f);
    auto ff = f.adjoint() * f;
    auto mu = vnla::spectral_measure(ff);
    auto reg = vnla::logdet_regularized(mu, cfg.lambda);
    mj["null_dim"] = reg.null_dim;
    mj["logdet_reg_ff"] = {{"value", reg.value}, {"diagnostic", reg.diagnostic}, {"det_class", reg.det_class}};
    if (f.square() && reg.null_dim == 0.0) mj["logdet_fk"] = vnla::logdet_fk(f);
    auto ns = vnla::novikov_shubin(mu);
    mj["novikov_shubin"] = ns.infinite ? Json("inf") : Json(ns.alpha);
    mj["novikov_shubin_residual"] = ns.residual;
    ms[name] = std::move(mj);
  }
  j["morphisms"] = std::move(ms);
  emit(cfg, j);
  return 0;
}

int run_complex(const std::string& action, const RunConfig& cfg) {
  auto doc = io::load_document(cfg.file);
  if (!doc.complex) throw ValidationError(cfg.file + ": no \"complex\" section");
  const auto& c = *doc.complex;
  auto j = io::report("complex." + action);
  j["file"] = cfg.file;
  j["ranks"] = c.ranks();
  auto v = cochain::validate(c);
  j["composition_residual"] = v.max_residual;
  if (action == "validate") {
    j["ok"] = v.ok;
    emit(cfg, j);
    return v.ok ? 0 : kExitValidation;
  }
  cochain::require_valid(c);
  if (action == "torsion") {
    j["torsion"] = torsion_json(cochain::torsion(c, cfg.lambda));
  } else if (action == "hodge") {
    auto h = cochain::hodge(c);
    j["projector_residual"] = h.max_projector_residual;
    j["block_residual"] = h.max_block_residual;
    j["betti"] = cochain::euler(c).betti;
  }
  emit(cfg, j);
  return 0;
}

int run_morse(const RunConfig& cfg) {
  morse::MorseSpec spec = cfg.file.empty() ? morse::preset(cfg.preset, cfg.length) : io::load_spec(cfg.file);
  auto in4 = morse::validate_spec(spec);
  int grid = spec.group.kind == morse::GroupKind::free_abelian && spec.group.rank > 1 ? std::min(cfg.grid, 256) : cfg.grid;
  auto rho = morse::parse_representation(spec.group, cfg.rep, grid);
  auto re = morse::reidemeister(spec, rho, cfg.lambda);
  auto j = io::report("morse");
  j["spec"] = spec.name;
  j["rep"] = cfg.rep;
  j["grid"] = grid;
  j["in4"] = {{"pass", in4.ok}, {"residuals", in4.in4_residuals}};
  j["comb"] = torsion_json(re.comb);
  j["log_t_met"] = re.met.log_t;
  if (!re.met.note.empty()) j["met_note"] = re.met.note;
  j["log_t_re"] = re.log_t;
  j["log_t_re_realified"] = 2 * re.log_t;
  j["germ_level"] = re.germ_level;
  emit(cfg, j);
  return in4.ok ? 0 : kExitValidation;
}

int run_analytic(const std::string& action, const RunConfig& cfg) {
  auto j = io::report("analytic." + action);
  int code = 0;
  if (action == "cm") {
    auto r = analytic::cheeger_mueller(cfg.preset, cfg.rep, cfg.length, cfg.grid);
    j["preset"] = cfg.preset;
    j["rep"] = cfg.rep;
    j["length"] = cfg.length;
    j["log_t_an"] = r.log_an;
    j["an_diagnostic"] = r.an_diagnostic;
    j["log_t_re"] = r.log_re;
    j["log_t_comb"] = r.log_comb;
    j["log_t_met"] = r.log_met;
    j["diff"] = r.diff;
    j["tol"] = cfg.tol;
    j["pass"] = r.diff < cfg.tol;
    j["log_t_an_realified"] = 2 * r.log_an;
    j["log_t_re_realified"] = 2 * r.log_re;
    j["convention"] = r.convention;
    j["det_class"] = r.det_class;
    if (!(r.diff < cfg.tol)) code = kExitTolerance;
  } else if (action == "torsion") {
    auto a = analytic::analytic_torsion(cfg.preset, analytic::parse_rep(cfg.rep, cfg.grid), cfg.length);
    j["preset"] = cfg.preset;
    j["rep"] = cfg.rep;
    j["log_t_an"] = a.log_t;
    j["diagnostic"] = a.diagnostic;
    j["kernel"] = a.kernel;
    j["l2"] = a.l2;
    Json ds = Json::array();
    for (const auto& z : a.degrees) ds.push_back(zeta_json(z));
    j["degrees"] = std::move(ds);
    j["convention"] = a.convention;
  } else if (action == "mv") {
    auto r = analytic::mayer_vietoris_1d(cfg.L, cfg.m);
    j["L"] = r.L;
    j["m"] = r.m;
    j["logdet_circle"] = r.logdet_circle;
    j["logdet_dirichlet"] = r.logdet_dirichlet;
    j["r_dn"] = r.r_dn;
    j["cbar"] = r.cbar;
  } else if (action == "detclass") {
    auto r = analytic::det_class_report(cfg.preset, cfg.rep, cfg.length, cfg.grid);
    j["preset"] = cfg.preset;
    j["rep"] = cfg.rep;
    j["combinatorial"] = verdict_json(r.combinatorial);
    j["analytic"] = verdict_json(r.analytic);
    j["agree"] = r.agree;
  }
  emit(cfg, j);
  return code;
}

witten::Params witten_params(const RunConfig& cfg) {
  if (cfg.preset != "circle") throw ValidationError("witten supports the circle preset only");
  witten::Params p;
  p.N = cfg.N;
  p.theta = cfg.theta;
  if (cfg.witten_length) p.L = *cfg.witten_length;
  p.potential = witten::parse_potential(cfg.potential);
  p.check();
  return p;
}

int run_witten_sweep(const RunConfig& cfg) {
  auto p = witten_params(cfg);
  auto ts = witten::parse_range(cfg.range);
  auto r = witten::sweep(p, ts);
  if (!cfg.out.empty()) {
    std::ofstream f(cfg.out);
    if (!f) throw ValidationError("cannot write " + cfg.out);
    witten::write_csv(f, r);
  }
  if (cfg.format == "csv") {
    if (cfg.out.empty()) witten::write_csv(std::cout, r);
    return 0;
  }
  auto j = io::report("witten.sweep");
  j["theta"] = p.theta;
  j["N"] = p.N;
  j["L"] = p.L;
  j["potential"] = p.potential.name;
  j["diagnostic"] = r.diagnostic;
  if (!cfg.out.empty()) j["csv"] = cfg.out;
  Json rows = Json::array();
  for (const auto& w : r.rows)
    rows.push_back({{"t", w.t},
                    {"q", w.q},
                    {"small_max", w.small_max},
                    {"large_min", w.large_min},
                    {"logT_an", w.log_an},
                    {"logT_sm", w.log_sm},
                    {"logT_la", w.log_la}});
  j["rows"] = std::move(rows);
  emit(cfg, j);
  return 0;
}

int run_witten_fit(const RunConfig& cfg) {
  std::ifstream f(cfg.file);
  if (!f) throw ValidationError("cannot open " + cfg.file);
  auto rows = witten::read_csv(f);
  std::vector<double> ts, an, sm, la;
  for (const auto& r : rows)
    if (r.q == 0) {
      ts.push_back(r.t);
      an.push_back(r.log_an);
      sm.push_back(r.log_sm);
      la.push_back(r.log_la);
    }
  auto j = io::report("witten.fit");
  j["file"] = cfg.file;
  j["samples"] = ts.size();
  for (auto [name, ys] : {std::pair{"logT_an", &an}, {"logT_sm", &sm}, {"logT_la", &la}}) {
    auto fit = witten::fit_asymptotic(ts, *ys);
    Json fj, cs = Json::object();
    for (std::size_t i = 0; i < fit.basis.size(); ++i) cs[witten::to_string(fit.basis[i])] = fit.coef[i];
    fj["coefficients"] = std::move(cs);
    fj["ft"] = fit.ft;
    fj["ft_stability"] = fit.ft_stability;
    fj["residual"] = fit.residual;
    fj["condition"] = fit.condition;
    j[name] = std::move(fj);
  }
  emit(cfg, j);
  return 0;
}

int run_suite(const RunConfig& cfg) {
  if (cfg.suite.empty()) throw ValidationError("suite name is empty");
  auto r = suites::run_suite(cfg.suite, cfg.seed);
  if (cfg.format == "text") {
    std::cout << "suite " << r.name << " (seed " << r.seed << ")\n";
    for (const auto& c : r.criteria) {
      std::cout << (c.pass ? "PASS " : "FAIL ");
      if (c.id > 0) std::cout << "[" << c.id << "] ";
      std::cout << c.title;
      if (cfg.timings) std::cout << " (" << c.seconds << " s)";
      std::cout << "\n";
      if (!c.error.empty()) std::cout << "  error: " << c.error << "\n";
      for (const auto& k : c.checks) {
        std::cout << "  " << (k.pass ? "ok  " : "bad ") << k.name << " = " << k.value;
        if (k.relation == "abs") std::cout << "  (target " << k.target << " +- " << k.tol << ")";
        if (k.relation == "lt") std::cout << "  (< " << k.tol << ")";
        if (k.relation == "ge") std::cout << "  (>= " << k.tol << ")";
        std::cout << "\n";
      }
    }
  } else {
    emit(cfg, suites::to_json(r, cfg.timings));
  }
  return r.pass ? 0 : kExitTolerance;
}

void add_lambda(CLI::App* c, RunConfig& cfg) {
  c->add_option("--lambda-lo", cfg.lambda.lo, "smallest lambda of the regularization grid");
  c->add_option("--lambda-hi", cfg.lambda.hi, "largest lambda of the regularization grid");
  c->add_option("--lambda-points", cfg.lambda.points, "points of the regularization grid");
}

void add_preset(CLI::App* c, RunConfig& cfg) {
  c->add_option("--preset", cfg.preset, "circle | torus2 | s2 | s3");
  c->add_option("--rep", cfg.rep, "trivial | char:p,k | regular");
  c->add_option("--length", cfg.length, "circle length");
  c->add_option("--grid", cfg.grid, "torus quadrature grid");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"torsion calculus over finite von Neumann algebras"};
  app.require_subcommand(1);
  app.fallthrough();
  RunConfig cfg;
  app.add_option("--format", cfg.format, "text | json | csv")->check(CLI::IsMember({"text", "json", "csv"}));
  app.add_option("--seed", cfg.seed, "seed for randomized suites");

  std::function<int()> action;

  auto* alg = app.add_subcommand("algebra", "spectral data of the morphisms in a JSON document");
  alg->add_option("file", cfg.file)->required();
  add_lambda(alg, cfg);
  alg->callback([&] { action = [&] { return run_algebra(cfg); }; });

  auto* cx = app.add_subcommand("complex", "cochain complexes from a JSON document");
  cx->require_subcommand(1);
  for (const char* name : {"torsion", "validate", "hodge"}) {
    auto* s = cx->add_subcommand(name);
    s->add_option("file", cfg.file)->required();
    add_lambda(s, cfg);
    std::string n = name;
    s->callback([&, n] { action = [&, n] { return run_complex(n, cfg); }; });
  }

  auto* mo = app.add_subcommand("morse", "Morse complex and Reidemeister torsion");
  add_preset(mo, cfg);
  mo->add_option("--file", cfg.file, "Morse spec JSON instead of a preset");
  add_lambda(mo, cfg);
  mo->callback([&] { action = [&] { return run_morse(cfg); }; });

  auto* an = app.add_subcommand("analytic", "zeta-regularized analytic torsion");
  an->require_subcommand(1);
  for (const char* name : {"cm", "torsion", "detclass"}) {
    auto* s = an->add_subcommand(name);
    add_preset(s, cfg);
    if (std::string(name) == "cm") s->add_option("--tol", cfg.tol, "tolerance on |log T_an - log T_Re|");
    std::string n = name;
    s->callback([&, n] { action = [&, n] { return run_analytic(n, cfg); }; });
  }
  auto* mv = an->add_subcommand("mv", "Mayer-Vietoris factorization on the circle");
  mv->add_option("--L", cfg.L, "circle length");
  mv->add_option("--m", cfg.m, "mass");
  mv->callback([&] { action = [&] { return run_analytic("mv", cfg); }; });

  auto* wi = app.add_subcommand("witten", "Witten deformation of the circle");
  wi->require_subcommand(1);
  auto* sw = wi->add_subcommand("sweep");
  sw->add_option("--preset", cfg.preset);
  sw->add_option("--theta", cfg.theta, "twist angle");
  sw->add_option("--N", cfg.N, "grid size");
  sw->add_option("--t", cfg.range, "a:b:n");
  sw->add_option("--length", cfg.witten_length, "circle length (default pi sqrt 2)");
  sw->add_option("--potential", cfg.potential, "cosine | skewed");
  sw->add_option("--out", cfg.out, "CSV output file");
  sw->callback([&] { action = [&] { return run_witten_sweep(cfg); }; });
  auto* fi = wi->add_subcommand("fit");
  fi->add_option("file", cfg.file)->required();
  fi->callback([&] { action = [&] { return run_witten_fit(cfg); }; });

  auto* su = app.add_subcommand("suite", "property bundles");
  su->add_option("name", cfg.suite, "identities | product-formulas | cheeger-mueller | witten-gap | det-class")->required();
  su->add_flag("--timings", cfg.timings, "include runtimes (output no longer reproducible)");
  su->callback([&] { action = [&] { return run_suite(cfg); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    cfg.check();
    return action();
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ToleranceError& e) {
    std::cerr << "tolerance failure: " << e.what() << "\n";
    return kExitTolerance;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
