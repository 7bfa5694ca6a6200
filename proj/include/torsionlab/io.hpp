#pragma once

// JSON documents: algebra + named morphisms + optional complex, and Morse
// specification files. Output is ordered JSON carrying "schema": 1.

#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

#include "torsionlab/complex.hpp"
#include "torsionlab/morse.hpp"

namespace torsionlab::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchema = 1;

inline Json report(const std::string& kind) {
  Json j;
  j["schema"] = kSchema;
  j["kind"] = kind;
  return j;
}

inline Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

namespace detail {

inline const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

inline int as_int(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw ValidationError(where + ": expected an integer");
  return j.get<int>();
}

inline std::vector<int> int_list(const Json& j, const std::string& where) {
  if (!j.is_array()) throw ValidationError(where + ": expected an array");
  std::vector<int> v;
  for (const auto& x : j) v.push_back(as_int(x, where));
  return v;
}

inline cplx as_coefficient(const Json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ValidationError(where + ": coefficient must be a number or [re, im]");
}

/// A cell is a list of terms, a single term, or a bare number (multiple of 1).
inline std::vector<Json> cell_terms(const Json& cell) {
  if (cell.is_array()) return {cell.begin(), cell.end()};
  return {cell};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Algebras and morphisms.

inline AlgebraPtr algebra_from_json(const Json& j) {
  std::string where = "algebra";
  auto kind = detail::field(j, "kind", where);
  if (!kind.is_string()) throw ValidationError("algebra: \"kind\" must be a string");
  std::string k = kind.get<std::string>();
  if (k == "scalar") return TraceAlgebra::scalar();
  if (k == "finite_group") {
    const Json& t = detail::field(j, "table", where);
    if (!t.is_array()) throw ValidationError("algebra: \"table\" must be an array of rows");
    TraceAlgebra::Table table;
    for (const auto& row : t) table.push_back(detail::int_list(row, "algebra.table"));
    return TraceAlgebra::finite_group(std::move(table));
  }
  if (k == "torus") {
    int rank = detail::as_int(detail::field(j, "rank", where), "algebra.rank");
    int grid = j.contains("grid") ? detail::as_int(j["grid"], "algebra.grid") : 256;
    return TraceAlgebra::torus(rank, grid);
  }
  throw ValidationError("algebra: unknown kind \"" + k + "\"");
}

inline Json to_json(const TraceAlgebra& a) {
  Json j;
  switch (a.kind()) {
    case AlgebraKind::scalar: j["kind"] = "scalar"; break;
    case AlgebraKind::finite_group:
      j["kind"] = "finite_group";
      j["table"] = a.table();
      break;
    case AlgebraKind::torus:
      j["kind"] = "torus";
      j["rank"] = a.rank();
      j["grid"] = a.grid();
      break;
    case AlgebraKind::mixed: throw ValidationError("mixed algebras have no JSON form");
  }
  return j;
}

inline Site site_from_json(const TraceAlgebra& alg, const Json& g, const std::string& where) {
  Site s{alg.identity(), std::vector<int>(alg.rank(), 0)};
  if (g.is_null()) return s;
  if (alg.rank() > 0) {
    s.k = detail::int_list(g, where + ".g");
    if (static_cast<int>(s.k.size()) != alg.rank())
      throw ValidationError(where + ": lattice point needs " + std::to_string(alg.rank()) + " entries");
  } else {
    s.g = detail::as_int(g, where + ".g");
    if (s.g < 0 || s.g >= alg.order()) throw ValidationError(where + ": group index out of range");
  }
  return s;
}

inline Morphism morphism_from_json(const AlgebraPtr& alg, const Json& j, const std::string& name) {
  int rows = detail::as_int(detail::field(j, "rows", name), name + ".rows");
  int cols = detail::as_int(detail::field(j, "cols", name), name + ".cols");
  if (rows < 0 || cols < 0) throw ValidationError(name + ": negative dimensions");
  const Json& e = detail::field(j, "entries", name);
  if (!e.is_array() || static_cast<int>(e.size()) != rows)
    throw ValidationError(name + ": entries needs " + std::to_string(rows) + " rows");
  Morphism m(alg, rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (!e[i].is_array() || static_cast<int>(e[i].size()) != cols)
      throw ValidationError(name + ": row " + std::to_string(i) + " needs " + std::to_string(cols) + " entries");
    for (int c = 0; c < cols; ++c) {
      std::string where = name + "[" + std::to_string(i) + "][" + std::to_string(c) + "]";
      AlgebraElement a(alg);
      for (const Json& term : detail::cell_terms(e[i][c])) {
        if (term.is_number()) {
          a.add(site_from_json(*alg, Json(), where), {term.get<double>(), 0.0});
          continue;
        }
        if (!term.is_object()) throw ValidationError(where + ": term must be an object");
        Json g = term.contains("g") ? term["g"] : Json();
        a.add(site_from_json(*alg, g, where), detail::as_coefficient(detail::field(term, "c", where), where));
      }
      m.set(i, c, std::move(a));
    }
  }
  return m;
}

inline Json to_json(const Morphism& m) {
  const TraceAlgebra& alg = *m.algebra();
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  Json entries = Json::array();
  for (int i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) {
      Json cell = Json::array();
      for (const auto& [s, v] : m.at(i, c).terms()) {
        Json t;
        if (alg.rank() > 0)
          t["g"] = s.k;
        else
          t["g"] = s.g;
        if (v.imag() == 0.0)
          t["c"] = v.real();
        else
          t["c"] = {v.real(), v.imag()};
        cell.push_back(std::move(t));
      }
      row.push_back(std::move(cell));
    }
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  return j;
}

struct Document {
  AlgebraPtr algebra;
  std::map<std::string, Morphism> morphisms;
  std::optional<cochain::CochainComplex> complex;

  const Morphism& morphism(const std::string& name) const {
    auto it = morphisms.find(name);
    if (it == morphisms.end()) throw ValidationError("no morphism named \"" + name + "\"");
    return it->second;
  }
};

inline Document document_from_json(const Json& j) {
  Document doc;
  doc.algebra = algebra_from_json(detail::field(j, "algebra", "document"));
  if (j.contains("morphisms")) {
    if (!j["morphisms"].is_object()) throw ValidationError("\"morphisms\" must be an object");
    for (const auto& [name, m] : j["morphisms"].items()) doc.morphisms.emplace(name, morphism_from_json(doc.algebra, m, name));
  }
  if (j.contains("complex")) {
    const Json& c = j["complex"];
    auto ranks = detail::int_list(detail::field(c, "ranks", "complex"), "complex.ranks");
    const Json& ds = detail::field(c, "differentials", "complex");
    if (!ds.is_array()) throw ValidationError("complex.differentials must be an array of names");
    std::vector<Morphism> d;
    for (const auto& name : ds) {
      if (!name.is_string()) throw ValidationError("complex.differentials must name morphisms");
      d.push_back(doc.morphism(name.get<std::string>()));
    }
    doc.complex.emplace(doc.algebra, std::move(ranks), std::move(d));
  }
  return doc;
}

inline Document load_document(const std::string& path) { return document_from_json(read_json(path)); }

inline Json to_json(const cochain::CochainComplex& c) {
  Json j;
  j["algebra"] = to_json(*c.algebra());
  Json ms = Json::object(), names = Json::array();
  for (int i = 0; i < c.top(); ++i) {
    std::string n = "d" + std::to_string(i);
    ms[n] = to_json(c.d(i));
    names.push_back(n);
  }
  j["morphisms"] = std::move(ms);
  j["complex"] = {{"ranks", c.ranks()}, {"differentials", names}};
  return j;
}

// ---------------------------------------------------------------------------
// Morse specifications.

inline morse::Group group_from_json(const Json& j) {
  const Json& kind = detail::field(j, "kind", "group");
  if (!kind.is_string()) throw ValidationError("group: \"kind\" must be a string");
  std::string k = kind.get<std::string>();
  if (k == "trivial") return morse::Group::trivial();
  if (k == "finite") {
    TraceAlgebra::Table table;
    const Json& t = detail::field(j, "table", "group");
    if (!t.is_array()) throw ValidationError("group: \"table\" must be an array of rows");
    for (const auto& row : t) table.push_back(detail::int_list(row, "group.table"));
    return morse::Group::finite(std::move(table));
  }
  if (k == "free_abelian") return morse::Group::free_abelian(detail::as_int(detail::field(j, "rank", "group"), "group.rank"));
  throw ValidationError("group: unknown kind \"" + k + "\"");
}

inline Json to_json(const morse::Group& g) {
  Json j;
  j["kind"] = morse::to_string(g.kind);
  if (g.kind == morse::GroupKind::finite) j["table"] = g.table;
  if (g.kind == morse::GroupKind::free_abelian) j["rank"] = g.rank;
  return j;
}

inline morse::Group::Key key_from_json(const morse::Group& G, const Json& g, const std::string& where) {
  morse::Group::Key k;
  if (g.is_null()) {
    k = G.identity();
  } else if (G.kind == morse::GroupKind::finite && g.is_number_integer()) {
    k = {g.get<int>()};
  } else {
    k = detail::int_list(g, where + ".g");
  }
  try {
    G.check_key(k);
  } catch (const ValidationError& e) {
    throw ValidationError(where + ": " + e.what());
  }
  return k;
}

inline std::int64_t integer_coefficient(const Json& c, const std::string& where) {
  if (!c.is_number_integer()) throw ValidationError(where + ": incidence coefficients must be integers");
  return c.get<std::int64_t>();
}

inline morse::MorseSpec spec_from_json(const Json& j, const std::string& name = "file") {
  morse::MorseSpec s;
  s.name = j.contains("name") && j["name"].is_string() ? j["name"].get<std::string>() : name;
  s.group = group_from_json(detail::field(j, "group", "spec"));
  s.crit_counts = detail::int_list(detail::field(j, "crit_counts", "spec"), "crit_counts");
  const Json& inc = detail::field(j, "incidence", "spec");
  if (!inc.is_array()) throw ValidationError("incidence must be an array of matrices");
  for (std::size_t q = 0; q < inc.size(); ++q) {
    std::string mname = "M_" + std::to_string(q + 1);
    if (!inc[q].is_array()) throw ValidationError(mname + " must be an array of rows");
    morse::IntMatrix M;
    for (std::size_t r = 0; r < inc[q].size(); ++r) {
      const Json& row = inc[q][r];
      if (!row.is_array()) throw ValidationError(mname + ": row must be an array");
      std::vector<morse::GroupRing> out;
      for (std::size_t c = 0; c < row.size(); ++c) {
        std::string where = mname + "[" + std::to_string(r) + "][" + std::to_string(c) + "]";
        morse::GroupRing e;
        for (const Json& term : detail::cell_terms(row[c])) {
          if (term.is_number()) {
            e.add(s.group.identity(), integer_coefficient(term, where));
            continue;
          }
          if (!term.is_object()) throw ValidationError(where + ": term must be an object");
          Json g = term.contains("g") ? term["g"] : Json();
          e.add(key_from_json(s.group, g, where), integer_coefficient(detail::field(term, "c", where), where));
        }
        out.push_back(std::move(e));
      }
      M.push_back(std::move(out));
    }
    s.incidence.push_back(std::move(M));
  }
  if (j.contains("harmonic_data") && !j["harmonic_data"].is_null()) {
    const Json& h = detail::field(j["harmonic_data"], "cell_integrals", "harmonic_data");
    if (!h.is_array()) throw ValidationError("harmonic_data.cell_integrals must be an array of matrices");
    morse::HarmonicData hd;
    for (std::size_t q = 0; q < h.size(); ++q) {
      const Json& m = h[q];
      if (!m.is_array()) throw ValidationError("harmonic_data: matrix expected");
      int rows = static_cast<int>(m.size());
      int cols = rows == 0 ? 0 : static_cast<int>(m[0].size());
      Eigen::MatrixXd I(rows, cols);
      for (int r = 0; r < rows; ++r) {
        if (!m[r].is_array() || static_cast<int>(m[r].size()) != cols)
          throw ValidationError("harmonic_data: ragged matrix in degree " + std::to_string(q));
        for (int c = 0; c < cols; ++c) {
          if (!m[r][c].is_number()) throw ValidationError("harmonic_data: entries must be numbers");
          I(r, c) = m[r][c].get<double>();
        }
      }
      hd.cell_integrals.push_back(std::move(I));
    }
    s.harmonic = std::move(hd);
  }
  morse::validate_spec(s);
  return s;
}

inline morse::MorseSpec load_spec(const std::string& path) { return spec_from_json(read_json(path), path); }

inline Json to_json(const morse::MorseSpec& s) {
  Json j;
  j["name"] = s.name;
  j["group"] = to_json(s.group);
  j["crit_counts"] = s.crit_counts;
  Json inc = Json::array();
  for (const auto& M : s.incidence) {
    Json mj = Json::array();
    for (const auto& row : M) {
      Json rj = Json::array();
      for (const auto& e : row) {
        Json cell = Json::array();
        for (const auto& [g, c] : e.terms()) {
          Json t;
          if (s.group.kind == morse::GroupKind::finite)
            t["g"] = g[0];
          else
            t["g"] = g;
          t["c"] = c;
          cell.push_back(std::move(t));
        }
        rj.push_back(std::move(cell));
      }
      mj.push_back(std::move(rj));
    }
    inc.push_back(std::move(mj));
  }
  j["incidence"] = std::move(inc);
  if (s.harmonic) {
    Json h = Json::array();
    for (const auto& I : s.harmonic->cell_integrals) {
      Json m = Json::array();
      for (Eigen::Index r = 0; r < I.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < I.cols(); ++c) row.push_back(I(r, c));
        m.push_back(std::move(row));
      }
      h.push_back(std::move(m));
    }
    j["harmonic_data"] = {{"cell_integrals", h}};
  }
  return j;
}

/// Round-trippable decimal text for report numbers: nonfinite values become strings.
inline Json number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

}  // namespace torsionlab::io
