#include "closedgeo/io.hpp"

#include "closedgeo/errors.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>

namespace closedgeo {

namespace {

void check_keys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!j.is_object()) throw InputError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw InputError("unknown key '" + key + "' in " + std::string(what));
  }
}

template <class T>
T get(const Json& j, const char* key, std::string_view what) {
  if (!j.contains(key)) throw InputError(std::string(what) + " lacks '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string(what) + ": bad '" + key + "': " + e.what());
  }
}

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (int r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Json header(std::string_view kind) { return Json{{"schema", "closedgeo." + std::string(kind)}, {"version", kSchemaVersion}}; }

void check_header(const Json& j, std::string_view kind) {
  if (j.contains("schema") && j.at("schema") != "closedgeo." + std::string(kind)) {
    throw InputError("expected a closedgeo." + std::string(kind) + " document");
  }
  if (j.contains("version") && j.at("version") != kSchemaVersion) {
    throw InputError("unsupported " + std::string(kind) + " schema version");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json to_json(const Manifold& m) {
  return Json{{"kind", to_string(m.kind())}, {"params", m.params()}, {"delta", m.delta()}};
}

Manifold manifold_from_json(const Json& j) {
  check_keys(j, {"kind", "params", "delta"}, "manifold");
  const auto kind = parse_manifold_kind(get<std::string>(j, "kind", "manifold"));
  auto params = get<std::vector<double>>(j, "params", "manifold");
  std::optional<double> delta;
  if (j.contains("delta") && !j.at("delta").is_null()) delta = get<double>(j, "delta", "manifold");
  return Manifold::create(kind, std::move(params), delta);
}

Json to_json(const Polygon& p) {
  Json j = header("polygon");
  j["manifold"] = to_json(p.manifold());
  j["N"] = p.size();
  Json verts = Json::array();
  for (const auto& v : p.vertices()) verts.push_back(vec_json(v));
  j["vertices"] = std::move(verts);
  if (p.homotopy_class()) {
    const auto& c = *p.homotopy_class();
    j["homotopy_class"] = std::vector<int>(c.data(), c.data() + c.size());
  }
  return j;
}

Polygon polygon_from_json(const Json& j) {
  check_keys(j, {"schema", "version", "manifold", "N", "vertices", "homotopy_class"}, "polygon");
  check_header(j, "polygon");
  const Manifold m = manifold_from_json(j.at("manifold"));
  const auto raw = get<std::vector<std::vector<double>>>(j, "vertices", "polygon");
  if (j.contains("N") && j.at("N") != raw.size()) throw InputError("polygon N does not match its vertex count");
  std::vector<Point> verts;
  for (const auto& r : raw) {
    if (static_cast<int>(r.size()) != m.ambient_dim()) throw InputError("vertex has the wrong dimension");
    verts.push_back(Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size())));
  }
  Polygon p = Polygon::through(m, std::move(verts));
  if (j.contains("homotopy_class")) {
    const auto cls = get<std::vector<int>>(j, "homotopy_class", "polygon");
    if (!p.homotopy_class() || static_cast<int>(cls.size()) != p.homotopy_class()->size() ||
        !std::equal(cls.begin(), cls.end(), p.homotopy_class()->data())) {
      throw InputError("stored homotopy class does not match the vertices");
    }
  }
  return p;
}

Json to_json(const ClosedGeodesic& g, double grad_tol) {
  Json j = header("geodesic");
  j["polygon"] = to_json(g.polygon);
  j["length"] = g.length;
  j["grad_norm"] = g.grad_norm;
  j["grad_tol"] = grad_tol;
  j["method"] = to_string(g.method);
  j["converged"] = g.converged;
  j["collapsed"] = g.collapsed;
  j["iterations"] = g.iterations;
  return j;
}

ClosedGeodesic geodesic_from_json(const Json& j) {
  if (j.is_object() && j.contains("schema") && j.at("schema") == "closedgeo.polygon") {
    return certify(polygon_from_json(j), Method::manual);
  }
  check_keys(j,
             {"schema", "version", "polygon", "length", "grad_norm", "grad_tol", "method", "converged", "collapsed",
              "iterations"},
             "geodesic");
  check_header(j, "geodesic");
  const double tol = j.contains("grad_tol") ? get<double>(j, "grad_tol", "geodesic") : 1e-10;
  const Method method = j.contains("method") ? parse_method(get<std::string>(j, "method", "geodesic")) : Method::manual;
  ClosedGeodesic g = certify(polygon_from_json(j.at("polygon")), method, tol);
  if (j.contains("iterations")) g.iterations = get<int>(j, "iterations", "geodesic");
  return g;
}

Json to_json(const SpectralData& s) {
  Json j = header("spectral");
  j["index"] = s.index;
  j["nullity"] = s.nullity;
  j["poincare_matrix"] = matrix_json(s.poincare_matrix);
  Json ev = Json::array();
  for (auto z : s.poincare_eigenvalues) ev.push_back({{"re", z.real()}, {"im", z.imag()}});
  j["eigenvalues"] = std::move(ev);
  j["orientation_preserving"] = s.orientation_preserving;
  Json samples = Json::array();
  for (const auto& b : s.bott_samples) samples.push_back({{"z_arg", b.z_arg}, {"lambda", b.lambda}, {"n", b.n}});
  j["bott_samples"] = std::move(samples);
  j["hessian_eigenvalues"] = s.hessian_eigenvalues;
  j["symplectic_defect"] = s.symplectic_defect;
  j["vertices"] = s.vertices;
  j["warnings"] = s.warnings;
  return j;
}

Json to_json(const IteratedIndex& r) {
  Json j{{"n", r.n}, {"index", r.index}, {"nullity", r.nullity}};
  j["bott_index"] = r.bott_index ? Json(*r.bott_index) : Json(nullptr);
  j["bott_nullity"] = r.bott_nullity ? Json(*r.bott_nullity) : Json(nullptr);
  j["direct_index"] = r.direct_index ? Json(*r.direct_index) : Json(nullptr);
  j["direct_nullity"] = r.direct_nullity ? Json(*r.direct_nullity) : Json(nullptr);
  j["agree"] = r.agree;
  return j;
}

Json to_json(const TypeNumberTable& t, int s) {
  Json j = header("type_numbers");
  j["s"] = s;
  j["coefficients"] = t.coefficients();
  Json m = Json::object();
  for (const auto& [k, v] : t.m) m[std::to_string(k)] = v;
  j["m"] = std::move(m);
  j["total"] = t.total();
  return j;
}

Json to_json(const SeriesExpansion& s) {
  Json j = header("series");
  j["space"] = to_string(s.space);
  j["n"] = s.n;
  j["degree"] = s.degree;
  j["coefficients"] = s.coefficients;
  return j;
}

Json to_json(const MorseVerdict& v) {
  Json j = header("morse_check");
  j["passed"] = v.passed;
  j["stable_from"] = v.stable_from;
  j["failed_at"] = v.failed_at ? Json(*v.failed_at) : Json(nullptr);
  j["failure"] = v.failure.empty() ? Json(nullptr) : Json(v.failure);
  j["alternating_M"] = v.alternating_M;
  j["alternating_B"] = v.alternating_B;
  j["weak"] = v.weak;
  return j;
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iteration,max_length,grad_norm\n";
  for (const auto& r : trace) os << r.iteration << ',' << format_double(r.max_length) << ',' << format_double(r.grad_norm) << '\n';
}

void write_bott_csv(std::ostream& os, const std::vector<BottSample>& samples) {
  os << "z_arg,lambda,n\n";
  for (const auto& s : samples) os << format_double(s.z_arg) << ',' << s.lambda << ',' << s.n << '\n';
}

void write_iterates_csv(std::ostream& os, const std::vector<IteratedIndex>& rows) {
  os << "n,index,nullity,bott_index,bott_nullity,direct_index,direct_nullity,agree\n";
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& r : rows) {
    os << r.n << ',' << r.index << ',' << r.nullity << ',' << opt(r.bott_index) << ',' << opt(r.bott_nullity) << ','
       << opt(r.direct_index) << ',' << opt(r.direct_nullity) << ',' << (r.agree ? 1 : 0) << '\n';
  }
}

MorseCheckInput read_morse_csv(std::istream& is) {
  MorseCheckInput in;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) throw InputError("morse CSV line " + std::to_string(lineno) + " must have two columns");
    try {
      size_t used0 = 0, used1 = 0;
      const long long m = std::stoll(cells[0], &used0);
      const long long bb = std::stoll(cells[1], &used1);
      if (used0 != cells[0].size() || used1 != cells[1].size()) throw std::invalid_argument("trailing text");
      in.M.push_back(m);
      in.B.push_back(bb);
    } catch (const std::logic_error&) {
      if (!first) throw InputError("morse CSV line " + std::to_string(lineno) + " is not two integers");
    }
    first = false;
  }
  if (in.M.empty()) throw InputError("morse CSV has no rows");
  return in;
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write '" + path + "'");
  f << text;
  if (!f) throw InputError("failed writing '" + path + "'");
}

}  // namespace closedgeo
