#include "closedgeo/cli.hpp"
#include "closedgeo/errors.hpp"
#include "closedgeo/finder.hpp"
#include "closedgeo/io.hpp"
#include "closedgeo/morse.hpp"
#include "closedgeo/spectral.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace closedgeo;

namespace {

py::object to_python(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

Json from_python(const py::object& o) {
  return Json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

Point to_point(const Eigen::VectorXd& v) {
  if (v.size() > kMaxAmbientDim) throw InputError("point has too many coordinates");
  return Point(v);
}

Eigen::MatrixXd vertex_matrix(const Polygon& p) {
  Eigen::MatrixXd out(p.size(), p.manifold().ambient_dim());
  for (int i = 0; i < p.size(); ++i) out.row(i) = p.vertex(i).transpose();
  return out;
}

Polygon polygon_through(const Manifold& m, const Eigen::MatrixXd& rows) {
  std::vector<Point> verts;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) verts.push_back(to_point(rows.row(i).transpose()));
  return Polygon::through(m, std::move(verts));
}

}  // namespace

PYBIND11_MODULE(_closedgeo, m) {
  m.doc() = "Closed geodesics on model manifolds: finder, spectral data and Morse arithmetic.";
  m.attr("__version__") = CLOSEDGEO_VERSION;
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InputError>(m, "InputError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<ResolutionError>(m, "ResolutionError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<ConsistencyError>(m, "ConsistencyError", base.ptr());

  py::class_<Manifold>(m, "Manifold")
      .def(py::init([](const std::string& kind, std::vector<double> params, std::optional<double> delta) {
             return Manifold::create(parse_manifold_kind(kind), std::move(params), delta);
           }),
           py::arg("kind"), py::arg("params"), py::arg("delta") = py::none())
      .def_property_readonly("kind", [](const Manifold& x) { return std::string(to_string(x.kind())); })
      .def_property_readonly("backend", [](const Manifold& x) { return std::string(to_string(x.backend())); })
      .def_property_readonly("params", &Manifold::params)
      .def_property_readonly("dim", &Manifold::dim)
      .def_property_readonly("ambient_dim", &Manifold::ambient_dim)
      .def_property_readonly("delta", &Manifold::delta)
      .def_property_readonly("injectivity_radius", &Manifold::injectivity_radius)
      .def("to_dict", [](const Manifold& x) { return to_python(to_json(x)); })
      .def("__eq__", &Manifold::operator==)
      .def("__repr__", [](const Manifold& x) {
        std::ostringstream os;
        os << "Manifold(" << to_string(x.kind()) << ", delta=" << x.delta() << ")";
        return os.str();
      });

  py::class_<Polygon>(m, "Polygon")
      .def_static("through", &polygon_through, py::arg("manifold"), py::arg("vertices"))
      .def_static("from_dict", [](const py::object& o) { return polygon_from_json(from_python(o)); })
      .def_property_readonly("manifold", &Polygon::manifold)
      .def_property_readonly("vertices", &vertex_matrix)
      .def_property_readonly("homotopy_class",
                             [](const Polygon& p) -> std::optional<std::vector<int>> {
                               if (!p.homotopy_class()) return std::nullopt;
                               const auto& c = *p.homotopy_class();
                               return std::vector<int>(c.data(), c.data() + c.size());
                             })
      .def("__len__", &Polygon::size)
      .def("length", [](const Polygon& p) { return length(p); })
      .def("grad_norm", [](const Polygon& p) { return grad_norm(p); })
      .def("gradient",
           [](const Polygon& p) {
             const auto g = grad_length(p);
             Eigen::MatrixXd out(p.size(), p.manifold().ambient_dim());
             for (int i = 0; i < p.size(); ++i) out.row(i) = g[static_cast<size_t>(i)].transpose();
             return out;
           })
      .def("birkhoff_shorten", [](const Polygon& p) { return birkhoff_shorten(p); })
      .def("subdivide", [](const Polygon& p, int l) { return subdivide(p, l); }, py::arg("l"))
      .def("rotate", [](const Polygon& p, int k) { return rotate(p, k); }, py::arg("k"))
      .def("reverse", [](const Polygon& p) { return reverse(p); })
      .def("iterate", [](const Polygon& p, int n) { return iterate(p, n); }, py::arg("n"))
      .def("to_dict", [](const Polygon& p) { return to_python(to_json(p)); });

  py::class_<ClosedGeodesic>(m, "ClosedGeodesic")
      .def_static("from_dict", [](const py::object& o) { return geodesic_from_json(from_python(o)); })
      .def_readonly("polygon", &ClosedGeodesic::polygon)
      .def_readonly("length", &ClosedGeodesic::length)
      .def_readonly("grad_norm", &ClosedGeodesic::grad_norm)
      .def_readonly("converged", &ClosedGeodesic::converged)
      .def_readonly("collapsed", &ClosedGeodesic::collapsed)
      .def_readonly("iterations", &ClosedGeodesic::iterations)
      .def_property_readonly("method", [](const ClosedGeodesic& g) { return std::string(to_string(g.method)); })
      .def_property_readonly("trace",
                             [](const ClosedGeodesic& g) {
                               std::vector<std::tuple<int, double, double>> rows;
                               for (const auto& r : g.trace) rows.emplace_back(r.iteration, r.max_length, r.grad_norm);
                               return rows;
                             })
      .def("to_dict", [](const ClosedGeodesic& g, double tol) { return to_python(to_json(g, tol)); },
           py::arg("grad_tol") = 1e-10);

  py::class_<FinderOptions>(m, "FinderOptions")
      .def(py::init<>())
      .def_readwrite("N", &FinderOptions::N)
      .def_readwrite("length_bound", &FinderOptions::length_bound)
      .def_readwrite("max_iters", &FinderOptions::max_iters)
      .def_readwrite("grad_tol", &FinderOptions::grad_tol)
      .def_readwrite("family_size", &FinderOptions::family_size)
      .def_readwrite("seed", &FinderOptions::seed)
      .def_readwrite("threads", &FinderOptions::threads);

  m.def("certify", [](const Polygon& p, double tol) { return certify(p, Method::manual, tol); }, py::arg("polygon"),
        py::arg("grad_tol") = 1e-10);
  m.def("minimize_in_class", &minimize_in_class, py::arg("manifold"), py::arg("seed"),
        py::arg("options") = FinderOptions{}, py::call_guard<py::gil_scoped_release>());
  m.def("sweepout_minimax", &sweepout_minimax, py::arg("manifold"), py::arg("options") = FinderOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("refine_newton", &refine_newton, py::arg("seed"), py::arg("options") = FinderOptions{},
        py::call_guard<py::gil_scoped_release>());
  m.def("latitude_polygon", &latitude_polygon, py::arg("manifold"), py::arg("n"), py::arg("colatitude"),
        py::arg("axis") = -1);
  m.def("principal_ellipse_polygon", &principal_ellipse_polygon, py::arg("manifold"), py::arg("i"), py::arg("j"),
        py::arg("n"));
  m.def(
      "class_loop",
      [](const Manifold& x, const std::vector<int>& cls, int n, std::optional<Eigen::VectorXd> base) {
        return class_loop(x, cls, n, base ? std::optional<Point>(to_point(*base)) : std::nullopt);
      },
      py::arg("manifold"), py::arg("cls"), py::arg("n"), py::arg("base") = py::none());
  m.def("perturb", &perturb, py::arg("polygon"), py::arg("amplitude"), py::arg("seed"));

  m.def(
      "index_nullity",
      [](const ClosedGeodesic& g, int threads) {
        const IndexNullity r = index_nullity(g, threads);
        return py::make_tuple(r.index, r.nullity);
      },
      py::arg("geodesic"), py::arg("threads") = 1);
  m.def("poincare_map", [](const ClosedGeodesic& g) { return Eigen::MatrixXd(poincare_map(g)); }, py::arg("geodesic"));
  m.def(
      "analyze",
      [](const ClosedGeodesic& g, int grid, const std::vector<int>& iterates, int threads) {
        SpectralData s;
        {
          py::gil_scoped_release release;
          s = analyze(g, grid, iterates, threads);
        }
        return to_python(to_json(s));
      },
      py::arg("geodesic"), py::arg("grid") = 64, py::arg("iterates") = std::vector<int>{}, py::arg("threads") = 1);
  m.def(
      "iterated_index",
      [](const ClosedGeodesic& g, int n, const std::string& mode, int threads) {
        IteratedIndex r;
        {
          py::gil_scoped_release release;
          r = iterated_index(g, n, parse_iterate_mode(mode), threads);
        }
        return to_python(to_json(r));
      },
      py::arg("geodesic"), py::arg("n"), py::arg("mode") = "both", py::arg("threads") = 1);

  m.def(
      "type_numbers",
      [](int s, const std::map<int, int>& index, std::optional<int> p) {
        TypeNumberQuery q;
        q.s = s;
        q.p = p;
        q.index = index;
        return to_python(to_json(type_numbers(q), s));
      },
      py::arg("s"), py::arg("index"), py::arg("p") = py::none());
  m.def("lemma1_parity", [](const std::vector<int>& indices) {
    const ParityVerdict v = lemma1_parity(indices);
    return py::make_tuple(v.passed, v.n, v.k);
  });
  m.def(
      "poincare_series",
      [](const std::string& space, int n, int degree, const std::string& branch) {
        return poincare_series(parse_series_space(space), n, degree, parse_series_branch(branch)).coefficients;
      },
      py::arg("space"), py::arg("n"), py::arg("degree"), py::arg("branch") = "auto");
  m.def(
      "morse_check",
      [](std::vector<long long> M, std::vector<long long> B, std::optional<int> stable_from) {
        return to_python(to_json(morse_check({std::move(M), std::move(B), stable_from})));
      },
      py::arg("M"), py::arg("B"), py::arg("stable_from") = py::none());

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs one cgeo subcommand in-process; returns (exit_code, stdout, stderr).");
}
