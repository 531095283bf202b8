#include "closedgeo/cli.hpp"

#include "closedgeo/errors.hpp"
#include "closedgeo/finder.hpp"
#include "closedgeo/io.hpp"
#include "closedgeo/morse.hpp"
#include "closedgeo/parallel.hpp"
#include "closedgeo/spectral.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace closedgeo::cli {

namespace {

enum class KeyType { integer, real, text, int_list, real_list, index_map };

struct KeySpec {
  const char* name;  // config key; the flag is the same with '-' for '_'
  KeyType type;
  const char* help;
};

const std::vector<KeySpec> kCommon = {
    {"config", KeyType::text, "JSON config file; flags override its entries"},
    {"out", KeyType::text, "write the result JSON here instead of stdout"},
    {"manifest", KeyType::text, "manifest path (default <out>.manifest.json or cgeo-manifest.json)"},
    {"threads", KeyType::integer, "worker threads (default $CLOSEDGEO_THREADS or 1)"},
};

const std::map<std::string, std::vector<KeySpec>, std::less<>> kCommands = {
    {"find",
     {{"manifold", KeyType::text, "round_sphere | ellipsoid | flat_torus | torus_of_revolution"},
      {"params", KeyType::real_list, "manifold parameters, comma separated"},
      {"delta", KeyType::real, "connection radius (default per manifold)"},
      {"method", KeyType::text, "minimize | sweepout | newton"},
      {"n", KeyType::integer, "polygon size N"},
      {"length_bound", KeyType::real, "length bound a, giving N = floor(a / delta) + 1"},
      {"max_iters", KeyType::integer, "iteration cap (default 10000)"},
      {"grad_tol", KeyType::real, "criticality tolerance (default 1e-10)"},
      {"family_size", KeyType::integer, "sweep-out family size (default 64)"},
      {"seed", KeyType::integer, "random seed for --perturb (default 0)"},
      {"class", KeyType::int_list, "free homotopy class of a chart seed loop"},
      {"base", KeyType::real_list, "start point of the class seed loop"},
      {"plane", KeyType::int_list, "coordinate plane i,j of a principal ellipse seed"},
      {"colatitude", KeyType::real, "latitude circle seed about the longest axis"},
      {"seed_polygon", KeyType::text, "polygon or geodesic JSON used as seed"},
      {"perturb", KeyType::real, "Gaussian tangent noise added to the seed"},
      {"csv", KeyType::text, "convergence trace CSV"}}},
    {"spectrum",
     {{"input", KeyType::text, "geodesic JSON from find"},
      {"grid", KeyType::integer, "Bott function grid size (default 64)"},
      {"iterates", KeyType::int_list, "also sample the n-th roots of unity for these n"},
      {"csv", KeyType::text, "Lambda/N samples CSV"}}},
    {"iterates",
     {{"input", KeyType::text, "geodesic JSON from find"},
      {"n_max", KeyType::integer, "largest iterate (default 4)"},
      {"mode", KeyType::text, "bott | direct | both (default both)"},
      {"csv", KeyType::text, "iterate table CSV"}}},
    {"series",
     {{"space", KeyType::text, "omega+rel | omega_rel | omega+ | omega"},
      {"n", KeyType::integer, "sphere dimension"},
      {"degree", KeyType::integer, "truncation degree K"},
      {"branch", KeyType::text, "auto | even | odd (default auto)"}}},
    {"types",
     {{"s", KeyType::integer, "iterate s"},
      {"p", KeyType::text, "prime, or 'rational' (default)"},
      {"index", KeyType::index_map, "indices d=i(d), comma separated"}}},
    {"check-morse",
     {{"input", KeyType::text, "two-column CSV M_k,B_k"},
      {"stable_from", KeyType::integer, "rank r* from which equality must hold (default R)"}}},
};

std::string flag_name(std::string_view key) {
  std::string s(key);
  std::replace(s.begin(), s.end(), '_', '-');
  return s;
}

std::string key_name(std::string_view flag) {
  std::string s(flag);
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

const KeySpec* find_key(const std::vector<KeySpec>& keys, std::string_view name) {
  for (const auto& k : kCommon) {
    if (name == k.name) return &k;
  }
  for (const auto& k : keys) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

long long parse_int(const std::string& s, std::string_view key) {
  try {
    size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw InputError("'" + std::string(key) + "' expects an integer, got '" + s + "'");
}

double parse_real(const std::string& s, std::string_view key) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::logic_error&) {
  }
  throw InputError("'" + std::string(key) + "' expects a number, got '" + s + "'");
}

/// Converts a flag string or a config value to the canonical JSON form of its key.
Json normalize(const KeySpec& spec, const Json& value) {
  const std::string key = spec.name;
  auto from_string = [&](const std::string& s) -> Json {
    switch (spec.type) {
      case KeyType::integer: return parse_int(s, key);
      case KeyType::real: return parse_real(s, key);
      case KeyType::text: return s;
      case KeyType::int_list: {
        Json a = Json::array();
        for (const auto& part : split(s, ',')) a.push_back(parse_int(part, key));
        return a;
      }
      case KeyType::real_list: {
        Json a = Json::array();
        for (const auto& part : split(s, ',')) a.push_back(parse_real(part, key));
        return a;
      }
      case KeyType::index_map: {
        Json o = Json::object();
        for (const auto& part : split(s, ',')) {
          const auto eq = part.find('=');
          if (eq == std::string::npos) throw InputError("'index' entries must look like d=i");
          o[std::to_string(parse_int(part.substr(0, eq), key))] = parse_int(part.substr(eq + 1), key);
        }
        return o;
      }
    }
    return nullptr;
  };
  if (value.is_string()) return from_string(value.get<std::string>());
  switch (spec.type) {
    case KeyType::integer:
      if (value.is_number_integer()) return value;
      break;
    case KeyType::real:
      if (value.is_number()) return value.get<double>();
      break;
    case KeyType::text:
      break;
    case KeyType::int_list:
      if (value.is_array() && std::all_of(value.begin(), value.end(), [](const Json& v) { return v.is_number_integer(); }))
        return value;
      break;
    case KeyType::real_list:
      if (value.is_array() && std::all_of(value.begin(), value.end(), [](const Json& v) { return v.is_number(); })) {
        Json a = Json::array();
        for (const auto& v : value) a.push_back(v.get<double>());
        return a;
      }
      break;
    case KeyType::index_map:
      if (value.is_object()) {
        Json o = Json::object();
        for (const auto& [d, i] : value.items()) {
          if (!i.is_number_integer()) throw InputError("'index' values must be integers");
          o[std::to_string(parse_int(d, key))] = i;
        }
        return o;
      }
      break;
  }
  throw InputError("config key '" + key + "' has the wrong type");
}

/// Merges a config file (validated against the command's keys) with explicit flags.
Json merge_config(const std::string& command, const std::vector<KeySpec>& keys, const Json& file, const Json& flags) {
  Json merged = Json::object();
  if (!file.is_null()) {
    if (!file.is_object()) throw InputError("config must be a JSON object");
    for (const auto& [raw, value] : file.items()) {
      const std::string name = key_name(raw);
      if (name == "command") {
        if (value != command) throw InputError("config is for command '" + value.dump() + "', not '" + command + "'");
        continue;
      }
      if (name == "manifold" && value.is_object() && command == "find") {
        for (const auto& [mk, mv] : value.items()) {
          const std::string sub = mk == "kind" ? "manifold" : key_name(mk);
          if (sub != "manifold" && sub != "params" && sub != "delta") throw InputError("unknown key '" + mk + "' in manifold block");
          merged[sub] = normalize(*find_key(keys, sub), mv);
        }
        continue;
      }
      const KeySpec* spec = find_key(keys, name);
      if (!spec || name == "config") throw InputError("unknown config key '" + raw + "' for command '" + command + "'");
      merged[name] = normalize(*spec, value);
    }
  }
  for (const auto& [name, value] : flags.items()) merged[name] = normalize(*find_key(keys, name), value);
  return merged;
}

template <class T>
T opt(const Json& c, const char* key, T fallback) {
  return c.contains(key) ? c.at(key).get<T>() : fallback;
}

std::string require_text(const Json& c, const char* key, std::string_view command) {
  if (!c.contains(key)) throw InputError(std::string(command) + " needs --" + flag_name(key));
  return c.at(key).get<std::string>();
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::input:
    case ErrorKind::domain:
    case ErrorKind::resolution: return kInputError;
    case ErrorKind::numeric: return kNumericError;
    case ErrorKind::consistency: return kConsistencyError;
  }
  return kInternal;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Outputs {
  std::vector<std::string> files;
};

void emit_json(const Json& doc, const Json& c, std::ostream& out, Outputs& outputs) {
  const std::string text = doc.dump(2) + "\n";
  if (c.contains("out")) {
    const std::string path = c.at("out").get<std::string>();
    write_text_file(path, text);
    outputs.files.push_back(path);
  } else {
    out << text;
  }
}

void emit_csv(const Json& c, Outputs& outputs, const std::function<void(std::ostream&)>& writer) {
  if (!c.contains("csv")) return;
  const std::string path = c.at("csv").get<std::string>();
  std::ostringstream os;
  writer(os);
  write_text_file(path, os.str());
  outputs.files.push_back(path);
}

FinderOptions finder_options(const Json& c, int threads) {
  FinderOptions o;
  o.N = opt<int>(c, "n", 0);
  if (c.contains("length_bound")) o.length_bound = c.at("length_bound").get<double>();
  o.max_iters = opt<int>(c, "max_iters", o.max_iters);
  o.grad_tol = opt<double>(c, "grad_tol", o.grad_tol);
  o.family_size = opt<int>(c, "family_size", o.family_size);
  const long long seed = opt<long long>(c, "seed", 0);
  if (seed < 0) throw InputError("seed must be nonnegative");
  o.seed = static_cast<std::uint64_t>(seed);
  o.threads = threads;
  o.validate();
  return o;
}

/// Length of the straight chart loop in class `cls` from `base`, by dense sampling.
double class_loop_length(const Manifold& m, const std::vector<int>& cls, const Point& base) {
  constexpr int kSamples = 512;
  Vec span(m.ambient_dim());
  for (int i = 0; i < m.ambient_dim(); ++i) span[i] = cls[static_cast<size_t>(i)] * m.periods()[i];
  double total = 0;
  for (int k = 0; k < kSamples; ++k) {
    const Point mid = base + span * ((k + 0.5) / kSamples);
    total += m.norm(mid, span / kSamples);
  }
  return total;
}

Polygon find_seed(const Manifold& m, const Json& c, const FinderOptions& o) {
  const int fallback_closed = std::max(32, vertices_for_length(2 * std::numbers::pi * (m.semi_axes().size() ? m.semi_axes().maxCoeff() : 1.0), m.delta()));
  int chosen = 0;
  std::optional<Polygon> seed;
  if (c.contains("seed_polygon")) {
    ++chosen;
    seed = geodesic_from_json(read_json_file(c.at("seed_polygon").get<std::string>())).polygon;
    if (!(seed->manifold() == m)) throw InputError("seed polygon lives on a different manifold");
  }
  if (c.contains("class")) {
    ++chosen;
    const auto cls = c.at("class").get<std::vector<int>>();
    std::optional<Point> base;
    if (c.contains("base")) {
      const auto b = c.at("base").get<std::vector<double>>();
      base = Point(Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size())));
    }
    if (m.backend() != Backend::periodic_chart) throw InputError("--class needs a torus");
    if (static_cast<int>(cls.size()) != m.ambient_dim()) throw InputError("--class has the wrong number of components");
    const Point origin = base ? *base : Point(Vec::Zero(m.ambient_dim()));
    const int n = resolve_vertices(m, o, std::max(8, vertices_for_length(1.25 * class_loop_length(m, cls, origin), m.delta())));
    seed = class_loop(m, cls, n, base);
  }
  if (c.contains("plane")) {
    ++chosen;
    const auto plane = c.at("plane").get<std::vector<int>>();
    if (plane.size() != 2) throw InputError("--plane takes two axis indices");
    seed = principal_ellipse_polygon(m, plane[0], plane[1], resolve_vertices(m, o, fallback_closed));
  }
  if (c.contains("colatitude")) {
    ++chosen;
    seed = latitude_polygon(m, resolve_vertices(m, o, fallback_closed), c.at("colatitude").get<double>());
  }
  if (chosen == 0) throw InputError("find needs a seed: --class, --plane, --colatitude or --seed-polygon");
  if (chosen > 1) throw InputError("give exactly one of --class, --plane, --colatitude, --seed-polygon");
  const double amplitude = opt<double>(c, "perturb", 0.0);
  if (amplitude < 0) throw InputError("--perturb must be nonnegative");
  if (amplitude > 0) seed = perturb(*seed, amplitude, o.seed);
  return *seed;
}

void cmd_find(const Json& c, int threads, std::ostream& out, Outputs& outputs) {
  const auto kind = parse_manifold_kind(require_text(c, "manifold", "find"));
  if (!c.contains("params")) throw InputError("find needs --params");
  std::optional<double> delta;
  if (c.contains("delta")) delta = c.at("delta").get<double>();
  const Manifold m = Manifold::create(kind, c.at("params").get<std::vector<double>>(), delta);
  const FinderOptions o = finder_options(c, threads);
  const std::string fallback = m.backend() == Backend::periodic_chart ? "minimize" : "sweepout";
  const Method method = parse_method(opt<std::string>(c, "method", fallback));
  ClosedGeodesic g = [&] {
    switch (method) {
      case Method::sweepout: return sweepout_minimax(m, o);
      case Method::minimize: return minimize_in_class(m, find_seed(m, c, o), o);
      case Method::newton: return refine_newton(find_seed(m, c, o), o);
      case Method::manual: break;
    }
    throw InputError("find supports minimize, sweepout and newton");
  }();
  emit_json(to_json(g, o.grad_tol), c, out, outputs);
  emit_csv(c, outputs, [&](std::ostream& os) { write_trace_csv(os, g.trace); });
}

ClosedGeodesic load_converged(const Json& c, std::string_view command) {
  ClosedGeodesic g = geodesic_from_json(read_json_file(require_text(c, "input", command)));
  if (!g.converged) throw InputError("input polygon is not a converged closed geodesic");
  return g;
}

void cmd_spectrum(const Json& c, int threads, std::ostream& out, Outputs& outputs) {
  const ClosedGeodesic g = load_converged(c, "spectrum");
  const SpectralData s = analyze(g, opt<int>(c, "grid", 64), opt<std::vector<int>>(c, "iterates", {}), threads);
  emit_json(to_json(s), c, out, outputs);
  emit_csv(c, outputs, [&](std::ostream& os) { write_bott_csv(os, s.bott_samples); });
}

void cmd_iterates(const Json& c, int threads, std::ostream& out, Outputs& outputs) {
  const ClosedGeodesic g = load_converged(c, "iterates");
  const int n_max = opt<int>(c, "n_max", 4);
  if (n_max < 1) throw InputError("--n-max must be >= 1");
  const IterateMode mode = parse_iterate_mode(opt<std::string>(c, "mode", "both"));
  std::optional<BottAnalysis> analysis;
  if (mode != IterateMode::direct) analysis.emplace(g, threads);
  std::vector<IteratedIndex> rows;
  for (int n = 1; n <= n_max; ++n) {
    rows.push_back(analysis ? iterated_index(g, *analysis, n, mode, threads) : iterated_index(g, n, mode, threads));
  }
  Json doc{{"schema", "closedgeo.iterates"}, {"version", kSchemaVersion}, {"mode", opt<std::string>(c, "mode", "both")}};
  Json table = Json::array();
  bool all = true;
  for (const auto& r : rows) {
    table.push_back(to_json(r));
    all = all && r.agree;
  }
  doc["rows"] = std::move(table);
  doc["all_agree"] = all;
  emit_json(doc, c, out, outputs);
  emit_csv(c, outputs, [&](std::ostream& os) { write_iterates_csv(os, rows); });
}

void cmd_series(const Json& c, std::ostream& out, Outputs& outputs) {
  const SeriesSpace space = parse_series_space(require_text(c, "space", "series"));
  if (!c.contains("n")) throw InputError("series needs --n");
  if (!c.contains("degree")) throw InputError("series needs --degree");
  const auto branch = parse_series_branch(opt<std::string>(c, "branch", "auto"));
  emit_json(to_json(poincare_series(space, c.at("n").get<int>(), c.at("degree").get<int>(), branch)), c, out, outputs);
}

void cmd_types(const Json& c, std::ostream& out, Outputs& outputs) {
  TypeNumberQuery q;
  if (!c.contains("s")) throw InputError("types needs --s");
  q.s = c.at("s").get<int>();
  const std::string p = opt<std::string>(c, "p", "rational");
  if (p != "rational" && p != "Q") q.p = static_cast<int>(parse_int(p, "p"));
  if (c.contains("index")) {
    for (const auto& [d, i] : c.at("index").items()) q.index[std::stoi(d)] = i.get<int>();
  }
  emit_json(to_json(type_numbers(q), q.s), c, out, outputs);
}

void cmd_check_morse(const Json& c, std::ostream& out, Outputs& outputs) {
  const std::string path = require_text(c, "input", "check-morse");
  std::ifstream f(path);
  if (!f) throw InputError("cannot open '" + path + "'");
  MorseCheckInput in = read_morse_csv(f);
  if (c.contains("stable_from")) in.stable_from = c.at("stable_from").get<int>();
  emit_json(to_json(morse_check(in)), c, out, outputs);
}

Json error_json(const std::exception& e, int code) {
  Json err{{"kind", "internal"}, {"message", e.what()}, {"exit_code", code}};
  if (const auto* ce = dynamic_cast<const Error*>(&e)) err["kind"] = to_string(ce->kind());
  if (const auto* re = dynamic_cast<const ResolutionError*>(&e)) err["min_vertices"] = re->min_vertices();
  if (const auto* ce = dynamic_cast<const ConsistencyError*>(&e)) {
    try {
      err["details"] = Json::parse(ce->details());
    } catch (const nlohmann::json::exception&) {
      err["details"] = ce->details();
    }
  }
  return Json{{"error", err}};
}

void write_manifest(const std::string& path, const std::string& command, const Json& config, int threads,
                    const std::string& started, double seconds, int code, const Json& error, const Outputs& outputs) {
  Json m{{"schema", "closedgeo.manifest"}, {"version", kSchemaVersion}};
  m["tool"] = "cgeo";
  m["tool_version"] = CLOSEDGEO_VERSION;
  m["eigen_version"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                       std::to_string(EIGEN_MINOR_VERSION);
  m["json_version"] = std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." + std::to_string(NLOHMANN_JSON_VERSION_MINOR) +
                      "." + std::to_string(NLOHMANN_JSON_VERSION_PATCH);
  m["command"] = command;
  m["config"] = config;
  m["seed"] = config.contains("seed") ? config.at("seed") : Json(0);
  m["threads"] = threads;
  m["started_at"] = started;
  m["wall_time_s"] = seconds;
  m["exit_code"] = code;
  m["outputs"] = outputs.files;
  if (!error.is_null()) m["error"] = error.at("error");
  write_text_file(path, m.dump(2) + "\n");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Closed geodesics on model manifolds: finding, spectra, iterates and Morse data", "cgeo"};
  app.set_version_flag("--version", std::string("cgeo ") + CLOSEDGEO_VERSION);
  app.require_subcommand(1, 1);

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, keys] : kCommands) {
    CLI::App* sub = app.add_subcommand(name, "");
    subs[name] = sub;
    auto& store = values[name];
    auto add = [&](const KeySpec& k) { sub->add_option("--" + flag_name(k.name), store[k.name], k.help); };
    for (const auto& k : kCommon) add(k);
    for (const auto& k : keys) add(k);
  }
  subs["find"]->description("Locate a closed geodesic");
  subs["spectrum"]->description("Index, nullity, Poincare map and Bott functions of a geodesic");
  subs["iterates"]->description("Index and nullity of the iterates g^n");
  subs["series"]->description("Poincare series of sphere loop spaces");
  subs["types"]->description("Type numbers of an iterated geodesic");
  subs["check-morse"]->description("Verify the Morse inequalities");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    const Json j = error_json(InputError(e.what()), kInputError);
    err << j.dump() << "\n";
    return kInputError;
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  Json config = Json::object();
  Json error;
  Outputs outputs;
  int code = kOk;
  int threads = default_threads();
  std::string manifest = "cgeo-manifest.json";
  try {
    const auto& keys = kCommands.at(command);
    Json flags = Json::object();
    for (const auto& [name, value] : values[command]) {
      if (subs[command]->count("--" + flag_name(name)) > 0) flags[name] = value;
    }
    Json file;
    if (flags.contains("config")) {
      file = read_json_file(flags["config"].get<std::string>());
      flags.erase("config");
    }
    config = merge_config(command, keys, file, flags);
    if (config.contains("out")) manifest = config.at("out").get<std::string>() + ".manifest.json";
    if (config.contains("manifest")) manifest = config.at("manifest").get<std::string>();
    if (config.contains("threads")) threads = config.at("threads").get<int>();
    if (threads < 1) throw InputError("--threads must be >= 1");

    if (command == "find") cmd_find(config, threads, out, outputs);
    else if (command == "spectrum") cmd_spectrum(config, threads, out, outputs);
    else if (command == "iterates") cmd_iterates(config, threads, out, outputs);
    else if (command == "series") cmd_series(config, out, outputs);
    else if (command == "types") cmd_types(config, out, outputs);
    else if (command == "check-morse") cmd_check_morse(config, out, outputs);
  } catch (const Error& e) {
    code = exit_code(e.kind());
    error = error_json(e, code);
  } catch (const std::exception& e) {
    code = kInternal;
    error = error_json(e, code);
  }
  if (!error.is_null()) err << error.dump() << "\n";
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  try {
    write_manifest(manifest, command, config, threads, started_at, seconds, code, error, outputs);
  } catch (const std::exception& e) {
    err << error_json(e, kInternal).dump() << "\n";
    if (code == kOk) code = kInternal;
  }
  return code;
}

}  // namespace closedgeo::cli
