#include "l2m/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace l2m::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!allowed.count(key)) throw ConfigError("unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

std::string path(const std::string& where, const std::string& key) { return where.empty() ? key : where + "." + key; }

template <class T>
T get(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("key '" + path(where, key) + "' has the wrong type");
  }
}

int get_int(const json& j, const std::string& key, int lo, const std::string& where = {}) {
  if (!j.at(key).is_number_integer()) throw ConfigError("key '" + path(where, key) + "' must be an integer");
  const int v = j.at(key).get<int>();
  if (v < lo) throw ConfigError("key '" + path(where, key) + "' must be >= " + std::to_string(lo));
  return v;
}

double get_double(const json& j, const std::string& key, const std::string& where = {}) {
  if (!j.at(key).is_number()) throw ConfigError("key '" + path(where, key) + "' must be a number");
  return j.at(key).get<double>();
}

DomainConfig parse_domain(const json& j, const std::string& where, int dims_required = 0) {
  check_keys(j, {"radii", "resolution", "centers"}, where);
  DomainConfig d;
  if (j.contains("radii")) d.radii = get<std::vector<double>>(j, "radii", where);
  if (d.radii.empty() || d.radii.size() > 2) throw ConfigError("key '" + where + ".radii' must list 1 or 2 radii");
  for (std::size_t k = 0; k < d.radii.size(); ++k)
    if (!(d.radii[k] > 0.0))
      throw ConfigError("key '" + where + ".radii[" + std::to_string(k) + "]' must be positive");
  if (j.contains("resolution")) {
    d.resolution = get<std::vector<int>>(j, "resolution", where);
  } else {
    d.resolution.clear();
    for (std::size_t k = 0; k < d.radii.size(); ++k) {
      d.resolution.push_back(d.radii.size() == 1 ? Defaults::n_radial : 16);
      d.resolution.push_back(d.radii.size() == 1 ? Defaults::n_angular : 16);
    }
  }
  if (d.resolution.size() != 2 * d.radii.size())
    throw ConfigError("key '" + where + ".resolution' needs (n_radial, n_angular) per radius");
  for (std::size_t k = 0; k < d.resolution.size(); ++k)
    if (d.resolution[k] < 8)
      throw ConfigError("key '" + where + ".resolution[" + std::to_string(k) + "]' must be >= 8");
  if (j.contains("centers")) {
    for (std::size_t k = 0; k < j.at("centers").size(); ++k)
      d.centers.push_back(complex_from_json(j.at("centers").at(k), where + ".centers[" + std::to_string(k) + "]"));
    if (d.centers.size() != d.radii.size()) throw ConfigError("key '" + where + ".centers' needs one center per radius");
  }
  if (dims_required && static_cast<int>(d.radii.size()) != dims_required)
    throw ConfigError("key '" + where + ".radii' must list " + std::to_string(dims_required) + " radius/radii");
  return d;
}

json parse_weight(const json& j, int dims, const std::string& where) {
  try {
    const Weight w = Weight::from_json(j);
    if (w.dims() != dims) throw ConfigError("key '" + where + "' must be a " + std::to_string(dims) + "-variable weight");
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("key '" + where + "': " + e.what());
  }
  return j;
}

std::vector<cplx> parse_points(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("key '" + where + "' must be a nonempty list of points");
  std::vector<cplx> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(complex_from_json(j[k], where + "[" + std::to_string(k) + "]"));
  return out;
}

std::vector<Point> parse_points(const json& j, int dims, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("key '" + where + "' must be a nonempty list of points");
  std::vector<Point> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string at = where + "[" + std::to_string(k) + "]";
    if (dims == 1) {
      out.push_back(Point{complex_from_json(j[k], at), cplx{}});
    } else {
      if (!j[k].is_array() || j[k].size() != 2) throw ConfigError("key '" + at + "' must be a [z1, z2] pair");
      out.push_back(Point{complex_from_json(j[k][0], at + "[0]"), complex_from_json(j[k][1], at + "[1]")});
    }
  }
  return out;
}

json zero_weight(int dims) { return Weight::zero(dims).to_json(); }

}  // namespace

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::kernel: return "kernel";
    case Kind::family: return "family";
    case Kind::extend: return "extend";
    case Kind::shm_suite: return "shm-suite";
    case Kind::envelope: return "envelope";
  }
  return "?";
}

Kind kind_from_name(const std::string& s) {
  for (Kind k : {Kind::kernel, Kind::family, Kind::extend, Kind::shm_suite, Kind::envelope})
    if (kind_name(k) == s) return k;
  throw ConfigError("key 'kind': unknown experiment kind '" + s + "'");
}

const std::map<std::string, double>& default_tolerances(Kind k) {
  static const std::map<Kind, std::map<std::string, double>> table = {
      {Kind::kernel, {{"extremal", 1e-8}, {"m1_cross_check", 1e-6}, {"expect_rel", 1e-6}}},
      {Kind::family,
       {{"psh", 1e-4}, {"psh_optimizer", 1e-3}, {"ns_psh", 1e-4}, {"uniform_ratio", 2.0}}},
      {Kind::extend, {{"holder", 1e-8}, {"l2m_bound", 1e-3}, {"expect_ratio", 1e-8}, {"ot_bound", 1e-8}}},
      {Kind::shm_suite, {{"griffiths", 1e-5}, {"det_psh", 1e-5}, {"degenerate_floor", 1e-2}}},
      {Kind::envelope, {{"psh", 1e-6}, {"dominance", 1e-9}}},
  };
  return table.at(k);
}

GridDomain DomainConfig::build() const { return make_polydisc_grid(radii, resolution, centers); }

json DomainConfig::to_json() const {
  json c = json::array();
  for (cplx z : centers) c.push_back(complex_to_json(z));
  json j{{"radii", radii}, {"resolution", resolution}};
  if (!centers.empty()) j["centers"] = c;
  return j;
}

cplx complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return cplx{j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return cplx{j[0].get<double>(), j[1].get<double>()};
  throw ConfigError("key '" + where + "' must be a number or a [re, im] pair");
}

json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

ExperimentConfig parse_config(const json& j, std::optional<Kind> expected) {
  if (!j.is_object()) throw ConfigError("configuration must be a JSON object");
  ExperimentConfig c;
  if (j.contains("kind")) {
    if (!j["kind"].is_string()) throw ConfigError("key 'kind' must be a string");
    c.kind = kind_from_name(j["kind"].get<std::string>());
    if (expected && *expected != c.kind)
      throw ConfigError("key 'kind': config is '" + kind_name(c.kind) + "' but the subcommand is '" +
                        kind_name(*expected) + "'");
  } else if (expected) {
    c.kind = *expected;
  } else {
    throw ConfigError("missing key 'kind'");
  }

  std::set<std::string> allowed{"kind", "name", "seed", "tolerances"};
  switch (c.kind) {
    case Kind::kernel:
      allowed.insert({"domain", "weight", "degree", "m", "restarts", "points", "expect_values"});
      break;
    case Kind::family:
      allowed.insert({"base", "fiber", "weight", "degree", "m", "restarts", "x_report", "bound_points", "step",
                      "base_stride", "fiber_stride", "checks", "probes"});
      break;
    case Kind::extend:
      allowed.insert({"domain", "datum", "weight", "degree", "m", "iters", "expect_ratio"});
      break;
    case Kind::shm_suite:
      allowed.insert({"domain", "metric", "matrix", "eigen_C"});
      break;
    case Kind::envelope:
      allowed.insert({"domain", "entries"});
      break;
  }
  check_keys(j, allowed, "");

  c.name = j.contains("name") ? get<std::string>(j, "name", "") : kind_name(c.kind);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("key 'seed' must be a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.tolerances = default_tolerances(c.kind);
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) throw ConfigError("key 'tolerances' must be an object");
    for (const auto& [key, value] : t.items()) {
      if (!c.tolerances.count(key)) throw ConfigError("unknown key 'tolerances." + key + "'");
      if (!value.is_number() || !(value.get<double>() >= 0.0))
        throw ConfigError("key 'tolerances." + key + "' must be a non-negative number");
      c.tolerances[key] = value.get<double>();
    }
  }

  const bool has_domain = allowed.count("domain") > 0;
  if (has_domain) c.domain = j.contains("domain") ? parse_domain(j["domain"], "domain") : DomainConfig{};
  const int dims = static_cast<int>(c.domain.radii.size());
  if (j.contains("degree")) c.degree = get_int(j, "degree", 0);
  if (j.contains("restarts")) c.restarts = get_int(j, "restarts", 1);

  switch (c.kind) {
    case Kind::kernel:
      if (j.contains("m")) c.m = get_int(j, "m", 1);
      c.weight = j.contains("weight") ? parse_weight(j["weight"], dims, "weight") : zero_weight(dims);
      if (dims == 2) c.points = {Point{}};
      if (j.contains("points")) c.points = parse_points(j["points"], dims, "points");
      if (j.contains("expect_values")) {
        c.expect_values = get<std::vector<double>>(j, "expect_values", "");
        if (c.expect_values.size() != c.points.size())
          throw ConfigError("key 'expect_values' needs one value per point");
      }
      break;
    case Kind::family:
      if (j.contains("m")) c.m = get_int(j, "m", 1);
      if (j.contains("base")) c.base = parse_domain(j["base"], "base", 1);
      c.domain = j.contains("fiber") ? parse_domain(j["fiber"], "fiber", 1) : DomainConfig{};
      c.weight = j.contains("weight") ? parse_weight(j["weight"], 2, "weight") : zero_weight(2);
      if (j.contains("x_report")) c.x_report = complex_from_json(j["x_report"], "x_report");
      if (j.contains("bound_points")) c.bound_points = parse_points(j["bound_points"], "bound_points");
      if (j.contains("step")) {
        c.step = get_double(j, "step");
        if (!(c.step > 0.0)) throw ConfigError("key 'step' must be positive");
      }
      if (j.contains("base_stride")) c.base_stride = get_int(j, "base_stride", 1);
      if (j.contains("fiber_stride")) c.fiber_stride = get_int(j, "fiber_stride", 1);
      if (j.contains("probes")) c.probes = get_int(j, "probes", 0);
      if (j.contains("checks")) {
        const json& ch = j["checks"];
        check_keys(ch, {"psh_variation", "uniform_bound", "ns_gram"}, "checks");
        if (ch.contains("psh_variation")) c.check_psh = get<bool>(ch, "psh_variation", "checks");
        if (ch.contains("uniform_bound")) c.check_uniform = get<bool>(ch, "uniform_bound", "checks");
        if (ch.contains("ns_gram")) c.check_ns_gram = get<bool>(ch, "ns_gram", "checks");
      }
      break;
    case Kind::extend:
      if (j.contains("m")) {
        c.m_real = get_double(j, "m");
        if (!(c.m_real >= 1.0)) throw ConfigError("key 'm' must be >= 1");
      }
      c.weight = j.contains("weight") ? parse_weight(j["weight"], dims, "weight") : zero_weight(dims);
      if (j.contains("datum")) {
        const json& d = j["datum"];
        if (!d.is_array() || d.empty()) throw ConfigError("key 'datum' must be a nonempty coefficient list");
        c.datum.clear();
        for (std::size_t k = 0; k < d.size(); ++k) c.datum.push_back(complex_from_json(d[k], "datum[" + std::to_string(k) + "]"));
      }
      if (dims == 1 && c.datum.size() > 1) throw ConfigError("key 'datum': one-variable problems take a constant datum");
      if (j.contains("iters")) c.iters = get_int(j, "iters", 1);
      if (j.contains("expect_ratio")) c.expect_ratio = get_double(j, "expect_ratio");
      break;
    case Kind::shm_suite:
      if (dims != 1) throw ConfigError("key 'domain.radii': shm-suite runs on one-variable domains");
      if (j.contains("metric")) c.metric = get<std::string>(j, "metric", "");
      if (c.metric != "det_z4" && c.metric != "constant")
        throw ConfigError("key 'metric' must be \"det_z4\" or \"constant\"");
      if (c.metric == "constant") {
        if (!j.contains("matrix")) throw ConfigError("key 'matrix' is required for metric \"constant\"");
        c.constant_metric = j["matrix"];
      } else if (j.contains("matrix")) {
        throw ConfigError("key 'matrix' only applies to metric \"constant\"");
      }
      if (j.contains("eigen_C")) {
        c.eigen_C = get_double(j, "eigen_C");
        if (!(*c.eigen_C > 0.0)) throw ConfigError("key 'eigen_C' must be positive");
      }
      break;
    case Kind::envelope: {
      if (!j.contains("entries") || !j["entries"].is_array() || j["entries"].empty())
        throw ConfigError("key 'entries' must be a nonempty list");
      for (std::size_t k = 0; k < j["entries"].size(); ++k) {
        const json& e = j["entries"][k];
        const std::string where = "entries[" + std::to_string(k) + "]";
        check_keys(e, {"k", "weight"}, where);
        if (!e.contains("k") || !e.contains("weight")) throw ConfigError("key '" + where + "' needs 'k' and 'weight'");
        c.entries.emplace_back(get_int(e, "k", 1, where), parse_weight(e["weight"], dims, where + ".weight"));
      }
      break;
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& file, std::optional<Kind> expected) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config file '" + file + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
  return parse_config(j, expected);
}

void apply_tolerance_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("--tol-override expects KEY=VAL, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  if (!cfg.tolerances.count(key))
    throw ConfigError("--tol-override: unknown tolerance '" + key + "' for kind " + kind_name(cfg.kind));
  double v = 0.0;
  try {
    std::size_t used = 0;
    v = std::stod(assignment.substr(eq + 1), &used);
    if (used != assignment.size() - eq - 1) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw ConfigError("--tol-override: value for '" + key + "' is not a number");
  }
  if (!(v >= 0.0)) throw ConfigError("--tol-override: value for '" + key + "' must be non-negative");
  cfg.tolerances[key] = v;
}

json ExperimentConfig::to_json() const {
  json j{{"kind", kind_name(kind)}, {"name", name}, {"seed", seed}, {"tolerances", tolerances}};
  auto pts = [](const std::vector<cplx>& v) {
    json a = json::array();
    for (cplx z : v) a.push_back(complex_to_json(z));
    return a;
  };
  switch (kind) {
    case Kind::kernel:
      j.update({{"domain", domain.to_json()}, {"weight", weight}, {"degree", degree}, {"m", m},
                {"restarts", restarts}});
      {
        json a = json::array();
        for (const Point& p : points)
          a.push_back(domain.radii.size() == 1 ? complex_to_json(p[0])
                                               : json::array({complex_to_json(p[0]), complex_to_json(p[1])}));
        j["points"] = a;
      }
      if (!expect_values.empty()) j["expect_values"] = expect_values;
      break;
    case Kind::family:
      j.update({{"base", base.to_json()}, {"fiber", domain.to_json()}, {"weight", weight}, {"degree", degree},
                {"m", m}, {"restarts", restarts}, {"x_report", complex_to_json(x_report)},
                {"bound_points", pts(bound_points)}, {"step", step}, {"base_stride", base_stride},
                {"fiber_stride", fiber_stride}, {"probes", probes},
                {"checks", {{"psh_variation", check_psh}, {"uniform_bound", check_uniform}, {"ns_gram", check_ns_gram}}}});
      break;
    case Kind::extend:
      j.update({{"domain", domain.to_json()}, {"weight", weight}, {"degree", degree}, {"m", m_real},
                {"iters", iters}, {"datum", pts(datum)}});
      if (expect_ratio) j["expect_ratio"] = *expect_ratio;
      break;
    case Kind::shm_suite:
      j.update({{"domain", domain.to_json()}, {"metric", metric}});
      if (metric == "constant") j["matrix"] = constant_metric;
      if (eigen_C) j["eigen_C"] = *eigen_C;
      break;
    case Kind::envelope: {
      json e = json::array();
      for (const auto& [k, w] : entries) e.push_back({{"k", k}, {"weight", w}});
      j.update({{"domain", domain.to_json()}, {"entries", e}});
      break;
    }
  }
  return j;
}

}  // namespace l2m::cli
