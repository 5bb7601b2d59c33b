#include "l2m/cli/runner.hpp"

#include <omp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "l2m/bergman.hpp"
#include "l2m/extend.hpp"
#include "l2m/family.hpp"
#include "l2m/field_io.hpp"
#include "l2m/levi.hpp"
#include "l2m/mollify.hpp"
#include "l2m/sections.hpp"
#include "l2m/shm.hpp"

namespace l2m::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json check_to_json(const Check& c) {
  json j{{"name", c.name}, {"pass", c.pass}, {"value", finite_or_null(c.value)},
         {"threshold", finite_or_null(c.threshold)}};
  if (!c.detail.empty()) j["detail"] = c.detail;
  return j;
}

json point_json(const Point& p, int dims) {
  return dims == 1 ? complex_to_json(p[0]) : json::array({complex_to_json(p[0]), complex_to_json(p[1])});
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Collects artifacts written to the output directory (paths relative to it).
class Artifacts {
 public:
  explicit Artifacts(std::string dir, std::string prefix) : dir_(std::move(dir)), prefix_(std::move(prefix)) {}
  bool enabled() const { return !dir_.empty(); }
  template <class Writer>
  void write(const std::string& suffix, Writer&& writer) {
    if (!enabled()) return;
    const std::string file = prefix_ + "." + suffix;
    std::ofstream os(fs::path(dir_) / file, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write artifact '" + (fs::path(dir_) / file).string() + "'");
    writer(os);
    if (!os) throw std::runtime_error("error writing artifact '" + file + "'");
    files_.push_back(file);
  }
  const std::vector<std::string>& files() const { return files_; }

 private:
  std::string dir_, prefix_;
  std::vector<std::string> files_;
};

struct Outcome {
  std::vector<Check> checks;
  json results = json::object();
};

OptimizerOptions optimizer_options(const ExperimentConfig& cfg) {
  OptimizerOptions o;
  o.restarts = cfg.restarts;
  o.seed = cfg.seed;
  return o;
}

// ---- kernel -----------------------------------------------------------------------

Outcome run_kernel(const ExperimentConfig& cfg, Artifacts& art) {
  const GridDomain grid = cfg.domain.build();
  const Weight w = Weight::from_json(cfg.weight);
  const SectionSpace space = make_poly_space(grid, cfg.degree, cfg.m);
  for (std::size_t k = 0; k < cfg.points.size(); ++k)
    if (!grid.contains(cfg.points[k]))
      throw ConfigError("key 'points[" + std::to_string(k) + "]' lies outside the domain");

  Outcome out;
  std::vector<double> B;
  json pts = json::array();
  for (const Point& x : cfg.points) {
    const BergmanResult r = bergman_kernel(space, w, cfg.m, x, cfg.restarts, cfg.seed);
    B.push_back(r.value);
    pts.push_back({{"x", point_json(x, grid.dims())}, {"value", r.value}, {"gap", r.gap}, {"zero", r.zero}});
  }
  out.results["points"] = pts;
  out.results["space_dimension"] = space.dimension();

  // Random probe sections must never beat the kernel.
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Section> probes;
  for (int p = 0; p < Defaults::probes; ++p) {
    Eigen::VectorXcd c(static_cast<Eigen::Index>(space.dimension()));
    for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = cplx{nd(rng), nd(rng)};
    probes.push_back(Section(space, c));
  }
  const double tol_ext = cfg.tolerances.at("extremal");
  const ExtremalReport ext = extremal_bound_check(space, w, cfg.m, probes, cfg.points, B);
  out.checks.push_back({"extremal",
                        ext.worst_ratio <= 1.0 + tol_ext,
                        ext.worst_ratio,
                        1.0 + tol_ext,
                        {{"worst_probe", ext.worst_probe}, {"worst_point", ext.worst_point}}});

  if (cfg.m == 1) {
    const double tol = cfg.tolerances.at("m1_cross_check");
    double worst = 0.0;
    std::size_t worst_k = 0;
    for (std::size_t k = 0; k < cfg.points.size(); ++k) {
      const BergmanResult r = bergman_optimize(space, w, 1, cfg.points[k], cfg.restarts, cfg.seed);
      const double err = B[k] > 0.0 ? std::abs(r.value - B[k]) / B[k] : std::abs(r.value);
      if (err > worst) worst = err, worst_k = k;
    }
    out.checks.push_back({"m1_cross_check", worst <= tol, worst, tol, {{"worst_point", worst_k}}});
    const std::vector<double> field = kernel_field(space, w, 1);
    art.write("kernel_field.csv", [&](std::ostream& os) { io::write_scalar_field(os, grid, field); });
  }

  if (!cfg.expect_values.empty()) {
    const double tol = cfg.tolerances.at("expect_rel");
    for (std::size_t k = 0; k < B.size(); ++k) {
      const double e = cfg.expect_values[k];
      const double err = std::abs(B[k] - e) / std::max(std::abs(e), 1e-300);
      out.checks.push_back({"expect_value_" + std::to_string(k), err <= tol, err, tol,
                            {{"expected", e}, {"computed", B[k]}}});
    }
  }
  art.write("points.csv", [&](std::ostream& os) {
    os << "x_re,x_im,value\n";
    for (std::size_t k = 0; k < B.size(); ++k)
      os << io::fmt(cfg.points[k][0].real()) << ',' << io::fmt(cfg.points[k][0].imag()) << ',' << io::fmt(B[k])
         << '\n';
  });
  return out;
}

// ---- family -----------------------------------------------------------------------

Outcome run_family(const ExperimentConfig& cfg, Artifacts& art) {
  const GridDomain base = cfg.base.build();
  const GridDomain fiber_grid = cfg.domain.build();
  const SectionSpace fiber = make_poly_space(fiber_grid, cfg.degree, cfg.m);
  const Family fam = make_family(base, fiber, Weight::from_json(cfg.weight), cfg.m, cfg.name);
  try {
    require_family_psh(fam);
  } catch (const PreconditionError& e) {
    throw ConfigError(std::string("key 'weight': ") + e.what());
  }
  if (!fiber_grid.contains(Point{cfg.x_report, cplx{}})) throw ConfigError("key 'x_report' lies outside the fiber");

  const OptimizerOptions opt = optimizer_options(cfg);
  Outcome out;
  out.results["space_dimension"] = fiber.dimension();

  if (cfg.check_psh) {
    VariationOptions vo;
    vo.tol = cfg.m == 1 ? cfg.tolerances.at("psh") : cfg.tolerances.at("psh_optimizer");
    vo.step = cfg.step;
    const int bs = cfg.base_stride ? cfg.base_stride : (cfg.m == 1 ? Defaults::base_stride : Defaults::base_stride_optimizer);
    const int fs = cfg.fiber_stride ? cfg.fiber_stride
                                    : (cfg.m == 1 ? Defaults::fiber_stride : Defaults::fiber_stride_optimizer);
    vo.base_radial_stride = vo.base_angular_stride = bs;
    vo.fiber_radial_stride = vo.fiber_angular_stride = fs;
    vo.x_report = cfg.x_report;
    vo.optimizer = opt;
    vo.center_restarts = Defaults::center_restarts;
    const VariationReport r = psh_variation_check(fam, vo);
    out.checks.push_back({"psh_variation",
                          r.pass(),
                          std::min(r.worst_value, r.worst_t_value),
                          -vo.tol,
                          {{"joint_min_levi", r.worst_value},
                           {"worst_t", complex_to_json(r.worst_t)},
                           {"worst_x", complex_to_json(r.worst_x)},
                           {"t_min_laplacian", r.worst_t_value},
                           {"checked", r.checked},
                           {"skipped", r.skipped},
                           {"base_stride", bs},
                           {"fiber_stride", fs}}});
    json rows = json::array();
    for (const VariationRow& row : r.rows)
      rows.push_back({complex_to_json(row.t), finite_or_null(row.logB), finite_or_null(row.levi_min)});
    out.results["rows_columns"] = {"t", "logB", "levi_min"};
    out.results["rows"] = rows;
    art.write("variation.csv", [&](std::ostream& os) {
      os << "t_re,t_im,logB,levi_min\n";
      for (const VariationRow& row : r.rows)
        os << io::fmt(row.t.real()) << ',' << io::fmt(row.t.imag()) << ',' << io::fmt(row.logB) << ','
           << io::fmt(row.levi_min) << '\n';
    });
  }

  if (cfg.check_uniform) {
    const double tol = cfg.tolerances.at("uniform_ratio");
    const UniformBoundReport u = uniform_bound_check(fam, cfg.bound_points, opt);
    out.checks.push_back({"uniform_bound", u.worst_ratio <= tol, u.worst_ratio, tol, {{"C", u.C}}});
  }

  if (cfg.check_ns_gram) {
    FamilyGramOptions go;
    go.tol = cfg.tolerances.at("ns_psh");
    go.step = cfg.step;
    go.random_probes = cfg.probes;
    go.seed = cfg.seed;
    go.optimizer = opt;
    const FamilyGramReport g = family_ns_gram(fam, go);
    double worst = 0.0;
    std::string worst_name;
    json probes = json::array();
    for (const auto& p : g.probes) {
      if (worst_name.empty() || p.worst_value < worst) worst = p.worst_value, worst_name = p.name;
      probes.push_back({{"name", p.name}, {"psh", p.psh}, {"worst_value", p.worst_value},
                        {"worst_t", complex_to_json(p.worst_t)}});
    }
    const bool pass = g.pass() && g.checked > 0;
    out.checks.push_back({"ns_gram",
                          pass,
                          worst,
                          -go.tol,
                          {{"worst_probe", worst_name}, {"checked", g.checked},
                           {"singular_nodes", g.singular_nodes.size()}, {"probes", probes.size()}}});
    out.results["ns_gram_probes"] = probes;
    art.write("gram_field.csv", [&](std::ostream& os) { write_gram_field_csv(os, base, g.G); });
  }
  art.write("family.json", [&](std::ostream& os) { os << family_descriptor(fam).dump(2) << '\n'; });
  return out;
}

// ---- extend -----------------------------------------------------------------------

Outcome run_extend(const ExperimentConfig& cfg, Artifacts& art) {
  const GridDomain grid = cfg.domain.build();
  const Polynomial f = grid.dims() == 1 ? Polynomial::constant(cfg.datum.at(0)) : Polynomial::univariate(cfg.datum);
  ExtensionProblem p;
  try {
    p = make_extension_problem(grid, f, Weight::from_json(cfg.weight), cfg.degree);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("extension problem: ") + e.what());
  }
  Outcome out;
  const OtSolution s = ot_solve(p);
  const double C0 = kPi;
  const double tol_ot = cfg.tolerances.at("ot_bound");
  out.results["ot"] = {{"energy", s.energy}, {"rhs", s.rhs}, {"ratio", s.ratio}};
  out.checks.push_back({"ot_bound", s.ratio <= C0 * (1.0 + tol_ot), s.ratio, C0 * (1.0 + tol_ot), json::object()});
  if (cfg.expect_ratio) {
    const double tol = cfg.tolerances.at("expect_ratio");
    const double err = std::abs(s.ratio - *cfg.expect_ratio) / std::abs(*cfg.expect_ratio);
    out.checks.push_back({"expect_ratio", err <= tol, err, tol, {{"expected", *cfg.expect_ratio}}});
  }
  if (cfg.m_real > 1.0) {
    const IterationTrace tr = l2m_iterate(p, cfg.m_real, cfg.iters);
    const double tol_h = cfg.tolerances.at("holder");
    double worst = 0.0;
    int worst_k = 0;
    for (const IterationStep& st : tr.steps) {
      if (st.k < 2) continue;
      const double excess = st.holder_rhs > 0.0 ? st.holder_lhs / st.holder_rhs - 1.0 : 0.0;
      if (excess > worst) worst = excess, worst_k = st.k;
    }
    out.checks.push_back({"holder_chain", worst <= tol_h, worst, tol_h, {{"worst_step", worst_k}}});
    const double tol_b = cfg.tolerances.at("l2m_bound");
    const double A_last = tr.steps.back().A;
    const double excess = tr.limit > 0.0 ? A_last / tr.limit - 1.0 : A_last;
    out.checks.push_back({"l2m_bound", excess <= tol_b && tr.monotone, excess, tol_b,
                          {{"A_last", A_last}, {"limit", tr.limit}, {"monotone", tr.monotone}}});
    out.results["trace"] = trace_json(tr);
    art.write("trace.csv", [&](std::ostream& os) { write_trace_csv(os, tr); });
  }
  return out;
}

// ---- shm-suite --------------------------------------------------------------------

HMatrix parse_matrix(const json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("key 'matrix' must be a square array of entries");
  const auto r = static_cast<Eigen::Index>(j.size());
  HMatrix h(r, r);
  for (Eigen::Index a = 0; a < r; ++a) {
    if (!j[a].is_array() || static_cast<Eigen::Index>(j[a].size()) != r)
      throw ConfigError("key 'matrix' must be a square array of entries");
    for (Eigen::Index b = 0; b < r; ++b)
      h(a, b) = complex_from_json(j[a][b], "matrix[" + std::to_string(a) + "][" + std::to_string(b) + "]");
  }
  return h;
}

Outcome run_shm(const ExperimentConfig& cfg, Artifacts& art) {
  const GridDomain grid = cfg.domain.build();
  std::optional<MatrixMetric> h;
  try {
    h = cfg.metric == "det_z4" ? raufi_example(grid) : MatrixMetric::constant(grid, parse_matrix(cfg.constant_metric));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("key 'matrix': ") + e.what());
  }
  Outcome out;
  GriffithsOptions go;
  go.tol = cfg.tolerances.at("griffiths");
  go.degenerate_floor = cfg.tolerances.at("degenerate_floor");
  const GriffithsReport gr = griffiths_negative_test(*h, default_test_sections(h->rank(), cfg.seed), go);
  std::size_t checked = 0;
  for (const auto& r : gr.per_section) checked += r.checked;
  out.checks.push_back({"griffiths_negative", gr.pass && checked > 0, gr.worst_value, -go.tol,
                        {{"worst_section", gr.worst_section}, {"worst_node", gr.worst_node}, {"checked", checked},
                         {"note", gr.note}}});

  const double tol_det = cfg.tolerances.at("det_psh");
  PshOptions po;
  po.tol = tol_det;
  const PshReport dr = det_weight_psh(*h, po);
  out.checks.push_back({"log_det_psh", dr.psh && dr.checked > 0, dr.worst_value, -tol_det,
                        {{"worst_node", dr.worst_node}, {"checked", dr.checked}, {"skipped", dr.skipped}}});

  const EigenBoundsReport eb = eigen_bounds_check(*h, cfg.eigen_C);
  out.checks.push_back({"eigen_bounds", eb.ok(), std::min(eb.worst_max_margin, eb.worst_min_margin), 0.0,
                        {{"C", eb.C}, {"worst_max_node", eb.worst_max_node}, {"worst_min_node", eb.worst_min_node}}});
  out.results["singular_nodes"] = h->singular_nodes().size();
  out.results["rank"] = h->rank();
  art.write("metric.csv", [&](std::ostream& os) { write_metric_csv(os, *h); });
  art.write("metric.json", [&](std::ostream& os) { os << metric_descriptor(*h).dump(2) << '\n'; });
  return out;
}

// ---- envelope ---------------------------------------------------------------------

Outcome run_envelope(const ExperimentConfig& cfg, Artifacts& art) {
  const GridDomain grid = cfg.domain.build();
  std::vector<std::pair<int, Weight>> entries;
  for (const auto& [k, wj] : cfg.entries) entries.emplace_back(k, Weight::from_json(wj));
  PshOptions po;
  po.tol = cfg.tolerances.at("psh");
  const EnvelopeResult env = envelope_metric(entries, grid, po);
  Outcome out;
  out.checks.push_back({"psh", env.psh.psh && env.psh.checked > 0, env.psh.worst_value, -po.tol,
                        {{"worst_node", env.psh.worst_node}, {"checked", env.psh.checked}}});

  const std::vector<double> e = env.weight.sample(grid);
  const double tol = cfg.tolerances.at("dominance");
  double worst = 0.0;
  std::size_t worst_node = 0;
  for (const auto& [k, w] : entries) {
    const std::vector<double> v = w.sample(grid);
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double gap = v[i] / k - e[i];  // envelope must dominate every entry
      if (std::isfinite(gap) && gap > worst) worst = gap, worst_node = i;
    }
  }
  out.checks.push_back({"dominance", worst <= tol * std::max(1.0, std::abs(e[worst_node])), worst, tol,
                        {{"worst_node", worst_node}}});
  art.write("envelope.csv", [&](std::ostream& os) { io::write_scalar_field(os, grid, e); });
  return out;
}

}  // namespace

int RunReport::exit_code() const {
  for (const Check& c : checks)
    if (!c.pass) return kExitCheckFailed;
  return kExitPass;
}

RunReport run(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  if (!out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + out_dir + "': " + ec.message());
  }
  Artifacts art(out_dir, cfg.name);
  Outcome o;
  try {
    switch (cfg.kind) {
      case Kind::kernel: o = run_kernel(cfg, art); break;
      case Kind::family: o = run_family(cfg, art); break;
      case Kind::extend: o = run_extend(cfg, art); break;
      case Kind::shm_suite: o = run_shm(cfg, art); break;
      case Kind::envelope: o = run_envelope(cfg, art); break;
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  } catch (const std::out_of_range& e) {
    throw ConfigError(e.what());
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunReport rep;
  rep.checks = o.checks;
  json checks = json::array();
  for (const Check& c : o.checks) checks.push_back(check_to_json(c));
  rep.report = {{"schema_version", kSchemaVersion},
                {"tool", "l2m-lab"},
                {"version", L2M_VERSION},
                {"kind", kind_name(cfg.kind)},
                {"name", cfg.name},
                {"config", cfg.to_json()},
                {"checks", checks},
                {"pass", rep.exit_code() == kExitPass},
                {"results", o.results},
                {"artifacts", art.files()},
                {"timestamp", {{"started_utc", started}, {"elapsed_s", elapsed}}}};
  if (!out_dir.empty()) {
    rep.report_path = (fs::path(out_dir) / (cfg.name + ".report.json")).string();
    std::ofstream os(rep.report_path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write report '" + rep.report_path + "'");
    os << rep.report.dump(2) << '\n';
  }
  return rep;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for weighted Bergman kernels, L2 extension and metric positivity", "l2m-lab"};
  app.set_version_flag("--version", std::string(L2M_VERSION));
  app.require_subcommand(1);

  std::vector<std::string> configs;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::vector<std::string> overrides;
  auto add_run_flags = [&](CLI::App* sub) {
    sub->add_option("--config", configs, "experiment config file (JSON); repeat to run several")->required();
    sub->add_option("--out", out_dir, "output directory for reports and CSV artifacts");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--jobs", jobs, "worker count (experiments in parallel / OpenMP threads)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--tol-override", overrides, "override a tolerance, KEY=VAL (repeatable)");
  };
  std::vector<std::pair<CLI::App*, Kind>> run_subs;
  for (Kind k : {Kind::kernel, Kind::family, Kind::extend, Kind::shm_suite, Kind::envelope}) {
    const std::string name = kind_name(k);
    const bool vowel = std::string("aeiou").find(name.front()) != std::string::npos;
    CLI::App* sub = app.add_subcommand(name, std::string(vowel ? "run an " : "run a ") + name + " experiment");
    add_run_flags(sub);
    run_subs.emplace_back(sub, k);
  }
  std::vector<std::string> reports;
  std::string csv_out;
  CLI::App* rep = app.add_subcommand("report", "merge report plot data into one CSV");
  rep->add_option("reports", reports, "report JSON files");
  rep->add_option("--out", csv_out, "output CSV file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (rep->parsed()) {
    try {
      const std::string csv = emit_plotdata(reports);
      if (csv_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream os(csv_out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write '" + csv_out + "'");
        os << csv;
      }
      return kExitPass;
    } catch (const std::exception& e) {
      std::cerr << "l2m-lab report: " << e.what() << '\n';
      return kExitUsage;
    }
  }

  Kind kind = Kind::kernel;
  for (const auto& [sub, k] : run_subs)
    if (sub->parsed()) kind = k;

  std::vector<ExperimentConfig> cfgs;
  try {
    for (const std::string& path : configs) {
      ExperimentConfig cfg = load_config(path, kind);
      if (seed) cfg.seed = *seed;
      for (const std::string& o : overrides) apply_tolerance_override(cfg, o);
      cfgs.push_back(std::move(cfg));
    }
  } catch (const std::exception& e) {
    std::cerr << "l2m-lab " << kind_name(kind) << ": " << e.what() << '\n';
    return kExitUsage;
  }

  // Experiments run in a pool of `jobs` workers; a single experiment gets all
  // threads for its OpenMP kernels. Results do not depend on either count.
  const int pool = std::min<int>(jobs, static_cast<int>(cfgs.size()));
  const int inner = std::max(1, jobs / std::max(1, pool));
  std::vector<int> codes(cfgs.size(), kExitPass);
  std::vector<std::string> messages(cfgs.size());
  omp_set_max_active_levels(2);
#pragma omp parallel for num_threads(pool) schedule(dynamic, 1)
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    omp_set_num_threads(inner);
    try {
      const RunReport r = run(cfgs[k], out_dir);
      codes[k] = r.exit_code();
      std::ostringstream msg;
      for (const Check& c : r.checks)
        msg << (c.pass ? "PASS " : "FAIL ") << cfgs[k].name << ' ' << c.name << " value=" << io::fmt(c.value)
            << " threshold=" << io::fmt(c.threshold) << '\n';
      if (!r.report_path.empty()) msg << "report: " << r.report_path << '\n';
      messages[k] = msg.str();
    } catch (const std::exception& e) {
      codes[k] = kExitUsage;
      messages[k] = "l2m-lab " + kind_name(kind) + ": " + cfgs[k].name + ": " + e.what() + '\n';
    }
  }
  int code = kExitPass;
  for (std::size_t k = 0; k < cfgs.size(); ++k) {
    (codes[k] == kExitUsage ? std::cerr : std::cout) << messages[k];
    if (codes[k] == kExitUsage) code = kExitUsage;
    else if (codes[k] == kExitCheckFailed && code == kExitPass) code = kExitCheckFailed;
  }
  return code;
}

}  // namespace l2m::cli
