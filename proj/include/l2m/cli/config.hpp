#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "l2m/grid.hpp"
#include "l2m/polynomial.hpp"
#include "l2m/weight.hpp"

namespace l2m::cli {

/// Malformed or out-of-range configuration; the message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { kernel, family, extend, shm_suite, envelope };

std::string kind_name(Kind k);
Kind kind_from_name(const std::string& s);  // throws ConfigError

// ---- defaults --------------------------------------------------------------
// Every default used by the runner lives here; reports echo effective values.

struct Defaults {
  static constexpr double radius = 1.0;
  static constexpr int n_radial = 64;
  static constexpr int n_angular = 64;
  static constexpr int base_n_radial = 48;
  static constexpr int base_n_angular = 48;
  static constexpr int degree = 8;
  static constexpr int m = 1;
  static constexpr int restarts = 32;
  static constexpr std::uint64_t seed = 1;
  static constexpr int probes = 16;      // random probe sections / duals
  static constexpr double fd_step = 1e-2; // family finite-difference step
  static constexpr int fiber_stride = 4;  // family fiber check stride (radial and angular)
  static constexpr int base_stride = 1;   // family base check stride, m = 1
  static constexpr int base_stride_optimizer = 4;   // m >= 2
  static constexpr int fiber_stride_optimizer = 16; // m >= 2
  static constexpr int center_restarts = 8;
  static constexpr int iters = 12;        // extension iterations
};

/// Default tolerance table per experiment kind.
const std::map<std::string, double>& default_tolerances(Kind k);

// ---- configuration ----------------------------------------------------------

struct DomainConfig {
  std::vector<double> radii{Defaults::radius};
  std::vector<int> resolution{Defaults::n_radial, Defaults::n_angular};
  std::vector<cplx> centers;
  GridDomain build() const;
  nlohmann::json to_json() const;
};

struct ExperimentConfig {
  Kind kind = Kind::kernel;
  std::string name;
  std::uint64_t seed = Defaults::seed;
  std::map<std::string, double> tolerances;

  // kernel / family / extend / envelope
  DomainConfig domain;
  nlohmann::json weight;  // Weight JSON
  int degree = Defaults::degree;
  int m = Defaults::m;
  int restarts = Defaults::restarts;

  // kernel
  std::vector<Point> points{Point{}};  // two-variable points are [z1, z2] pairs
  std::vector<double> expect_values;  // optional expected B_m at the points

  // family
  DomainConfig base{{Defaults::radius}, {Defaults::base_n_radial, Defaults::base_n_angular}, {}};
  cplx x_report{};
  std::vector<cplx> bound_points{cplx{}};
  double step = Defaults::fd_step;
  int base_stride = 0;   // 0: default for m
  int fiber_stride = 0;  // 0: default for m
  bool check_psh = true;
  bool check_uniform = true;
  bool check_ns_gram = true;
  int probes = Defaults::probes;

  // extend
  std::vector<cplx> datum{cplx{1.0, 0.0}};  // coefficients of f in z1 (constant for one variable)
  double m_real = 1.0;
  int iters = Defaults::iters;
  std::optional<double> expect_ratio;

  // shm-suite
  std::string metric = "det_z4";
  nlohmann::json constant_metric;  // [[re or [re,im], ...], ...] for metric == "constant"
  std::optional<double> eigen_C;

  // envelope
  std::vector<std::pair<int, nlohmann::json>> entries;

  /// Effective configuration (defaults filled in) for the report echo.
  nlohmann::json to_json() const;
};

/// Parses and validates a configuration document. Unknown keys, wrong types
/// and out-of-range values throw ConfigError naming the key.
ExperimentConfig parse_config(const nlohmann::json& j, std::optional<Kind> expected = std::nullopt);
/// Reads a file; JSON syntax errors report line and column.
ExperimentConfig load_config(const std::string& path, std::optional<Kind> expected = std::nullopt);

/// Applies a KEY=VAL tolerance override; the key must exist for the kind.
void apply_tolerance_override(ExperimentConfig& cfg, const std::string& assignment);

/// Complex number from a JSON number or [re, im] pair.
cplx complex_from_json(const nlohmann::json& j, const std::string& where);
nlohmann::json complex_to_json(cplx z);

}  // namespace l2m::cli
