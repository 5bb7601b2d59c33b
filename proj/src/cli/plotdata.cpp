#include <fstream>
#include <sstream>

#include "l2m/cli/runner.hpp"
#include "l2m/field_io.hpp"

namespace l2m::cli {

using nlohmann::json;

namespace {

std::string num(const json& v) { return v.is_number() ? io::fmt(v.get<double>()) : std::string("nan"); }

}  // namespace

std::string emit_plotdata(const std::vector<std::string>& report_paths) {
  if (report_paths.empty()) throw std::runtime_error("no report files given");
  std::ostringstream out;
  std::string kind;
  for (const std::string& path : report_paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open report '" + path + "'");
    json r;
    try {
      r = json::parse(in);
    } catch (const json::exception& e) {
      throw std::runtime_error("'" + path + "' is not a report: " + e.what());
    }
    if (!r.is_object() || !r.contains("schema_version") || !r.contains("kind"))
      throw std::runtime_error("'" + path + "' is not a report (missing schema_version/kind)");
    if (r["schema_version"] != kSchemaVersion)
      throw std::runtime_error("'" + path + "': unsupported schema_version");
    const std::string k = r["kind"].get<std::string>();
    if (k != "family" && k != "kernel")
      throw std::runtime_error("'" + path + "': kind '" + k + "' has no plot data");
    if (kind.empty()) {
      kind = k;
      out << (k == "family" ? "t_re,t_im,logB,levi_min\n" : "x_re,x_im,value\n");
    } else if (kind != k) {
      throw std::runtime_error("cannot merge '" + k + "' and '" + kind + "' reports");
    }
    const json& res = r.at("results");
    if (k == "family") {
      if (!res.contains("rows")) throw std::runtime_error("'" + path + "': family report without psh_variation rows");
      for (const json& row : res["rows"])
        out << num(row[0][0]) << ',' << num(row[0][1]) << ',' << num(row[1]) << ',' << num(row[2]) << '\n';
    } else {
      for (const json& p : res.at("points")) {
        const json& x = p["x"][0].is_array() ? p["x"][0] : p["x"];
        out << num(x[0]) << ',' << num(x[1]) << ',' << num(p["value"]) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace l2m::cli
