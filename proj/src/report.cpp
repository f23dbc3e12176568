#include "ncmart/harness.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace ncmart::harness {

using nlohmann::json;

namespace {

// JSON has no infinities or NaN
json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json("undefined"); }

std::string csv_number(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

std::string csv_optional(const std::optional<double>& v) { return v ? csv_number(*v) : "undefined"; }

json checks_json(const std::vector<CheckRecord>& checks) {
  json out = json::array();
  for (const auto& c : checks)
    out.push_back({{"instance", c.instance},
                   {"name", c.name},
                   {"anchor", c.anchor},
                   {"residual", number(c.residual)},
                   {"tolerance", c.tolerance},
                   {"pass", c.pass}});
  return out;
}

json certificate_summary(const std::vector<CertificateRecord>& certs) {
  json out = json::object();
  for (Side side : {Side::left, Side::right}) {
    std::vector<double> slack;
    std::size_t valid = 0;
    for (const auto& c : certs) {
      if (c.side != side) continue;
      slack.push_back(c.trace_bound - c.trace_defect);
      valid += c.valid ? 1 : 0;
    }
    if (slack.empty()) continue;
    out[to_string(side)] = {{"certificates", slack.size()},
                            {"valid", valid},
                            {"trace_slack_min", number(quantile(slack, 0.0))},
                            {"trace_slack_median", number(quantile(slack, 0.5))}};
  }
  return out;
}

}  // namespace

json to_json(const VerificationReport& r, bool include_timing) {
  json j;
  j["command"] = r.command;
  j["config"] = r.config;
  j["all_pass"] = r.all_pass();
  j["failures"] = r.failures();
  j["check_count"] = r.checks.size();
  j["checks"] = checks_json(r.checks);
  if (!r.ratio_rows.empty()) {
    json rows = json::array();
    for (const auto& row : r.ratio_rows)
      rows.push_back({{"p", row.p},
                      {"instance", row.instance},
                      {"bg_ratio", optional_number(row.bg_ratio)},
                      {"dual_doob_ratio", optional_number(row.dual_doob_ratio)},
                      {"seed", row.seed}});
    j["ratios"] = rows;
    json summary = json::array();
    for (const auto& s : r.ratio_summary)
      summary.push_back({{"statistic", s.statistic},
                         {"p", s.p},
                         {"ratio", number(s.ratio)},
                         {"instance_count", s.instance_count},
                         {"max_ratio", number(s.max_ratio)},
                         {"q50", number(s.q50)},
                         {"q90", number(s.q90)},
                         {"q99", number(s.q99)},
                         {"seed", s.seed}});
    j["ratio_summary"] = summary;
  }
  if (!r.certificates.empty()) {
    json certs = json::array();
    for (const auto& c : r.certificates)
      certs.push_back({{"instance", c.instance},
                       {"side", to_string(c.side)},
                       {"epsilon", number(c.epsilon)},
                       {"trace_defect", number(c.trace_defect)},
                       {"trace_bound", number(c.trace_bound)},
                       {"max_sup_norm", number(c.max_sup_norm)},
                       {"chain_defect", number(c.chain_defect)},
                       {"valid", c.valid}});
    j["certificates"] = certs;
    j["certificate_summary"] = certificate_summary(r.certificates);
  }
  if (!r.refine_rows.empty()) {
    json rows = json::array();
    for (const auto& row : r.refine_rows)
      rows.push_back({{"instance", row.instance},
                      {"side", to_string(row.side)},
                      {"level", row.level},
                      {"partition_size", row.partition_size},
                      {"refinement_entry", number(row.refinement_entry)},
                      {"naturality_gap", number(row.naturality_gap)}});
    j["refine"] = rows;
  }
  if (include_timing) j["elapsed_seconds"] = r.elapsed_seconds;
  return j;
}

std::string payload(const VerificationReport& r) { return to_json(r, false).dump(); }

std::string to_csv(const VerificationReport& r) {
  std::ostringstream os;
  if (r.command == "ratios") {
    os << "p,instance,bg_ratio,dual_doob_ratio,seed\n";
    for (const auto& row : r.ratio_rows)
      os << csv_number(row.p) << ',' << row.instance << ',' << csv_optional(row.bg_ratio) << ','
         << csv_optional(row.dual_doob_ratio) << ',' << row.seed << '\n';
  } else if (r.command == "refine") {
    os << "instance,side,level,partition_size,naturality_gap,refinement_entry\n";
    for (const auto& row : r.refine_rows)
      os << row.instance << ',' << to_string(row.side) << ',' << row.level << ',' << row.partition_size
         << ',' << csv_number(row.naturality_gap) << ',' << csv_number(row.refinement_entry) << '\n';
  } else if (r.command == "kolmogorov") {
    os << "instance,side,epsilon,trace_defect,trace_bound,max_sup_norm,chain_defect,valid\n";
    for (const auto& c : r.certificates)
      os << c.instance << ',' << to_string(c.side) << ',' << csv_number(c.epsilon) << ','
         << csv_number(c.trace_defect) << ',' << csv_number(c.trace_bound) << ','
         << csv_number(c.max_sup_norm) << ',' << csv_number(c.chain_defect) << ','
         << (c.valid ? "true" : "false") << '\n';
  } else {
    os << "instance,name,residual,tolerance,pass\n";
    for (const auto& c : r.checks)
      os << c.instance << ',' << c.name << ',' << csv_number(c.residual) << ','
         << csv_number(c.tolerance) << ',' << (c.pass ? "true" : "false") << '\n';
  }
  return os.str();
}

void write_report(const VerificationReport& r, const std::string& path, const std::string& format) {
  const std::string text = format == "csv" ? to_csv(r) : to_json(r).dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("--out", "cannot write '" + path + "'");
  out << text;
}

}  // namespace ncmart::harness
