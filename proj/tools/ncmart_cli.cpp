// ncmart: command-line driver: verify | ratios | kolmogorov | refine.
// Exit codes: 0 all checks pass, 1 some check fails, 2 configuration error.

#include "ncmart/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <utility>

namespace h = ncmart::harness;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

std::vector<double> parse_p_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw h::ConfigError("--p", "not a number: '" + item + "'");
    }
  }
  return out;
}

struct Options {
  std::string config_path;
  std::string preset_name;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> instances;
  std::optional<std::string> p_list;
  std::string out;
  std::string format;
  int threads = 0;
  bool serial = false;
};

h::ExperimentConfig resolve(const Options& o) {
  h::ExperimentConfig c;
  if (!o.config_path.empty()) c = h::load_config(o.config_path);
  else c = h::preset(o.preset_name.empty() ? "m2-worked-example" : o.preset_name);
  if (!o.config_path.empty() && !o.preset_name.empty())
    throw h::ConfigError("--preset", "give either --config or --preset, not both");
  if (o.seed) c.seed = *o.seed;
  if (o.instances) c.instances = *o.instances;
  if (o.p_list) c.p_values = parse_p_list(*o.p_list);
  if (!o.out.empty()) c.output_path = o.out;
  if (!o.format.empty()) c.format = o.format;
  h::validate(c);
  return c;
}

int run(const std::string& command, const Options& o) {
  h::ExperimentConfig c;
  try {
    c = resolve(o);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  ncmart::set_threads(o.threads);
  const auto exec = o.serial ? ncmart::Execution::serial : ncmart::Execution::parallel;
  h::VerificationReport r;
  try {
    if (command == "verify") r = h::cmd_verify(c, exec);
    else if (command == "ratios") r = h::cmd_ratios(c, exec);
    else if (command == "kolmogorov") r = h::cmd_kolmogorov(c, exec);
    else r = h::cmd_refine(c, exec);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ncmart::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  const bool sweep = command == "ratios" || command == "refine";
  const std::string format = c.format.empty() ? (sweep ? "csv" : "json") : c.format;
  try {
    h::write_report(r, c.output_path, format);
  } catch (const h::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  std::cerr << command << ": " << r.checks.size() << " checks, " << r.failures() << " failures, "
            << r.elapsed_seconds << " s\n";
  return r.all_pass() ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Noncommutative martingale identities and inequalities on finite matrix algebras"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  const std::pair<const char*, const char*> commands[] = {
      {"verify", "run every identity check on each instance"},
      {"ratios", "Burkholder-Gundy and dual Doob ratio sweep"},
      {"kolmogorov", "Kolmogorov projection certificates"},
      {"refine", "refinement tables and naturality gaps"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config_path, "experiment config (JSON)");
    sub->add_option("--preset", o.preset_name, "built-in preset")
        ->check(CLI::IsMember(h::preset_names()));
    sub->add_option("--seed", o.seed, "base seed");
    sub->add_option("--instances", o.instances, "instance count");
    sub->add_option("--p", o.p_list, "comma-separated exponents, e.g. 3,4,8");
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_option("--format", o.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", o.threads, "worker threads (0: OpenMP default)");
    sub->add_flag("--serial", o.serial, "run the serial reference sweep");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }
  return run(chosen, o);
}
