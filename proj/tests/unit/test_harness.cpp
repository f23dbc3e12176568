#include "support.hpp"

#include "ncmart/harness.hpp"

#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace ncmart;
using namespace ncmart::harness;
using nlohmann::json;

namespace {

std::string config_field(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

json m2_config() {
  return json::parse(R"({
    "spec_version": 1,
    "algebra": {"block_dims": [2], "block_weights": [1.0]},
    "filtration": {"levels": [
      {"kind": "scalars"},
      {"kind": "block_full", "groups": [[[0], [1]]]},
      {"kind": "block_full", "groups": [[[0, 1]]]}
    ]},
    "terminal": [[[1, 1], [1, -1]]],
    "seed": 1, "instances": 1, "p_values": [2, 4],
    "epsilon_policy": {"fixed": 2.0}
  })");
}

ExperimentConfig small_random(std::size_t instances) {
  ExperimentConfig c = preset("acceptance");
  c.instances = instances;
  return c;
}

}  // namespace

TEST_CASE("presets validate") {
  for (const auto& name : preset_names()) CHECK_NOTHROW(validate(preset(name)));
  CHECK_THROWS_AS(preset("nope"), ConfigError);
}

TEST_CASE("worked example preset passes every check") {
  const VerificationReport r = cmd_verify(preset("m2-worked-example"));
  CHECK(r.all_pass());
  CHECK(r.checks.size() > 30);
  for (const auto& c : r.checks) {
    CHECK_MESSAGE(c.residual <= 1e-10, c.name);
    CHECK(c.pass == (c.residual <= c.tolerance));
    CHECK_FALSE(c.anchor.empty());
  }
  const VerificationReport k = cmd_kolmogorov(preset("m2-worked-example"));
  REQUIRE(k.certificates.size() == 2);
  for (const auto& c : k.certificates) {
    CHECK(c.trace_defect == doctest::Approx(0.0).scale(1.0));
    CHECK(c.valid);
  }
}

TEST_CASE("explicit config parses like the preset") {
  const ExperimentConfig c = parse_config(m2_config());
  CHECK(c.filtration.levels.size() == 3);
  CHECK(c.terminal.size() == 1);
  CHECK(payload(cmd_verify(c)) != "");
  const ExperimentConfig p = preset("m2-worked-example");
  const Instance a = make_instance(c, 0);
  const Instance b = make_instance(p, 0);
  for (std::size_t k = 0; k < 3; ++k) CHECK(support::dist(a.x[k], b.x[k]) == 0.0);
  // round trip through JSON
  const ExperimentConfig again = parse_config(to_json(c));
  CHECK(to_json(again) == to_json(c));
}

TEST_CASE("config errors name the field") {
  json j = m2_config();
  j["filtration"]["levels"][1] = {{"kind", "block_full"}, {"groups", json::parse("[[[0, 1]]]")}};
  j["filtration"]["levels"][2] = {{"kind", "block_full"}, {"groups", json::parse("[[[0], [1]]]")}};
  CHECK(config_field(j) == "filtration.levels[1]");

  j = m2_config();
  j["p_values"] = json::array();
  CHECK(config_field(j) == "p_values");
  j["p_values"] = {3, 1.5};
  CHECK(config_field(j) == "p_values[1]");

  j = m2_config();
  j["spec_version"] = 7;
  CHECK(config_field(j) == "spec_version");

  j = m2_config();
  j["algebra"]["block_weights"] = {0.7};
  CHECK(config_field(j) == "algebras[0]");

  j = m2_config();
  j["filtration"]["levels"][0]["kind"] = "bogus";
  CHECK(config_field(j) == "filtration.levels[0].kind");

  j = m2_config();
  j["partition_chain"] = {{0, 1, 2}, {0, 2}};
  CHECK(config_field(j) == "partition_chain[1]");
  j["partition_chain"] = {{0, 2}, {0, 1, 2}};
  CHECK(config_field(j) == "");

  j = m2_config();
  j["instances"] = 0;
  CHECK(config_field(j) == "instances");

  j = m2_config();
  j["terminal"] = {json::parse("[[1, 2, 3], [1, 2, 3], [1, 2, 3]]")};
  CHECK(config_field(j) == "terminal");

  j = m2_config();
  j["epsilon_policy"] = {{"percentile", 0}};
  CHECK(config_field(j) == "epsilon_policy.percentile");

  CHECK(config_field(json::array()) == "(root)");
}

TEST_CASE("random filtrations are increasing and end at the full algebra") {
  const RandomFiltrationSpec spec{2, 8, 0.5, 0.3};
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Rng rng(seed);
    const auto alg = support::test_algebras()[seed % 5];
    const std::size_t levels = 2 + seed % 7;
    const FiltrationPtr f = random_filtration(alg, rng, levels, spec);
    CHECK(f->size() == levels);
    CHECK(f->level(f->last()).dimension() == alg->dimension());
    for (std::size_t k = 0; k + 1 < f->size(); ++k) CHECK(f->level(k).dimension() <= f->level(k + 1).dimension());
  }
}

TEST_CASE("level kinds are all exercised by the acceptance preset") {
  const ExperimentConfig c = small_random(80);
  std::size_t counts[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < c.instances; ++i) {
    const Instance inst = make_instance(c, i);
    for (const auto& lv : inst.filtration->levels()) ++counts[static_cast<int>(lv.kind())];
  }
  for (auto n : counts) CHECK(n > 0);
}

TEST_CASE("stutter repeats levels and values") {
  const Instance inst = make_instance(small_random(3), 2);
  const FiltrationPtr st = stutter(*inst.filtration);
  CHECK(st->size() == 2 * inst.filtration->size());
  const AdaptedProcess xs = stutter(inst.x, st);
  for (std::size_t k = 0; k < inst.x.size(); ++k) {
    CHECK(support::dist(xs[2 * k], inst.x[k]) == 0.0);
    CHECK(support::dist(xs[2 * k + 1], inst.x[k]) == 0.0);
  }
}

TEST_CASE("determinism and serial/parallel agreement") {
  const ExperimentConfig c = small_random(12);
  const int before = max_threads();
  set_threads(4);
  const std::string serial = payload(cmd_verify(c, Execution::serial));
  const std::string parallel = payload(cmd_verify(c, Execution::parallel));
  set_threads(2);
  const std::string parallel2 = payload(cmd_verify(c, Execution::parallel));
  set_threads(before);
  CHECK(serial == parallel);
  CHECK(serial == parallel2);
  CHECK(payload(cmd_ratios(c, Execution::serial)) == payload(cmd_ratios(c, Execution::parallel)));
  CHECK(payload(cmd_kolmogorov(c, Execution::serial)) == payload(cmd_kolmogorov(c, Execution::parallel)));
  CHECK(payload(cmd_refine(c, Execution::serial)) == payload(cmd_refine(c, Execution::parallel)));
  ExperimentConfig other = c;
  other.seed += 1;
  CHECK(payload(cmd_verify(other)) != serial);
}

TEST_CASE("parallel sweep rethrows the lowest failing index") {
  set_threads(4);
  try {
    map_instances<int>(50, Execution::parallel, [](std::size_t i) -> int {
      if (i == 7 || i == 31) throw std::runtime_error(std::to_string(i));
      return static_cast<int>(i);
    });
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()) == "7");
  }
  const auto v = map_instances<int>(50, Execution::parallel, [](std::size_t i) { return static_cast<int>(i * i); });
  for (int i = 0; i < 50; ++i) CHECK(v[i] == i * i);
  set_threads(0);
}

TEST_CASE("report records are self-consistent") {
  const VerificationReport r = cmd_verify(small_random(6));
  const json j = to_json(r);
  for (const auto& c : j["checks"]) CHECK(c["pass"].get<bool>() == (c["residual"].get<double>() <= c["tolerance"].get<double>()));
  CHECK(j["all_pass"].get<bool>() == r.all_pass());
  CHECK(j.contains("elapsed_seconds"));
  CHECK_FALSE(to_json(r, false).contains("elapsed_seconds"));
  // sorted by (instance, name)
  for (std::size_t i = 1; i < r.checks.size(); ++i) {
    const auto& a = r.checks[i - 1];
    const auto& b = r.checks[i];
    CHECK((a.instance < b.instance || (a.instance == b.instance && a.name <= b.name)));
  }
}

TEST_CASE("ratio sweep output") {
  ExperimentConfig c = preset("ratios-m4");
  c.instances = 20;
  const VerificationReport r = cmd_ratios(c);
  CHECK(r.all_pass());
  CHECK(r.ratio_rows.size() == 20 * c.p_values.size());
  REQUIRE(r.ratio_summary.size() == 2 * c.p_values.size());
  for (const auto& s : r.ratio_summary) {
    CHECK(std::isfinite(s.max_ratio));
    CHECK(s.instance_count == 20);
  }
  std::istringstream csv(to_csv(r));
  std::string header;
  std::getline(csv, header);
  CHECK(header == "p,instance,bg_ratio,dual_doob_ratio,seed");
}

TEST_CASE("refine output") {
  ExperimentConfig c = preset("refine-m4");
  c.instances = 5;
  const VerificationReport r = cmd_refine(c);
  CHECK(r.all_pass());
  for (const auto& row : r.refine_rows)
    if (row.level == 3) CHECK(row.refinement_entry <= 1e-12);
  // full grid only: one zero row per side
  ExperimentConfig m2 = preset("m2-worked-example");
  m2.partition_chain = {{0, 1, 2}};
  const VerificationReport z = cmd_refine(m2);
  REQUIRE(z.refine_rows.size() == 2);
  for (const auto& row : z.refine_rows) CHECK(row.refinement_entry == 0.0);
}

// --- command line ----------------------------------------------------------

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(NCMART_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string temp_path(const std::string& name) { return std::string(NCMART_TEST_TMP) + "/" + name; }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("cli exit codes") {
  CHECK(run_cli("verify") == 0);
  CHECK(run_cli("verify --preset m2-worked-example --format csv") == 0);
  CHECK(run_cli("kolmogorov --preset m2-worked-example") == 0);
  CHECK(run_cli("ratios --preset ratios-m4 --instances 5 --p 3,4") == 0);
  CHECK(run_cli("refine --preset refine-m4 --instances 3") == 0);
  CHECK(run_cli("ratios --p ''") == 2);
  CHECK(run_cli("ratios --p 1.5") == 2);
  CHECK(run_cli("ratios --p x") == 2);
  CHECK(run_cli("verify --instances 0") == 2);
  CHECK(run_cli("verify --config /nonexistent.json") == 2);
  CHECK(run_cli("verify --preset nope") == 2);
  CHECK(run_cli("verify --format xml") == 2);
  CHECK(run_cli("frobnicate") == 2);
  CHECK(run_cli("") == 2);

  json bad = m2_config();
  bad["filtration"]["levels"][0] = {{"kind", "block_full"}, {"groups", json::parse("[[[0], [1]]]")}};
  bad["filtration"]["levels"][1] = {{"kind", "scalars"}};
  const std::string path = temp_path("bad_config.json");
  std::ofstream(path) << bad.dump();
  CHECK(run_cli("verify --config " + path) == 2);
}

TEST_CASE("cli check failure exits 1") {
  // entries this large overflow |X|², so residuals stop being finite
  json j = m2_config();
  j["terminal"] = {json::parse("[[1e300, 1e300], [1e300, -1e300]]")};
  const std::string path = temp_path("overflow_config.json");
  std::ofstream(path) << j.dump();
  CHECK(run_cli("verify --config " + path) == 1);

  VerificationReport r;
  r.checks.push_back(make_check(0, "x", "a", 1.0, 0.5));
  CHECK_FALSE(r.all_pass());
  r.checks.push_back(make_check(0, "y", "a", std::nan(""), 0.5));
  CHECK(r.failures() == 2);
}

TEST_CASE("cli output is reproducible") {
  const std::string a = temp_path("run_a.csv");
  const std::string b = temp_path("run_b.csv");
  CHECK(run_cli("ratios --preset ratios-m4 --instances 10 --seed 5 --out " + a) == 0);
  CHECK(run_cli("ratios --preset ratios-m4 --instances 10 --seed 5 --serial --out " + b) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(slurp(a).rfind("p,instance,bg_ratio,dual_doob_ratio,seed\n", 0) == 0);
  const std::string ja = temp_path("verify_a.json");
  const std::string jb = temp_path("verify_b.json");
  CHECK(run_cli("verify --preset acceptance --instances 4 --seed 9 --out " + ja) == 0);
  CHECK(run_cli("verify --preset acceptance --instances 4 --seed 9 --threads 3 --out " + jb) == 0);
  json x = json::parse(slurp(ja));
  json y = json::parse(slurp(jb));
  x.erase("elapsed_seconds");
  y.erase("elapsed_seconds");
  CHECK(x.dump() == y.dump());
}
