#include "ncmart/harness.hpp"

#include "ncmart/doob_meyer.hpp"
#include "ncmart/stoch_integral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace ncmart::harness {

using nlohmann::json;

namespace {

std::string indexed(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

template <class T>
T get_field(const json& j, const std::string& key, const std::string& path) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(path.empty() ? key : path + "." + key, e.what());
  }
}

cplx parse_entry(const json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(path, "matrix entry must be a number or [re, im]");
}

Matrix parse_matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "matrix must be a nonempty array of rows");
  const auto n = static_cast<Eigen::Index>(j.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[r];
    const std::string rp = indexed(path, r);
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
      throw ConfigError(rp, "matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = parse_entry(row[c], indexed(rp, c));
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const cplx v = m(r, c);
      if (v.imag() == 0.0) row.push_back(v.real());
      else row.push_back(json::array({v.real(), v.imag()}));
    }
    rows.push_back(row);
  }
  return rows;
}

AlgebraSpec parse_algebra(const json& j, const std::string& path) {
  AlgebraSpec a;
  a.block_dims = get_field<std::vector<int>>(j, "block_dims", path);
  if (j.contains("block_weights")) {
    a.block_weights = get_field<std::vector<double>>(j, "block_weights", path);
  } else {
    const double total = std::accumulate(a.block_dims.begin(), a.block_dims.end(), 0.0);
    for (int n : a.block_dims) a.block_weights.push_back(n / total);
  }
  return a;
}

LevelKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "scalars") return LevelKind::scalars;
  if (s == "block_full") return LevelKind::block_full;
  if (s == "block_scalar") return LevelKind::block_scalar;
  if (s == "general") return LevelKind::general;
  throw ConfigError(path, "unknown level kind '" + s + "'");
}

LevelSpec parse_level(const json& j, const std::string& path) {
  LevelSpec l;
  l.kind = parse_kind(get_field<std::string>(j, "kind", path), path + ".kind");
  if (l.kind == LevelKind::block_full || l.kind == LevelKind::block_scalar)
    l.groups = get_field<CoordinatePartition>(j, "groups", path);
  if (l.kind == LevelKind::general) {
    if (!j.contains("basis") || !j.at("basis").is_array())
      throw ConfigError(path + ".basis", "general levels need a basis list");
    const json& basis = j.at("basis");
    for (std::size_t i = 0; i < basis.size(); ++i) {
      std::vector<Matrix> blocks;
      const std::string bp = indexed(path + ".basis", i);
      for (std::size_t b = 0; b < basis[i].size(); ++b)
        blocks.push_back(parse_matrix(basis[i][b], indexed(bp, b)));
      l.basis.push_back(std::move(blocks));
    }
  }
  return l;
}

json level_to_json(const LevelSpec& l) {
  json j{{"kind", to_string(l.kind)}};
  if (l.kind == LevelKind::block_full || l.kind == LevelKind::block_scalar) j["groups"] = l.groups;
  if (l.kind == LevelKind::general) {
    json basis = json::array();
    for (const auto& e : l.basis) {
      json blocks = json::array();
      for (const auto& m : e) blocks.push_back(matrix_to_json(m));
      basis.push_back(blocks);
    }
    j["basis"] = basis;
  }
  return j;
}

AlgebraPtr build_algebra(const AlgebraSpec& a) { return TracialAlgebra::make(a.block_dims, a.block_weights); }

SubalgebraLevel build_level(const AlgebraPtr& alg, const LevelSpec& l) {
  switch (l.kind) {
    case LevelKind::scalars: return SubalgebraLevel::scalars(alg);
    case LevelKind::block_full: return SubalgebraLevel::block_full(alg, l.groups);
    case LevelKind::block_scalar: return SubalgebraLevel::block_scalar(alg, l.groups);
    case LevelKind::general: {
      std::vector<AlgElement> basis;
      for (const auto& blocks : l.basis) basis.emplace_back(alg, blocks);
      return SubalgebraLevel::general(alg, std::move(basis));
    }
  }
  throw ConfigError("filtration.levels", "unknown level kind");
}

FiltrationPtr build_explicit_filtration(const ExperimentConfig& c, const AlgebraPtr& alg) {
  std::vector<SubalgebraLevel> levels;
  for (std::size_t k = 0; k < c.filtration.levels.size(); ++k) {
    try {
      levels.push_back(build_level(alg, c.filtration.levels[k]));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(indexed("filtration.levels", k), e.what());
    }
  }
  TimeGrid grid = c.filtration.times.empty() ? TimeGrid::uniform(levels.size())
                                             : TimeGrid(c.filtration.times);
  try {
    return make_filtration(std::move(grid), std::move(levels));
  } catch (const FiltrationError& e) {
    throw ConfigError(indexed("filtration.levels", e.level()), e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("(root)", "config must be a JSON object");
  ExperimentConfig c;
  if (j.contains("preset")) c = preset(get_field<std::string>(j, "preset", ""));
  if (j.contains("spec_version")) c.spec_version = get_field<int>(j, "spec_version", "");
  if (j.contains("algebra")) {
    c.algebras = {parse_algebra(j.at("algebra"), "algebra")};
  } else if (j.contains("algebras")) {
    c.algebras.clear();
    const json& arr = j.at("algebras");
    if (!arr.is_array()) throw ConfigError("algebras", "must be an array");
    for (std::size_t i = 0; i < arr.size(); ++i) c.algebras.push_back(parse_algebra(arr[i], indexed("algebras", i)));
  }
  if (j.contains("filtration")) {
    const json& f = j.at("filtration");
    c.filtration = {};
    if (f.contains("times")) c.filtration.times = get_field<std::vector<double>>(f, "times", "filtration");
    if (f.contains("levels")) {
      const json& levels = f.at("levels");
      for (std::size_t k = 0; k < levels.size(); ++k)
        c.filtration.levels.push_back(parse_level(levels[k], indexed("filtration.levels", k)));
    }
    if (f.contains("random")) {
      const json& r = f.at("random");
      RandomFiltrationSpec spec;
      const std::string rp = "filtration.random";
      if (r.contains("min_levels")) spec.min_levels = get_field<int>(r, "min_levels", rp);
      if (r.contains("max_levels")) spec.max_levels = get_field<int>(r, "max_levels", rp);
      if (r.contains("general_probability"))
        spec.general_probability = get_field<double>(r, "general_probability", rp);
      if (r.contains("conjugate_probability"))
        spec.conjugate_probability = get_field<double>(r, "conjugate_probability", rp);
      c.filtration.random = spec;
    }
  }
  if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "");
  if (j.contains("instances")) c.instances = get_field<std::size_t>(j, "instances", "");
  if (j.contains("p_values")) c.p_values = get_field<std::vector<double>>(j, "p_values", "");
  if (j.contains("epsilon_policy")) {
    const json& e = j.at("epsilon_policy");
    if (e.contains("fixed")) {
      c.epsilon = {EpsilonPolicy::Mode::fixed, get_field<double>(e, "fixed", "epsilon_policy")};
    } else if (e.contains("percentile")) {
      c.epsilon = {EpsilonPolicy::Mode::percentile, get_field<double>(e, "percentile", "epsilon_policy")};
    } else {
      throw ConfigError("epsilon_policy", "expected {\"fixed\": x} or {\"percentile\": q}");
    }
  }
  if (j.contains("partition_chain")) {
    const json& pc = j.at("partition_chain");
    c.partition_chain.clear();
    if (pc.is_string()) {
      if (pc.get<std::string>() != "dyadic")
        throw ConfigError("partition_chain", "expected \"dyadic\" or a list of partitions");
    } else {
      c.partition_chain = get_field<std::vector<Partition>>(j, "partition_chain", "");
    }
  }
  if (j.contains("terminal")) {
    c.terminal.clear();
    const json& t = j.at("terminal");
    for (std::size_t b = 0; b < t.size(); ++b) c.terminal.push_back(parse_matrix(t[b], indexed("terminal", b)));
  }
  if (j.contains("output")) {
    const json& o = j.at("output");
    if (o.contains("path")) c.output_path = get_field<std::string>(o, "path", "output");
    if (o.contains("format")) c.format = get_field<std::string>(o, "format", "output");
  }
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("--config", e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["spec_version"] = c.spec_version;
  if (!c.preset.empty()) j["preset"] = c.preset;
  json algs = json::array();
  for (const auto& a : c.algebras) algs.push_back({{"block_dims", a.block_dims}, {"block_weights", a.block_weights}});
  j["algebras"] = algs;
  json f = json::object();
  if (!c.filtration.times.empty()) f["times"] = c.filtration.times;
  if (!c.filtration.levels.empty()) {
    json levels = json::array();
    for (const auto& l : c.filtration.levels) levels.push_back(level_to_json(l));
    f["levels"] = levels;
  }
  if (c.filtration.random) {
    const auto& r = *c.filtration.random;
    f["random"] = {{"min_levels", r.min_levels},
                   {"max_levels", r.max_levels},
                   {"general_probability", r.general_probability},
                   {"conjugate_probability", r.conjugate_probability}};
  }
  j["filtration"] = f;
  j["seed"] = c.seed;
  j["instances"] = c.instances;
  j["p_values"] = c.p_values;
  j["epsilon_policy"] = c.epsilon.mode == EpsilonPolicy::Mode::fixed ? json{{"fixed", c.epsilon.value}}
                                                                    : json{{"percentile", c.epsilon.value}};
  if (c.partition_chain.empty()) j["partition_chain"] = "dyadic";
  else j["partition_chain"] = c.partition_chain;
  if (!c.terminal.empty()) {
    json t = json::array();
    for (const auto& m : c.terminal) t.push_back(matrix_to_json(m));
    j["terminal"] = t;
  }
  return j;
}

void validate(const ExperimentConfig& c) {
  if (c.spec_version != kConfigVersion)
    throw ConfigError("spec_version", "unsupported version " + std::to_string(c.spec_version));
  if (c.algebras.empty()) throw ConfigError("algebras", "at least one algebra is required");
  std::vector<AlgebraPtr> algebras;
  for (std::size_t i = 0; i < c.algebras.size(); ++i) {
    try {
      algebras.push_back(build_algebra(c.algebras[i]));
    } catch (const Error& e) {
      throw ConfigError(indexed("algebras", i), e.what());
    }
  }
  if (c.instances == 0) throw ConfigError("instances", "must be at least 1");
  if (c.p_values.empty()) throw ConfigError("p_values", "at least one exponent is required");
  for (std::size_t i = 0; i < c.p_values.size(); ++i)
    if (!(c.p_values[i] >= 2.0) || !std::isfinite(c.p_values[i]))
      throw ConfigError(indexed("p_values", i), "exponents must be finite and >= 2");
  if (c.epsilon.mode == EpsilonPolicy::Mode::fixed && !(c.epsilon.value > 0.0))
    throw ConfigError("epsilon_policy.fixed", "epsilon must be positive");
  if (c.epsilon.mode == EpsilonPolicy::Mode::percentile &&
      !(c.epsilon.value > 0.0 && c.epsilon.value <= 100.0))
    throw ConfigError("epsilon_policy.percentile", "percentile must lie in (0, 100]");
  if (!c.format.empty() && c.format != "json" && c.format != "csv")
    throw ConfigError("output.format", "expected json or csv");

  const bool explicit_levels = !c.filtration.levels.empty();
  if (explicit_levels == c.filtration.random.has_value())
    throw ConfigError("filtration", "give exactly one of 'levels' or 'random'");
  std::size_t grid_points = 0;
  if (explicit_levels) {
    if (c.algebras.size() != 1)
      throw ConfigError("filtration.levels", "explicit levels need exactly one algebra");
    if (!c.filtration.times.empty() && c.filtration.times.size() != c.filtration.levels.size())
      throw ConfigError("filtration.times", "one time per level is required");
    grid_points = build_explicit_filtration(c, algebras.front())->size();
  } else {
    const auto& r = *c.filtration.random;
    if (r.min_levels < 2) throw ConfigError("filtration.random.min_levels", "must be at least 2");
    if (r.max_levels < r.min_levels)
      throw ConfigError("filtration.random.max_levels", "must be at least min_levels");
    if (!(r.general_probability >= 0.0 && r.general_probability <= 1.0))
      throw ConfigError("filtration.random.general_probability", "must lie in [0, 1]");
    if (!(r.conjugate_probability >= 0.0 && r.conjugate_probability <= 1.0))
      throw ConfigError("filtration.random.conjugate_probability", "must lie in [0, 1]");
  }

  if (!c.partition_chain.empty()) {
    if (!explicit_levels)
      throw ConfigError("partition_chain", "an explicit chain needs an explicit filtration");
    for (std::size_t i = 0; i < c.partition_chain.size(); ++i) {
      try {
        validate_partition(c.partition_chain[i], grid_points - 1);
      } catch (const Error& e) {
        throw ConfigError(indexed("partition_chain", i), e.what());
      }
      if (i > 0 && !is_refinement(c.partition_chain[i - 1], c.partition_chain[i]))
        throw ConfigError(indexed("partition_chain", i), "chain is not nested");
    }
  }

  if (!c.terminal.empty()) {
    if (c.algebras.size() != 1) throw ConfigError("terminal", "an explicit terminal needs exactly one algebra");
    try {
      AlgElement(algebras.front(), c.terminal);
    } catch (const Error& e) {
      throw ConfigError("terminal", e.what());
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<std::string> preset_names() {
  return {"m2-worked-example", "acceptance", "ratios-m4", "refine-m4"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "m2-worked-example") {
    // M₂: scalars ⊂ diagonal ⊂ full, terminal [[1,1],[1,−1]]
    c.algebras = {{{2}, {1.0}}};
    LevelSpec scalars;
    LevelSpec diagonal{LevelKind::block_full, {{{0}, {1}}}, {}};
    LevelSpec full{LevelKind::block_full, {{{0, 1}}}, {}};
    c.filtration.levels = {scalars, diagonal, full};
    Matrix x(2, 2);
    x << 1.0, 1.0, 1.0, -1.0;
    c.terminal = {x};
    c.instances = 1;
    c.seed = 1;
    c.epsilon = {EpsilonPolicy::Mode::fixed, 2.0};
    c.p_values = {2.0, 4.0};
  } else if (name == "acceptance") {
    c.algebras = {{{2}, {1.0}}, {{4}, {1.0}}, {{2, 3}, {0.4, 0.6}}, {{8}, {1.0}}};
    c.filtration.random = RandomFiltrationSpec{2, 8, 0.3, 0.25};
    c.instances = 500;
    c.seed = 20240611;
  } else if (name == "ratios-m4") {
    c.algebras = {{{4}, {1.0}}};
    c.filtration.random = RandomFiltrationSpec{4, 4, 0.3, 0.25};
    c.instances = 1000;
    c.seed = 7;
  } else if (name == "refine-m4") {
    c.algebras = {{{4}, {1.0}}};
    c.filtration.random = RandomFiltrationSpec{8, 8, 0.3, 0.25};
    c.instances = 100;
    c.seed = 11;
  } else {
    throw ConfigError("--preset", "unknown preset '" + name + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------

FiltrationPtr random_filtration(const AlgebraPtr& algebra, Rng& rng, std::size_t levels,
                                const RandomFiltrationSpec& spec) {
  // Increasing stages: scalars, then block_scalar with successively split
  // groups down to singletons, then block_full with successively merged
  // groups up to the full algebra.
  struct Stage {
    LevelKind kind;
    CoordinatePartition partition;
  };
  std::vector<Stage> stages{{LevelKind::scalars, {}}};
  CoordinatePartition p = trivial_partition(*algebra);
  stages.push_back({LevelKind::block_scalar, p});
  auto splittable = [](const CoordinatePartition& q) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t b = 0; b < q.size(); ++b)
      for (std::size_t g = 0; g < q[b].size(); ++g)
        if (q[b][g].size() > 1) out.emplace_back(b, g);
    return out;
  };
  for (auto cand = splittable(p); !cand.empty(); cand = splittable(p)) {
    const auto [b, g] = cand[rng.uniform_int(0, static_cast<int>(cand.size()) - 1)];
    std::vector<int> group = p[b][g];
    for (std::size_t i = group.size() - 1; i > 0; --i)
      std::swap(group[i], group[rng.uniform_int(0, static_cast<int>(i))]);
    const int cut = rng.uniform_int(1, static_cast<int>(group.size()) - 1);
    p[b][g] = std::vector<int>(group.begin(), group.begin() + cut);
    p[b].emplace_back(group.begin() + cut, group.end());
    stages.push_back({LevelKind::block_scalar, p});
  }
  auto mergeable = [](const CoordinatePartition& q) {
    std::vector<std::size_t> out;
    for (std::size_t b = 0; b < q.size(); ++b)
      if (q[b].size() > 1) out.push_back(b);
    return out;
  };
  for (auto cand = mergeable(p); !cand.empty(); cand = mergeable(p)) {
    const std::size_t b = cand[rng.uniform_int(0, static_cast<int>(cand.size()) - 1)];
    const int n = static_cast<int>(p[b].size());
    const int g1 = rng.uniform_int(0, n - 1);
    int g2 = rng.uniform_int(0, n - 2);
    if (g2 >= g1) ++g2;
    p[b][g1].insert(p[b][g1].end(), p[b][g2].begin(), p[b][g2].end());
    p[b].erase(p[b].begin() + g2);
    stages.push_back({LevelKind::block_full, p});
  }
  if (stages.back().kind != LevelKind::block_full)  // algebra of 1×1 blocks only
    stages.push_back({LevelKind::block_full, p});

  std::vector<int> picks;
  for (std::size_t k = 0; k + 1 < levels; ++k)
    picks.push_back(rng.uniform_int(0, static_cast<int>(stages.size()) - 2));
  std::sort(picks.begin(), picks.end());
  picks.push_back(static_cast<int>(stages.size()) - 1);

  const bool conjugate = rng.uniform() < spec.conjugate_probability;
  const AlgElement u = conjugate ? random_unitary(algebra, rng) : AlgElement::identity(algebra);
  std::vector<SubalgebraLevel> out;
  for (int s : picks) {
    const Stage& st = stages[s];
    SubalgebraLevel level =
        st.kind == LevelKind::scalars      ? SubalgebraLevel::scalars(algebra)
        : st.kind == LevelKind::block_full ? SubalgebraLevel::block_full(algebra, st.partition)
                                           : SubalgebraLevel::block_scalar(algebra, st.partition);
    const bool to_general = rng.uniform() < spec.general_probability;
    if (conjugate) {
      std::vector<AlgElement> basis;
      for (const auto& b : level.basis()) basis.push_back(u * b * u.adjoint());
      out.push_back(SubalgebraLevel::general(algebra, std::move(basis), false));
    } else if (to_general) {
      out.push_back(level.as_general());
    } else {
      out.push_back(std::move(level));
    }
  }
  return make_filtration(TimeGrid::uniform(levels), std::move(out));
}

Instance make_instance(const ExperimentConfig& c, std::size_t index) {
  Rng rng(c.seed, index);
  const AlgebraSpec& spec = c.algebras[index % c.algebras.size()];
  const AlgebraPtr alg = build_algebra(spec);
  FiltrationPtr filtration;
  if (c.filtration.random) {
    const auto& r = *c.filtration.random;
    const auto levels = static_cast<std::size_t>(rng.uniform_int(r.min_levels, r.max_levels));
    filtration = random_filtration(alg, rng, levels, r);
  } else {
    filtration = build_explicit_filtration(c, alg);
  }

  std::vector<AlgElement> f_values;
  for (std::size_t k = 0; k < filtration->size(); ++k) f_values.push_back(random_in(filtration->level(k), rng));
  AdaptedProcess f(filtration, std::move(f_values));

  AlgElement probe_a = random_element(alg, rng);
  AlgElement probe_b = random_element(alg, rng);
  if (!c.terminal.empty()) {
    AdaptedProcess x = martingale_from_terminal(filtration, AlgElement(alg, c.terminal));
    AdaptedProcess h = 0.5 * (x + adjoint(x));
    return {index, derive_seed(c.seed, index), filtration, x, x, x, h, probe_a, probe_b};
  }
  AdaptedProcess x = martingale_from_terminal(filtration, random_element(alg, rng));
  AdaptedProcess y = martingale_from_terminal(filtration, random_element(alg, rng));
  AdaptedProcess h =
      martingale_from_terminal(filtration, random_element(alg, rng, ElementKind::hermitian));
  return {index, derive_seed(c.seed, index), filtration, x, y, f, h, probe_a, probe_b};
}

FiltrationPtr stutter(const Filtration& f) {
  std::vector<SubalgebraLevel> levels;
  std::vector<double> times;
  for (std::size_t k = 0; k < f.size(); ++k) {
    levels.push_back(f.level(k));
    levels.push_back(f.level(k));
    const double t = f.grid()[k];
    const double next = k + 1 < f.size() ? f.grid()[k + 1] : t + 1.0;
    times.push_back(t);
    times.push_back(0.5 * (t + next));
  }
  return make_filtration(TimeGrid(std::move(times)), std::move(levels));
}

AdaptedProcess stutter(const AdaptedProcess& p, FiltrationPtr stuttered) {
  std::vector<AlgElement> v;
  for (const auto& x : p.values()) {
    v.push_back(x);
    v.push_back(x);
  }
  return AdaptedProcess(std::move(stuttered), std::move(v));
}

// ---------------------------------------------------------------------------

CheckRecord make_check(std::size_t instance, std::string name, std::string anchor, double residual,
                       double tolerance) {
  return {instance, std::move(name), std::move(anchor), residual, tolerance,
          std::isfinite(residual) && residual <= tolerance};
}

bool VerificationReport::all_pass() const { return failures() == 0; }

std::size_t VerificationReport::failures() const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.pass ? 0 : 1;
  for (const auto& c : certificates) n += c.valid ? 0 : 1;
  return n;
}

namespace {

double positive_part(double v) { return v > 0.0 ? v : 0.0; }

std::vector<Partition> chain_for(const ExperimentConfig& c, const Instance& inst) {
  return c.partition_chain.empty() ? dyadic_chain(inst.x.last()) : c.partition_chain;
}

double epsilon_for(const ExperimentConfig& c, const AdaptedProcess& x) {
  return c.epsilon.mode == EpsilonPolicy::Mode::fixed ? c.epsilon.value
                                                      : percentile_epsilon(x, c.epsilon.value);
}

struct Checks {
  std::size_t instance;
  std::vector<CheckRecord> out;
  void add(std::string name, std::string anchor, double residual, double tol) {
    out.push_back(make_check(instance, std::move(name), std::move(anchor), residual, tol));
  }
};

void conditional_expectation_checks(const Instance& inst, Checks& ck) {
  const Filtration& f = *inst.filtration;
  const AlgElement& a = inst.probe_a;
  const AlgElement& b = inst.probe_b;
  double duality = 0.0, preservation = 0.0, module = 0.0, positivity = 0.0, contraction = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const SubalgebraLevel& lv = f.level(k);
    const AlgElement ea = lv.expect(a);
    const AlgElement eb = lv.expect(b);
    duality = std::max(duality, std::abs(trace(ea * b) - trace(a * eb)));
    preservation = std::max(preservation, std::abs(trace(ea) - trace(a)));
    // module property with multipliers taken from the level itself
    const AlgElement l = lv.expect(b.adjoint());
    module = std::max(module, norm2(lv.expect(l * a * eb) - l * ea * eb));
    const AlgElement gap = hermitian_part(lv.expect(abs2(a)) - abs2(ea));
    positivity = std::max(positivity, positive_part(-min_eigenvalue(gap)));
    for (double p : {1.0, 2.0, 4.0, kInf})
      contraction = std::max(contraction, positive_part(lp_norm(ea, p) - lp_norm(a, p)));
  }
  double tower = 0.0;
  for (std::size_t s = 0; s < f.size(); ++s)
    for (std::size_t t = s; t < f.size(); ++t) tower = std::max(tower, tower_residual(f.levels(), a, s, t));
  ck.add("ce_duality", "tau(E_t(x) y) = tau(x E_t(y))", duality, 1e-10);
  ck.add("ce_trace_preservation", "tau(E_t(x)) = tau(x)", preservation, 1e-10);
  ck.add("ce_tower", "E_s(E_t(x)) = E_s(x), s <= t", tower, 1e-10);
  ck.add("ce_module_property", "E_t(a x b) = a E_t(x) b for a, b in A_t", module, 1e-9);
  ck.add("ce_two_positivity", "E_t|x|^2 >= |E_t x|^2", positivity, 1e-9);
  ck.add("ce_contraction", "||E_t x||_p <= ||x||_p, p in {1,2,4,inf}", contraction, 1e-9);
}

void martingale_checks(const Instance& inst, Checks& ck) {
  const AdaptedProcess& x = inst.x;
  const Filtration& f = *inst.filtration;
  ck.add("martingale", "E_s X(t) = X(s)", is_martingale(x, 1e-10).residual, 1e-10);
  ck.add("submartingale_abs2", "E_s|X(t)|^2 >= |X(s)|^2",
         positive_part(-is_submartingale_abs2(x, 1e-9).min_eigenvalue), 1e-9);
  double mono = 0.0;
  for (std::size_t s = 0; s < x.size(); ++s)
    for (std::size_t t = s; t < x.size(); ++t)
      for (double p : {2.0, 4.0}) mono = std::max(mono, positive_part(lp_norm(x[s], p) - lp_norm(x[t], p)));
  ck.add("norm_monotonicity", "||X(s)||_p <= ||X(t)||_p, p in {2,4}", mono, 1e-9);

  double e0 = 0.0, null = 0.0, lhs = 0.0;
  for (std::size_t k = 1; k < x.size(); ++k) {
    const AlgElement d = x[k] - x[k - 1];
    const SubalgebraLevel& prev = f.level(k - 1);
    e0 = std::max(e0, norm2(prev.expect(abs2(d)) - prev.expect(abs2(x[k]) - abs2(x[k - 1]))));
    null = std::max(null, norm2(prev.expect(d)));
    lhs += trace(abs2(d)).real();
  }
  const double rhs = trace(abs2(x.terminal())).real() - trace(abs2(x[0])).real();
  ck.add("increment_identity", "E_{k-1}|dX_k|^2 = E_{k-1}(|X_k|^2 - |X_{k-1}|^2)", e0, 1e-10);
  ck.add("trace_increment_identity", "sum_k tau|dX_k|^2 = tau|X_m|^2 - tau|X_0|^2",
         std::abs(lhs - rhs), 1e-10);
  ck.add("increments_conditionally_null", "E_{k-1} dX_k = 0", null, 1e-10);
}

void integral_checks(const Instance& inst, const std::vector<Partition>& chain, Checks& ck) {
  const AdaptedProcess& x = inst.x;
  const AdaptedProcess& f = inst.f;
  const Partition full = full_partition(x.last());
  const FiltrationPtr st = stutter(*inst.filtration);
  const AdaptedProcess xs = stutter(x, st);
  const AdaptedProcess fs = stutter(f, st);
  // every index where the stuttered processes change, plus the endpoints
  Partition change_points;
  for (std::size_t k = 0; k < x.size(); ++k) change_points.push_back(2 * k);
  change_points.push_back(xs.last());

  for (Side side : {Side::left, Side::right}) {
    const std::string s = to_string(side);
    const AlgElement exact = integral_sum(x, f, side, full).value;
    const double inv = std::max(norm2(integral_sum(xs, fs, side, change_points).value - exact),
                                norm2(integral_sum(xs, fs, side, full_partition(xs.last())).value - exact));
    ck.add("refinement_invariance_" + s, "S(theta') = S(theta'') once theta' holds every change point",
           inv, 1e-12);
    const std::vector<double> table = refinement_table(x, f, side, chain);
    ck.add("refinement_terminal_" + s, "||S_full - S_theta_last|| on a chain ending at the full grid",
           chain.back() == full ? table.back() : 0.0, 1e-12);
    double orth = 0.0;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      const Partition& fine = i + 1 < chain.size() ? chain[i + 1] : full;
      const RefinementOrthogonality o = refinement_orthogonality(x, f, side, chain[i], fine);
      orth = std::max(orth, std::abs(o.difference_norm_sq - o.diagonal_sum));
    }
    ck.add("refinement_orthogonality_" + s, "||S'' - S'||_2^2 = sum of diagonal terms", orth, 1e-9);
    const AdaptedProcess ip = integral_process(x, f, side);
    ck.add("integral_martingale_" + s, "integral process is a martingale", is_martingale(ip, 1e-9).residual,
           1e-9);
  }
  const AlgElement l = left_sum(x, f, full).value;
  const AlgElement r = right_sum(adjoint(x), adjoint(f), full).value;
  ck.add("integral_adjoint_relation", "(sum dX f)* = sum f* dX*", norm2(l.adjoint() - r), 1e-12);
  const double lin_f = norm2(left_sum(x, f + inst.y, full).value - l - left_sum(x, inst.y, full).value);
  const double lin_x = norm2(left_sum(x + inst.y, f, full).value - l - left_sum(inst.y, f, full).value);
  ck.add("integral_linearity", "left sum additive in integrand and integrator", std::max(lin_f, lin_x), 1e-10);
}

void decomposition_checks(const Instance& inst, const std::vector<Partition>& chain, Checks& ck) {
  const AdaptedProcess& x = inst.x;
  const Filtration& f = *inst.filtration;
  const Partition full = full_partition(x.last());

  double bracket = 0.0;
  for (const auto& p : chain) bracket = std::max(bracket, norm2(bracket_via_integrals(x, p) - quadratic_variation_sum(x, p)));
  bracket = std::max(bracket, norm2(bracket_via_integrals(x, full) - quadratic_variation_sum(x, full)));
  ck.add("bracket_identity", "|X_m|^2 - |X_0|^2 - int dX* X - int X* dX = sum |dX|^2", bracket, 1e-10);

  const Decomposition pred = doob_meyer_decompose(x, DecompositionVariant::predictable);
  const Decomposition brk = doob_meyer_decompose(x, DecompositionVariant::bracket);
  for (const Decomposition* d : {&pred, &brk}) {
    const std::string s = d->variant == DecompositionVariant::predictable ? "predictable" : "bracket";
    ck.add("decomposition_reconstruction_" + s, "|X(t)|^2 = M(t) + A(t)", d->residuals.reconstruction, 1e-10);
    ck.add("decomposition_initial_" + s, "A(0) = 0", d->residuals.initial, 1e-10);
    ck.add("decomposition_increasing_" + s, "A(s) <= A(t)", d->residuals.monotonicity, 1e-9);
    ck.add("decomposition_martingale_" + s, "M is a martingale", d->residuals.martingale, 1e-9);
  }
  ck.add("compensator_predictable", "A(t_j) in A_{t_{j-1}}", pred.residuals.predictability, 1e-10);

  const AdaptedProcess& a = pred.increasing_part;
  double e5 = 0.0;
  for (std::size_t j = 1; j < x.size(); ++j) {
    const SubalgebraLevel& prev = f.level(j - 1);
    e5 = std::max(e5, norm2(prev.expect(a[j] - a[j - 1]) - (prev.expect(abs2(x[j])) - abs2(x[j - 1]))));
  }
  ck.add("compensator_increment_identity", "E_{j-1}(dA_j) = E_{j-1}|X_j|^2 - |X_{j-1}|^2", e5, 1e-10);

  const Pairing pairing = naturality_pairing(a, inst.probe_a, full);
  ck.add("naturality_pairing", "tau(sum E_{k-1}(y) dA_k) = tau(y A(t_m))", std::abs(pairing.lhs - pairing.rhs),
         1e-10);

  double orth = 0.0, bound = 0.0, defect = 0.0;
  std::vector<Partition> parts = chain;
  parts.push_back(full);
  for (const auto& p : parts) {
    const NaturalityGap g = naturality_gap(x, p);
    orth = std::max(orth, g.orthogonality_residual());
    bound = std::max(bound, g.bound_excess());
    defect = std::max(defect, positive_part(naturality_defect(x, inst.probe_a, p) - norm2(inst.probe_a) * g.gap));
  }
  ck.add("naturality_orthogonality", "g^2 = sum_k ||D_k||_2^2", orth, 1e-9);
  ck.add("naturality_bound", "g^2 <= 4 tau(sum |dX_k|^4)", bound, 1e-9);
  ck.add("naturality_defect_bound", "|tau(y (sum E_{k-1}|dX|^2 - <X>))| <= ||y||_2 g", defect, 1e-9);

  const AdaptedProcess diff = pred.martingale_part - brk.martingale_part;
  ck.add("uniqueness_residual_variants", "tau(sum (dM)^2) = tau(M_m^2) - tau(M_0^2)", uniqueness_residual(diff),
         1e-10);
  ck.add("uniqueness_residual_selfadjoint", "tau(sum (dM)^2) = tau(M_m^2) - tau(M_0^2)",
         uniqueness_residual(inst.h), 1e-10);
}

void cross_variation_checks(const Instance& inst, const std::vector<Partition>& chain, Checks& ck) {
  const AdaptedProcess& x = inst.x;
  const AdaptedProcess& y = inst.y;
  const AdaptedProcess& h = inst.h;
  double expansion = 0.0, polar = 0.0, diag = 0.0, sesq = 0.0;
  std::vector<Partition> parts = chain;
  parts.push_back(full_partition(x.last()));
  const cplx i(0.0, 1.0);
  for (const auto& p : parts) {
    const CrossVariation xy = cross_variation(x, y, p);
    expansion = std::max(expansion, xy.expansion_residual);
    polar = std::max(polar, xy.polarization_residual);
    diag = std::max(diag, norm2(cross_variation(x, x, p).value - quadratic_variation_sum(x, p)));
    const AlgElement xh = cross_variation(x, h, p).value;
    const AlgElement hy = cross_variation(h, y, p).value;
    sesq = std::max(sesq, norm2(cross_variation(x, y + h, p).value - xy.value - xh));
    sesq = std::max(sesq, norm2(cross_variation(x + h, y, p).value - xy.value - hy));
    sesq = std::max(sesq, norm2(cross_variation(i * x, y, p).value + i * xy.value));
  }
  ck.add("cross_variation_expansion", "<X,Y> = X*Y - X*(0)Y(0) - int dX* Y - int X* dY", expansion, 1e-10);
  ck.add("cross_variation_polarization", "<X,Y> = (1/4){<X+Y> - <X-Y> + i[<iX+Y> - <iX-Y>]}", polar, 1e-10);
  ck.add("cross_variation_diagonal", "<X,X> = <X>", diag, 1e-10);
  ck.add("cross_variation_sesquilinear", "<X,Y> additive in Y, conjugate-linear in X", sesq, 1e-10);
}

void segal_checks(const Instance& inst, double epsilon, Checks& ck) {
  const ProjectionCertificate cert = kolmogorov_projection(inst.x, epsilon, Side::left);
  const ModulusTable left = segal_modulus(inst.x, cert.projection, Compression::left);
  const ModulusTable right = segal_modulus(inst.x, cert.projection, Compression::right);
  const ModulusTable weak = segal_modulus(inst.x, cert.projection, Compression::weak);
  double dominated = 0.0, monotone = 0.0;
  for (std::size_t g = 0; g < weak.moduli.size(); ++g) {
    dominated = std::max(dominated, positive_part(weak.moduli[g] - std::min(left.moduli[g], right.moduli[g])));
    if (g > 0) monotone = std::max(monotone, positive_part(left.moduli[g - 1] - left.moduli[g]));
  }
  ck.add("segal_weak_dominated", "weak modulus <= min(left, right)", dominated, 1e-10);
  ck.add("segal_left_small_gap", "||e[X(t)-X(s)]|| <= 2 eps at the smallest gap",
         positive_part(left.moduli.front() - 2.0 * epsilon), 1e-9);
  ck.add("segal_monotone", "modulus nondecreasing in the gap", monotone, 0.0);
}

void sort_checks(std::vector<CheckRecord>& checks) {
  std::stable_sort(checks.begin(), checks.end(), [](const CheckRecord& a, const CheckRecord& b) {
    return a.instance < b.instance || (a.instance == b.instance && a.name < b.name);
  });
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

template <class T>
std::vector<T> flatten(std::vector<std::vector<T>> nested) {
  std::vector<T> out;
  for (auto& v : nested) std::move(v.begin(), v.end(), std::back_inserter(out));
  return out;
}

}  // namespace

std::vector<CheckRecord> verify_instance(const Instance& inst) {
  Checks ck{inst.index, {}};
  const std::vector<Partition> chain = dyadic_chain(inst.x.last());
  conditional_expectation_checks(inst, ck);
  martingale_checks(inst, ck);
  integral_checks(inst, chain, ck);
  decomposition_checks(inst, chain, ck);
  cross_variation_checks(inst, chain, ck);
  return ck.out;
}

VerificationReport cmd_verify(const ExperimentConfig& c, Execution exec) {
  validate(c);
  Stopwatch clock;
  auto per_instance = map_instances<std::vector<CheckRecord>>(c.instances, exec, [&](std::size_t i) {
    const Instance inst = make_instance(c, i);
    Checks ck{i, {}};
    const std::vector<Partition> chain = chain_for(c, inst);
    conditional_expectation_checks(inst, ck);
    martingale_checks(inst, ck);
    integral_checks(inst, chain, ck);
    decomposition_checks(inst, chain, ck);
    cross_variation_checks(inst, chain, ck);
    segal_checks(inst, epsilon_for(c, inst.x), ck);
    return ck.out;
  });
  VerificationReport r;
  r.command = "verify";
  r.config = to_json(c);
  r.checks = flatten(std::move(per_instance));
  sort_checks(r.checks);
  r.elapsed_seconds = clock.seconds();
  return r;
}

VerificationReport cmd_ratios(const ExperimentConfig& c, Execution exec) {
  validate(c);
  Stopwatch clock;
  struct Out {
    std::vector<RatioRow> rows;
    std::vector<CheckRecord> checks;
  };
  auto per_instance = map_instances<Out>(c.instances, exec, [&](std::size_t i) {
    const Instance inst = make_instance(c, i);
    // centred copy: X(0) = 0
    const AdaptedProcess x = inst.x - constant_process(inst.filtration, inst.x[0]);
    const AdaptedProcess x3 = cplx(3.0) * x;
    const Partition full = full_partition(x.last());
    Checks ck{i, {}};
    Out out;
    double scale_bg = 0.0, scale_dual = 0.0;
    for (double p : c.p_values) {
      RatioRow row{p, i, std::nullopt, std::nullopt, c.seed};
      try {
        row.bg_ratio = bg_ratio(x, full, p);
        scale_bg = std::max(scale_bg, std::abs(bg_ratio(x3, full, p) - *row.bg_ratio));
      } catch (const UndefinedRatio&) {
      }
      try {
        row.dual_doob_ratio = dual_doob_ratio(x, full, p);
        scale_dual = std::max(scale_dual, std::abs(dual_doob_ratio(x3, full, p) - *row.dual_doob_ratio));
      } catch (const UndefinedRatio&) {
      }
      out.rows.push_back(row);
    }
    const double sq = square_function_norm(x, full, 2.0);
    const double xm = norm2(x.terminal());
    ck.add("p2_square_function_identity", "||(sum |dX_k|^2)^(1/2)||_2^2 = ||X_m||_2^2 when X_0 = 0",
           std::abs(sq * sq - xm * xm), 1e-10);
    double p2_excess = 0.0, p2_dual = 0.0;
    try {
      p2_excess = positive_part(bg_ratio(x, full, 2.0) - 1.0);
      p2_dual = std::abs(dual_doob_ratio(x, full, 2.0) - 1.0);
    } catch (const UndefinedRatio&) {
    }
    ck.add("p2_ratio_bound", "bg ratio at p = 2 is at most 1", p2_excess, 1e-9);
    ck.add("p2_dual_trace_equality", "tau(sum E_{k-1}|dX_k|^2) = tau(sum |dX_k|^2)", p2_dual, 1e-10);
    ck.add("scale_invariance_bg", "bg ratio unchanged under X -> 3X", scale_bg, 1e-10);
    ck.add("scale_invariance_dual", "dual Doob ratio unchanged under X -> 3X", scale_dual, 1e-10);
    out.checks = std::move(ck.out);
    return out;
  });

  VerificationReport r;
  r.command = "ratios";
  r.config = to_json(c);
  for (auto& o : per_instance) {
    std::move(o.rows.begin(), o.rows.end(), std::back_inserter(r.ratio_rows));
    std::move(o.checks.begin(), o.checks.end(), std::back_inserter(r.checks));
  }
  std::stable_sort(r.ratio_rows.begin(), r.ratio_rows.end(), [](const RatioRow& a, const RatioRow& b) {
    return a.p < b.p || (a.p == b.p && a.instance < b.instance);
  });
  for (double p : c.p_values) {
    std::vector<double> bg, dual;
    for (const auto& row : r.ratio_rows) {
      if (row.p != p) continue;
      if (row.bg_ratio) bg.push_back(*row.bg_ratio);
      if (row.dual_doob_ratio) dual.push_back(*row.dual_doob_ratio);
    }
    r.ratio_summary.push_back(summarize_ratios("bg", p, bg, c.seed));
    r.ratio_summary.push_back(summarize_ratios("dual_doob", p, dual, c.seed));
  }
  sort_checks(r.checks);
  r.elapsed_seconds = clock.seconds();
  return r;
}

VerificationReport cmd_kolmogorov(const ExperimentConfig& c, Execution exec) {
  validate(c);
  Stopwatch clock;
  struct Out {
    std::vector<CertificateRecord> certs;
    std::vector<CheckRecord> checks;
  };
  auto per_instance = map_instances<Out>(c.instances, exec, [&](std::size_t i) {
    const Instance inst = make_instance(c, i);
    const double eps = epsilon_for(c, inst.x);
    Checks ck{i, {}};
    Out out;
    for (Side side : {Side::left, Side::right}) {
      const ProjectionCertificate cert = kolmogorov_projection(inst.x, eps, side);
      const std::string s = to_string(side);
      out.certs.push_back({i, side, eps, cert.trace_defect, cert.trace_bound, cert.max_sup_norm(),
                           cert.chain_defect, cert.valid()});
      ck.add("kolmogorov_trace_bound_" + s, "tau(e^perp) <= ||X_m||_2^2 / eps^2",
             positive_part(cert.trace_defect - cert.trace_bound), 1e-10);
      ck.add("kolmogorov_sup_norm_" + s, "||e X_n|| <= eps (left), ||X_n e|| <= eps (right)",
             positive_part(cert.max_sup_norm() - eps), 1e-9);
      ck.add("kolmogorov_chain_" + s, "f_1 >= f_2 >= ... >= f_m", cert.chain_defect, 1e-9);
    }
    segal_checks(inst, eps, ck);
    out.checks = std::move(ck.out);
    return out;
  });
  VerificationReport r;
  r.command = "kolmogorov";
  r.config = to_json(c);
  for (auto& o : per_instance) {
    std::move(o.certs.begin(), o.certs.end(), std::back_inserter(r.certificates));
    std::move(o.checks.begin(), o.checks.end(), std::back_inserter(r.checks));
  }
  sort_checks(r.checks);
  r.elapsed_seconds = clock.seconds();
  return r;
}

VerificationReport cmd_refine(const ExperimentConfig& c, Execution exec) {
  validate(c);
  Stopwatch clock;
  struct Out {
    std::vector<RefineRow> rows;
    std::vector<CheckRecord> checks;
  };
  auto per_instance = map_instances<Out>(c.instances, exec, [&](std::size_t i) {
    const Instance inst = make_instance(c, i);
    std::vector<Partition> chain = chain_for(c, inst);
    const Partition full = full_partition(inst.x.last());
    if (chain.back() != full) chain.push_back(full);
    Checks ck{i, {}};
    Out out;
    std::vector<double> gaps;
    double orth = 0.0, bound = 0.0;
    for (const auto& p : chain) {
      const NaturalityGap g = naturality_gap(inst.x, p);
      gaps.push_back(g.gap);
      orth = std::max(orth, g.orthogonality_residual());
      bound = std::max(bound, g.bound_excess());
    }
    for (Side side : {Side::left, Side::right}) {
      const std::vector<double> table = refinement_table(inst.x, inst.f, side, chain);
      for (std::size_t l = 0; l < chain.size(); ++l)
        out.rows.push_back({i, side, l, chain[l].size(), table[l], gaps[l]});
      ck.add("refine_terminal_" + to_string(side), "terminal refinement entry vanishes", table.back(), 1e-12);
    }
    ck.add("naturality_orthogonality", "g^2 = sum_k ||D_k||_2^2", orth, 1e-9);
    ck.add("naturality_bound", "g^2 <= 4 tau(sum |dX_k|^4)", bound, 1e-9);
    out.checks = std::move(ck.out);
    return out;
  });
  VerificationReport r;
  r.command = "refine";
  r.config = to_json(c);
  for (auto& o : per_instance) {
    std::move(o.rows.begin(), o.rows.end(), std::back_inserter(r.refine_rows));
    std::move(o.checks.begin(), o.checks.end(), std::back_inserter(r.checks));
  }
  sort_checks(r.checks);
  r.elapsed_seconds = clock.seconds();
  return r;
}

}  // namespace ncmart::harness
