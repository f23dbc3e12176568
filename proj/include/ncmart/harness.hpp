// harness.hpp: experiment configuration, seeded instance generation and the
// verify / ratios / kolmogorov / refine drivers behind the CLI.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/cond_expect.hpp"
#include "ncmart/errors.hpp"
#include "ncmart/inequalities.hpp"
#include "ncmart/processes.hpp"
#include "ncmart/random.hpp"
#include "ncmart/sweep.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ncmart::harness {

inline constexpr int kConfigVersion = 1;

/// Invalid configuration; `field()` is a JSON-pointer-like path ("filtration.levels[2]").
class ConfigError : public Error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : Error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct AlgebraSpec {
  std::vector<int> block_dims;
  std::vector<double> block_weights;
};

struct LevelSpec {
  LevelKind kind = LevelKind::scalars;
  CoordinatePartition groups;             // block_full / block_scalar
  std::vector<std::vector<Matrix>> basis; // general: one block list per element
};

struct RandomFiltrationSpec {
  int min_levels = 2;
  int max_levels = 8;
  double general_probability = 0.25;    // per level: serve through the Gram engine
  double conjugate_probability = 0.25;  // per instance: rotate every level by a random unitary
};

struct FiltrationSpec {
  std::vector<double> times;  // empty: 0, 1, 2, ...
  std::vector<LevelSpec> levels;
  std::optional<RandomFiltrationSpec> random;
};

struct EpsilonPolicy {
  enum class Mode { fixed, percentile };
  Mode mode = Mode::percentile;
  double value = 30.0;
};

struct ExperimentConfig {
  int spec_version = kConfigVersion;
  std::string preset;
  std::vector<AlgebraSpec> algebras;
  FiltrationSpec filtration;
  std::uint64_t seed = 1;
  std::size_t instances = 1;
  std::vector<double> p_values{3.0, 4.0, 8.0};
  EpsilonPolicy epsilon;
  std::vector<Partition> partition_chain;  // empty: dyadic chain per instance
  std::vector<Matrix> terminal;            // optional explicit terminal value
  std::string output_path;
  std::string format;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& c);
/// Throws ConfigError naming the offending field.
void validate(const ExperimentConfig& c);

ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

// --- instances -------------------------------------------------------------

/// Everything one seeded instance needs.  X, Y, H are martingales (H
/// selfadjoint); f is adapted but generic.
struct Instance {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  FiltrationPtr filtration;
  AdaptedProcess x;
  AdaptedProcess y;
  AdaptedProcess f;
  AdaptedProcess h;
  AlgElement probe_a;
  AlgElement probe_b;
};

/// Random increasing filtration with `levels` levels ending at the full algebra.
FiltrationPtr random_filtration(const AlgebraPtr& algebra, Rng& rng, std::size_t levels,
                                const RandomFiltrationSpec& spec);

Instance make_instance(const ExperimentConfig& c, std::size_t index);

/// The same filtration with every level listed twice (2L grid points).
FiltrationPtr stutter(const Filtration& f);
/// Values repeated to match `stutter(p.filtration())`.
AdaptedProcess stutter(const AdaptedProcess& p, FiltrationPtr stuttered);

// --- reports ---------------------------------------------------------------

struct CheckRecord {
  std::size_t instance = 0;
  std::string name;
  std::string anchor;  // the identity or bound being checked
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

CheckRecord make_check(std::size_t instance, std::string name, std::string anchor,
                       double residual, double tolerance);

struct RatioRow {
  double p = 0.0;
  std::size_t instance = 0;
  std::optional<double> bg_ratio;
  std::optional<double> dual_doob_ratio;
  std::uint64_t seed = 0;
};

struct CertificateRecord {
  std::size_t instance = 0;
  Side side = Side::left;
  double epsilon = 0.0;
  double trace_defect = 0.0;
  double trace_bound = 0.0;
  double max_sup_norm = 0.0;
  double chain_defect = 0.0;
  bool valid = false;
};

struct RefineRow {
  std::size_t instance = 0;
  Side side = Side::left;
  std::size_t level = 0;
  std::size_t partition_size = 0;
  double refinement_entry = 0.0;
  double naturality_gap = 0.0;
};

struct VerificationReport {
  std::string command;
  nlohmann::json config;
  std::vector<CheckRecord> checks;
  std::vector<RatioRow> ratio_rows;
  std::vector<RatioEstimate> ratio_summary;
  std::vector<CertificateRecord> certificates;
  std::vector<RefineRow> refine_rows;
  double elapsed_seconds = 0.0;

  bool all_pass() const;
  std::size_t failures() const;
};

/// Per-instance identity suite (exposed for tests).
std::vector<CheckRecord> verify_instance(const Instance& inst);

VerificationReport cmd_verify(const ExperimentConfig& c, Execution exec = Execution::parallel);
VerificationReport cmd_ratios(const ExperimentConfig& c, Execution exec = Execution::parallel);
VerificationReport cmd_kolmogorov(const ExperimentConfig& c, Execution exec = Execution::parallel);
VerificationReport cmd_refine(const ExperimentConfig& c, Execution exec = Execution::parallel);

nlohmann::json to_json(const VerificationReport& r, bool include_timing = true);
/// Numeric payload: the report without timing, serialized.
std::string payload(const VerificationReport& r);
/// ratios → p,instance,bg_ratio,dual_doob_ratio,seed; refine → refine rows;
/// otherwise the check table.
std::string to_csv(const VerificationReport& r);
void write_report(const VerificationReport& r, const std::string& path, const std::string& format);

}  // namespace ncmart::harness
