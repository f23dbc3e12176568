// inequalities.hpp: square-function ratios, Chebyshev and Kolmogorov-type
// projections, and Segal-continuity moduli.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/processes.hpp"
#include "ncmart/stoch_integral.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ncmart {

/// Denominators at or below this make a ratio undefined.
inline constexpr double kRatioFloor = 1e-12;

/// ‖(Σ_k |ΔX_k|²)^{1/2}‖_p.
double square_function_norm(const AdaptedProcess& x, const Partition& partition, double p);

/// ‖(Σ|ΔX_k|²)^{1/2}‖_p / ‖X(t_m)‖_p, for p ≥ 2.  UndefinedRatio if the
/// denominator is ≤ kRatioFloor.
double bg_ratio(const AdaptedProcess& x, const Partition& partition, double p);

/// ‖Σ E_{k−1}|ΔX_k|²‖_{p/2} / ‖Σ |ΔX_k|²‖_{p/2}, for p ≥ 2.
double dual_doob_ratio(const AdaptedProcess& x, const Partition& partition, double p);

/// Sweep statistics for one exponent.
struct RatioEstimate {
  std::string statistic;  // "bg" or "dual_doob"
  double p = 0.0;
  double ratio = 0.0;  // mean over instances
  std::size_t instance_count = 0;
  double max_ratio = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  std::uint64_t seed = 0;
};

/// Nearest-rank quantile, q ∈ [0, 1].  Empty input gives NaN.
double quantile(std::vector<double> values, double q);

RatioEstimate summarize_ratios(std::string statistic, double p, const std::vector<double>& ratios,
                               std::uint64_t seed);

struct ChebyshevResult {
  Projection projection;     // e_{[η, ∞)}(x)
  double trace_e = 0.0;      // τ(e)
  double trace_bound = 0.0;  // τ(x)/η
  double compressed_norm = 0.0;  // ‖(1−e) x (1−e)‖_∞
  bool holds = false;        // both bounds at 1e-10
};

/// DomainError unless x ≥ 0 within 1e-10 and η > 0.
ChebyshevResult chebyshev_projection(const AlgElement& x, double eta);

struct ProjectionCertificate {
  Projection projection;
  double epsilon = 0.0;
  double trace_defect = 0.0;  // τ(e^⊥)
  double trace_bound = 0.0;   // ‖X_m‖₂² / ε²
  std::vector<double> sup_norms;  // ‖e X_n‖_∞ (left) or ‖X_n e‖_∞ (right)
  Side side = Side::left;
  std::vector<Projection> chain;  // f_1 ≥ f_2 ≥ ... ≥ f_m
  /// Largest violation of f_{n+1} ≤ f_n over the chain (0 when monotone).
  double chain_defect = 0.0;

  double trace_slack() const { return trace_bound - trace_defect; }
  double max_sup_norm() const;
  /// τ(e^⊥) ≤ bound + 1e-10, sup norms ≤ ε + 1e-9, chain monotone at 1e-9.
  bool valid() const;
};

/// Builds e = e_1 ∧ ... ∧ e_m with e_n the spectral projection of
/// f_{n−1}|X_n^*|²f_{n−1} on [0, ε²) (left) or of f_{n−1}|X_n|²f_{n−1} (right).
/// NotMartingale unless X is a martingale within 1e-9.
ProjectionCertificate kolmogorov_projection(const AdaptedProcess& x, double epsilon, Side side);

/// ε at the given percentile (0–100) of {‖X(t_k)‖_∞}.
double percentile_epsilon(const AdaptedProcess& x, double percentile);

enum class Compression { left, right, weak };

struct ModulusTable {
  std::vector<double> gaps;     // distinct values of t − s over grid pairs, ascending
  std::vector<double> moduli;   // sup over |t − s| ≤ gap of the compressed increment norm
};

/// ‖e[X(t) − X(s)]‖_∞ (left), ‖[X(t) − X(s)]e‖_∞ (right) or ‖e[X(t) − X(s)]e‖_∞ (weak).
ModulusTable segal_modulus(const AdaptedProcess& x, const Projection& e, Compression side);

}  // namespace ncmart
