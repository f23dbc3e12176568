// doob_meyer.hpp: quadratic variation, compensator and the Doob-Meyer
// decomposition of |X(t)|² for a martingale X on a step filtration.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/processes.hpp"

#include <vector>

namespace ncmart {

/// Σ_k |ΔX(θ_k)|².
AlgElement quadratic_variation_sum(const AdaptedProcess& x, const Partition& partition);

/// t_j ↦ Σ_{k ≤ j} |ΔX(t_k)|² over the full grid.
AdaptedProcess quadratic_variation_process(const AdaptedProcess& x);

/// |X(t_m)|² − |X(0)|² − Σ ΔX*(θ_k) X(θ_{k−1}) − Σ X*(θ_{k−1}) ΔX(θ_k).
/// Algebraically identical to quadratic_variation_sum on every partition.
AlgElement bracket_via_integrals(const AdaptedProcess& x, const Partition& partition);

/// A(t_j) = Σ_{k ≤ j} E_{k−1}(|X(t_k)|² − |X(t_{k−1})|²).  NotMartingale for
/// non-martingale input (tolerance 1e-9).
AdaptedProcess compensator(const AdaptedProcess& x);

/// max_j ‖E_{j−1} A(t_j) − A(t_j)‖₂ (and ‖A(0)‖₂ for j = 0).
double predictability_residual(const AdaptedProcess& a);

/// Most negative eigenvalue of A(t_j) − A(t_{j−1}) over j (0 if increasing).
double monotonicity_defect(const AdaptedProcess& a);

enum class DecompositionVariant { predictable, bracket };

struct DecompositionResiduals {
  double reconstruction = 0.0;    // max_t ‖|X(t)|² − M(t) − A(t)‖₂
  double initial = 0.0;           // ‖A(0)‖₂
  double monotonicity = 0.0;      // monotonicity_defect(A)
  double predictability = 0.0;    // predictability_residual(A)
  double martingale = 0.0;        // is_martingale(M).residual
};

struct Decomposition {
  DecompositionVariant variant;
  AdaptedProcess martingale_part;
  AdaptedProcess increasing_part;
  DecompositionResiduals residuals;
};

/// |X(t)|² = M(t) + A(t).  `predictable` uses the compensator, `bracket` the
/// quadratic variation over the full grid.
Decomposition doob_meyer_decompose(const AdaptedProcess& x, DecompositionVariant variant);

struct Pairing {
  cplx lhs;  // τ(Σ_k E_{k−1}(y) ΔA(θ_k))
  cplx rhs;  // τ(y A(t_m))
};

Pairing naturality_pairing(const AdaptedProcess& a, const AlgElement& y, const Partition& partition);

struct NaturalityGap {
  double gap = 0.0;                 // g = ‖Σ_k D_k‖₂, D_k = |ΔX_k|² − E_{k−1}|ΔX_k|²
  double termwise_sum_sq = 0.0;     // Σ_k ‖D_k‖₂²
  double fourth_moment_bound = 0.0; // 4 τ(Σ_k |ΔX_k|⁴)
  /// |g² − Σ_k ‖D_k‖₂²|; vanishes because the D_k are orthogonal.
  double orthogonality_residual() const;
  /// max(0, g² − 4 τ(Σ|ΔX_k|⁴)).
  double bound_excess() const;
};

NaturalityGap naturality_gap(const AdaptedProcess& x, const Partition& partition);

/// |τ(y · (Σ E_{k−1}|ΔX_k|² − Σ |ΔX_k|²))|, bounded by ‖y‖₂ · naturality gap.
double naturality_defect(const AdaptedProcess& x, const AlgElement& y, const Partition& partition);

/// |τ(Σ_k (ΔM_k)²) − (τ(M(t_m)²) − τ(M(0)²))| over the full grid.  M must be
/// a selfadjoint martingale (DomainError / NotMartingale).
double uniqueness_residual(const AdaptedProcess& m);

struct CrossVariation {
  AlgElement value;                  // Σ_k ΔX_k* ΔY_k
  double expansion_residual = 0.0;   // vs X*Y − X*(0)Y(0) − ∫dX* Y − ∫X* dY
  double polarization_residual = 0.0;
};

CrossVariation cross_variation(const AdaptedProcess& x, const AdaptedProcess& y,
                               const Partition& partition);

}  // namespace ncmart
