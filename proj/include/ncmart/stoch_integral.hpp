// stoch_integral.hpp: left/right stochastic integral sums over partitions of
// a step filtration and the integral processes they define.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/processes.hpp"

#include <string>
#include <vector>

namespace ncmart {

enum class Side { left, right };

std::string to_string(Side side);

struct IntegralSum {
  Side side = Side::left;
  AlgElement value;
  Partition partition;
  std::string integrator_id;
  std::string integrand_id;
};

/// Σ_k ΔX(θ_k) f(θ_{k−1}).
IntegralSum left_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                     const Partition& partition, std::string integrator_id = "X",
                     std::string integrand_id = "f");
/// Σ_k f(θ_{k−1}) ΔX(θ_k).
IntegralSum right_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                      const Partition& partition, std::string integrator_id = "X",
                      std::string integrand_id = "f");
IntegralSum integral_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                         Side side, const Partition& partition);

/// t_j ↦ integral sum over the full grid up to index j.  The integrator must be
/// a martingale within 1e-9 (NotMartingale otherwise).
AdaptedProcess integral_process(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                                Side side);

/// sup_u ‖f(u)‖_∞.
double integrand_bound(const AdaptedProcess& integrand);

/// True iff every index of `coarse` appears in `fine`.
bool is_refinement(const Partition& coarse, const Partition& fine);

/// θ_0 = {0, m} ⊂ ... ⊂ full grid, each step halving the dyadic stride.
std::vector<Partition> dyadic_chain(std::size_t last);

/// Entry i is ‖S_{θ_{i+1}} − S_{θ_i}‖₂, where θ_L (one past the end of the
/// chain) is the full grid.  The chain must be nested (InvalidPartition).
std::vector<double> refinement_table(const AdaptedProcess& integrator,
                                     const AdaptedProcess& integrand, Side side,
                                     const std::vector<Partition>& chain);

/// Both sides of ‖S_fine − S_coarse‖₂² = Σ_j ‖T_j‖₂², where T_j are the
/// per-fine-interval terms of the difference.  Equal when the integrator is a
/// martingale.
struct RefinementOrthogonality {
  double difference_norm_sq = 0.0;
  double diagonal_sum = 0.0;
};

RefinementOrthogonality refinement_orthogonality(const AdaptedProcess& integrator,
                                                 const AdaptedProcess& integrand, Side side,
                                                 const Partition& coarse, const Partition& fine);

}  // namespace ncmart
