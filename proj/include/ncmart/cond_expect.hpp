// cond_expect.hpp: trace-preserving conditional expectations onto unital
// *-subalgebras, i.e. orthogonal projections in the inner product τ(a* b).

#pragma once

#include "ncmart/algebra.hpp"

#include <Eigen/LU>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ncmart {

enum class LevelKind { scalars, block_full, block_scalar, general };

std::string to_string(LevelKind kind);

/// For each algebra block, a partition of its coordinates {0..n_b-1} into groups.
using CoordinatePartition = std::vector<std::vector<std::vector<int>>>;

/// Every coordinate of every block in its own group.
CoordinatePartition singleton_partition(const TracialAlgebra& algebra);
/// One group per block.
CoordinatePartition trivial_partition(const TracialAlgebra& algebra);

/// Conditional expectations with a Gram matrix worse than this are rejected.
inline constexpr double kMaxGramCondition = 1e12;

class SubalgebraLevel {
 public:
  /// C·1.
  static SubalgebraLevel scalars(AlgebraPtr algebra);
  /// ⊕ over groups G of the full matrix algebra on G (block compression).
  static SubalgebraLevel block_full(AlgebraPtr algebra, CoordinatePartition partition);
  /// span{P_G}: one scalar per group.
  static SubalgebraLevel block_scalar(AlgebraPtr algebra, CoordinatePartition partition);
  /// Span of an arbitrary basis; must contain 1 and be *-closed (and closed
  /// under products when `check_products`, an O(d²) check).  Throws
  /// IllConditionedBasis for (near) linearly dependent bases.
  static SubalgebraLevel general(AlgebraPtr algebra, std::vector<AlgElement> basis,
                                 bool check_products = true);

  LevelKind kind() const { return kind_; }
  const AlgebraPtr& algebra() const { return algebra_; }
  const CoordinatePartition& partition() const { return partition_; }
  /// A linear basis of the subalgebra, for any kind.
  const std::vector<AlgElement>& basis() const { return basis_; }
  std::size_t dimension() const { return basis_.size(); }
  /// Condition number of the Gram matrix of `basis()`.
  double gram_condition() const { return gram_condition_; }

  /// The same subalgebra served by the Gram engine.
  SubalgebraLevel as_general() const;

  /// Closed form where one exists, Gram solve otherwise.
  AlgElement expect(const AlgElement& x) const;
  /// Always the Gram solve, regardless of kind.
  AlgElement expect_gram(const AlgElement& x) const;

  /// ‖E(x) − x‖₂.
  double membership_residual(const AlgElement& x) const;

 private:
  SubalgebraLevel(LevelKind kind, AlgebraPtr algebra, CoordinatePartition partition,
                  std::vector<AlgElement> basis);

  LevelKind kind_;
  AlgebraPtr algebra_;
  CoordinatePartition partition_;
  std::vector<AlgElement> basis_;
  Eigen::FullPivLU<Matrix> gram_lu_;
  double gram_condition_ = 1.0;
};

AlgElement expect(const SubalgebraLevel& level, const AlgElement& x);

/// E_s applied to E_t(x) for s ≤ t.
AlgElement expect_chain(std::span<const SubalgebraLevel> levels, const AlgElement& x,
                        std::size_t s_index, std::size_t t_index);

/// ‖E_s(E_t x) − E_s x‖₂, the tower-identity residual.
double tower_residual(std::span<const SubalgebraLevel> levels, const AlgElement& x,
                      std::size_t s_index, std::size_t t_index);

}  // namespace ncmart
