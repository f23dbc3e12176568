// processes.hpp: time grids, step filtrations and adapted processes.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/cond_expect.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace ncmart {

/// Adaptedness, filtration inclusion and martingale-construction tolerance.
inline constexpr double kAdaptedTol = 1e-10;

class TimeGrid {
 public:
  /// Strictly increasing, nonnegative, at least two points.
  explicit TimeGrid(std::vector<double> times);
  /// 0, 1, ..., points-1.
  static TimeGrid uniform(std::size_t points);

  std::size_t size() const { return times_.size(); }
  /// m, the index of the last grid point.
  std::size_t last() const { return times_.size() - 1; }
  double operator[](std::size_t k) const { return times_[k]; }
  const std::vector<double>& times() const { return times_; }
  /// Index of the largest grid time ≤ t (step convention off-grid).
  std::size_t index_at(double t) const;

 private:
  std::vector<double> times_;
};

/// One subalgebra per grid time, increasing, ending at the full algebra.
/// Throws FiltrationError naming the first level that fails validation.
class Filtration {
 public:
  Filtration(TimeGrid grid, std::vector<SubalgebraLevel> levels);

  const TimeGrid& grid() const { return grid_; }
  const AlgebraPtr& algebra() const { return levels_.front().algebra(); }
  std::size_t size() const { return levels_.size(); }
  std::size_t last() const { return levels_.size() - 1; }
  const SubalgebraLevel& level(std::size_t k) const { return levels_.at(k); }
  const SubalgebraLevel& level_at_time(double t) const { return levels_[grid_.index_at(t)]; }
  std::span<const SubalgebraLevel> levels() const { return levels_; }

 private:
  TimeGrid grid_;
  std::vector<SubalgebraLevel> levels_;
};

using FiltrationPtr = std::shared_ptr<const Filtration>;

FiltrationPtr make_filtration(TimeGrid grid, std::vector<SubalgebraLevel> levels);

/// values[k] ∈ level k for every grid index k.
class AdaptedProcess {
 public:
  /// Throws AdaptednessError if some value leaves its level by more than kAdaptedTol.
  AdaptedProcess(FiltrationPtr filtration, std::vector<AlgElement> values);

  const FiltrationPtr& filtration() const { return filtration_; }
  const AlgebraPtr& algebra() const { return filtration_->algebra(); }
  std::size_t size() const { return values_.size(); }
  std::size_t last() const { return values_.size() - 1; }
  const AlgElement& operator[](std::size_t k) const { return values_[k]; }
  const AlgElement& at(std::size_t k) const { return values_.at(k); }
  const AlgElement& terminal() const { return values_.back(); }
  const std::vector<AlgElement>& values() const { return values_; }

  /// max_k ‖E_k(values[k]) − values[k]‖₂.
  double adaptedness_residual() const;

 private:
  FiltrationPtr filtration_;
  std::vector<AlgElement> values_;
};

/// Throws StructuralError unless both processes run over the same filtration.
void require_same_filtration(const AdaptedProcess& a, const AdaptedProcess& b);

AdaptedProcess adjoint(const AdaptedProcess& p);
AdaptedProcess operator+(const AdaptedProcess& a, const AdaptedProcess& b);
AdaptedProcess operator-(const AdaptedProcess& a, const AdaptedProcess& b);
AdaptedProcess operator*(cplx s, const AdaptedProcess& a);
/// t ↦ |X(t)|².
AdaptedProcess abs2(const AdaptedProcess& p);
AdaptedProcess constant_process(FiltrationPtr filtration, const AlgElement& x);

/// Strictly increasing grid indices, first 0 and last m.
using Partition = std::vector<std::size_t>;

void validate_partition(const Partition& partition, std::size_t last);
Partition full_partition(std::size_t last);

// --- martingales -----------------------------------------------------------

/// values[k] = E_k(x_terminal).
AdaptedProcess martingale_from_terminal(FiltrationPtr filtration, const AlgElement& x_terminal);

struct MartingaleCheck {
  bool ok = false;
  double residual = 0.0;  // max_{s ≤ t} ‖E_s X(t) − X(s)‖₂
};

MartingaleCheck is_martingale(const AdaptedProcess& p, double tol);

struct SubmartingaleCheck {
  bool ok = false;
  double min_eigenvalue = 0.0;  // min over s ≤ t of λ_min(E_s|X(t)|² − |X(s)|²)
};

/// Loewner check of E_s|X(t)|² ≥ |X(s)|² for all s ≤ t.
SubmartingaleCheck is_submartingale_abs2(const AdaptedProcess& p, double tol);

/// X(θ_k) − X(θ_{k−1}) over consecutive partition indices.
std::vector<AlgElement> increments(const AdaptedProcess& p, const Partition& partition);

}  // namespace ncmart
