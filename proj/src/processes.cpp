#include "ncmart/processes.hpp"

#include "ncmart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace ncmart {

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2) throw DomainError("time grid needs at least two points");
  if (!(times_.front() >= 0.0)) throw DomainError("time grid must start at a nonnegative time");
  for (std::size_t k = 1; k < times_.size(); ++k)
    if (!(times_[k] > times_[k - 1])) throw DomainError("time grid must be strictly increasing");
}

TimeGrid TimeGrid::uniform(std::size_t points) {
  std::vector<double> t(points);
  for (std::size_t k = 0; k < points; ++k) t[k] = static_cast<double>(k);
  return TimeGrid(std::move(t));
}

std::size_t TimeGrid::index_at(double t) const {
  if (t < times_.front()) throw DomainError("time precedes the grid");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  return static_cast<std::size_t>(it - times_.begin()) - 1;
}

// ---------------------------------------------------------------------------

Filtration::Filtration(TimeGrid grid, std::vector<SubalgebraLevel> levels)
    : grid_(std::move(grid)), levels_(std::move(levels)) {
  if (levels_.size() != grid_.size())
    throw FiltrationError("filtration needs one level per grid time", 0);
  for (std::size_t k = 1; k < levels_.size(); ++k) {
    if (!same_algebra(levels_[k].algebra(), levels_[0].algebra()))
      throw FiltrationError("filtration levels live in different algebras", k);
  }
  for (std::size_t k = 0; k + 1 < levels_.size(); ++k) {
    for (const auto& b : levels_[k].basis()) {
      const double r = levels_[k + 1].membership_residual(b);
      if (r > kAdaptedTol * std::max(1.0, norm2(b))) {
        std::ostringstream os;
        os << "filtration level " << k << " is not contained in level " << k + 1
           << " (residual " << r << ")";
        throw FiltrationError(os.str(), k);
      }
    }
  }
  if (levels_.back().dimension() != levels_.back().algebra()->dimension())
    throw FiltrationError("final filtration level must be the full algebra", levels_.size() - 1);
}

FiltrationPtr make_filtration(TimeGrid grid, std::vector<SubalgebraLevel> levels) {
  return std::make_shared<const Filtration>(std::move(grid), std::move(levels));
}

// ---------------------------------------------------------------------------

AdaptedProcess::AdaptedProcess(FiltrationPtr filtration, std::vector<AlgElement> values)
    : filtration_(std::move(filtration)), values_(std::move(values)) {
  if (!filtration_) throw StructuralError("process without filtration");
  if (values_.size() != filtration_->size())
    throw StructuralError("process needs one value per grid time");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!same_algebra(values_[k].algebra(), filtration_->algebra()))
      throw StructuralError("process value lives in a different algebra");
    const double r = filtration_->level(k).membership_residual(values_[k]);
    if (r > kAdaptedTol) {
      std::ostringstream os;
      os << "process is not adapted at grid index " << k << " (residual " << r << ")";
      throw AdaptednessError(os.str());
    }
  }
}

double AdaptedProcess::adaptedness_residual() const {
  double r = 0.0;
  for (std::size_t k = 0; k < values_.size(); ++k)
    r = std::max(r, filtration_->level(k).membership_residual(values_[k]));
  return r;
}

void require_same_filtration(const AdaptedProcess& a, const AdaptedProcess& b) {
  if (a.filtration() != b.filtration())
    throw StructuralError("processes are adapted to different filtrations");
}

namespace {

template <class Fn>
AdaptedProcess map_values(const AdaptedProcess& p, Fn fn) {
  std::vector<AlgElement> v;
  v.reserve(p.size());
  for (const auto& x : p.values()) v.push_back(fn(x));
  return AdaptedProcess(p.filtration(), std::move(v));
}

template <class Fn>
AdaptedProcess zip_values(const AdaptedProcess& a, const AdaptedProcess& b, Fn fn) {
  require_same_filtration(a, b);
  std::vector<AlgElement> v;
  v.reserve(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) v.push_back(fn(a[k], b[k]));
  return AdaptedProcess(a.filtration(), std::move(v));
}

}  // namespace

AdaptedProcess adjoint(const AdaptedProcess& p) {
  return map_values(p, [](const AlgElement& x) { return x.adjoint(); });
}

AdaptedProcess operator+(const AdaptedProcess& a, const AdaptedProcess& b) {
  return zip_values(a, b, [](const AlgElement& x, const AlgElement& y) { return x + y; });
}

AdaptedProcess operator-(const AdaptedProcess& a, const AdaptedProcess& b) {
  return zip_values(a, b, [](const AlgElement& x, const AlgElement& y) { return x - y; });
}

AdaptedProcess operator*(cplx s, const AdaptedProcess& a) {
  return map_values(a, [s](const AlgElement& x) { return s * x; });
}

AdaptedProcess abs2(const AdaptedProcess& p) {
  return map_values(p, [](const AlgElement& x) { return abs2(x); });
}

AdaptedProcess constant_process(FiltrationPtr filtration, const AlgElement& x) {
  std::vector<AlgElement> v(filtration->size(), x);
  return AdaptedProcess(std::move(filtration), std::move(v));
}

void validate_partition(const Partition& partition, std::size_t last) {
  if (partition.size() < 2) throw InvalidPartition("partition needs at least two indices");
  if (partition.front() != 0) throw InvalidPartition("partition must start at index 0");
  if (partition.back() != last) throw InvalidPartition("partition must end at the last grid index");
  for (std::size_t i = 1; i < partition.size(); ++i)
    if (partition[i] <= partition[i - 1])
      throw InvalidPartition("partition indices must be strictly increasing");
}

Partition full_partition(std::size_t last) {
  Partition p(last + 1);
  for (std::size_t k = 0; k <= last; ++k) p[k] = k;
  return p;
}

// ---------------------------------------------------------------------------

AdaptedProcess martingale_from_terminal(FiltrationPtr filtration, const AlgElement& x_terminal) {
  std::vector<AlgElement> v;
  v.reserve(filtration->size());
  for (std::size_t k = 0; k < filtration->size(); ++k) v.push_back(filtration->level(k).expect(x_terminal));
  return AdaptedProcess(std::move(filtration), std::move(v));
}

MartingaleCheck is_martingale(const AdaptedProcess& p, double tol) {
  MartingaleCheck out;
  const Filtration& f = *p.filtration();
  for (std::size_t s = 0; s < p.size(); ++s)
    for (std::size_t t = s + 1; t < p.size(); ++t)
      out.residual = std::max(out.residual, norm2(f.level(s).expect(p[t]) - p[s]));
  out.ok = out.residual <= tol;
  return out;
}

SubmartingaleCheck is_submartingale_abs2(const AdaptedProcess& p, double tol) {
  SubmartingaleCheck out;
  out.min_eigenvalue = kInf;
  const Filtration& f = *p.filtration();
  for (std::size_t s = 0; s < p.size(); ++s) {
    const AlgElement abs_s = abs2(p[s]);
    for (std::size_t t = s; t < p.size(); ++t) {
      const AlgElement diff = hermitian_part(f.level(s).expect(abs2(p[t])) - abs_s);
      out.min_eigenvalue = std::min(out.min_eigenvalue, min_eigenvalue(diff));
    }
  }
  out.ok = out.min_eigenvalue >= -tol;
  return out;
}

std::vector<AlgElement> increments(const AdaptedProcess& p, const Partition& partition) {
  validate_partition(partition, p.last());
  std::vector<AlgElement> d;
  d.reserve(partition.size() - 1);
  for (std::size_t i = 1; i < partition.size(); ++i) d.push_back(p[partition[i]] - p[partition[i - 1]]);
  return d;
}

}  // namespace ncmart
