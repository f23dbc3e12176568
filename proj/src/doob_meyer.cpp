#include "ncmart/doob_meyer.hpp"

#include "ncmart/errors.hpp"
#include "ncmart/stoch_integral.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace ncmart {

namespace {

constexpr double kMartingaleTol = 1e-9;

void require_martingale(const AdaptedProcess& x) {
  const MartingaleCheck check = is_martingale(x, kMartingaleTol);
  if (!check.ok) throw NotMartingale("process is not a martingale", check.residual);
}

}  // namespace

AlgElement quadratic_variation_sum(const AdaptedProcess& x, const Partition& partition) {
  AlgElement acc = AlgElement::zero(x.algebra());
  for (const auto& d : increments(x, partition)) acc += abs2(d);
  return acc;
}

AdaptedProcess quadratic_variation_process(const AdaptedProcess& x) {
  std::vector<AlgElement> values;
  AlgElement acc = AlgElement::zero(x.algebra());
  values.push_back(acc);
  for (std::size_t k = 1; k < x.size(); ++k) {
    acc += abs2(x[k] - x[k - 1]);
    values.push_back(acc);
  }
  return AdaptedProcess(x.filtration(), std::move(values));
}

AlgElement bracket_via_integrals(const AdaptedProcess& x, const Partition& partition) {
  const AdaptedProcess xs = adjoint(x);
  const AlgElement left = left_sum(xs, x, partition, "X*", "X").value;
  const AlgElement right = right_sum(x, xs, partition, "X", "X*").value;
  return abs2(x.terminal()) - abs2(x[0]) - left - right;
}

AdaptedProcess compensator(const AdaptedProcess& x) {
  require_martingale(x);
  const Filtration& f = *x.filtration();
  std::vector<AlgElement> values;
  AlgElement acc = AlgElement::zero(x.algebra());
  values.push_back(acc);
  AlgElement prev = abs2(x[0]);
  for (std::size_t k = 1; k < x.size(); ++k) {
    AlgElement cur = abs2(x[k]);
    acc += hermitian_part(f.level(k - 1).expect(cur - prev));
    values.push_back(acc);
    prev = std::move(cur);
  }
  return AdaptedProcess(x.filtration(), std::move(values));
}

double predictability_residual(const AdaptedProcess& a) {
  double r = norm2(a[0]);
  for (std::size_t j = 1; j < a.size(); ++j)
    r = std::max(r, a.filtration()->level(j - 1).membership_residual(a[j]));
  return r;
}

double monotonicity_defect(const AdaptedProcess& a) {
  double lo = 0.0;
  for (std::size_t j = 1; j < a.size(); ++j)
    lo = std::min(lo, min_eigenvalue(hermitian_part(a[j] - a[j - 1])));
  return -lo;
}

Decomposition doob_meyer_decompose(const AdaptedProcess& x, DecompositionVariant variant) {
  require_martingale(x);
  const AdaptedProcess sq = abs2(x);
  AdaptedProcess a = variant == DecompositionVariant::predictable ? compensator(x)
                                                                   : quadratic_variation_process(x);
  AdaptedProcess m = sq - a;
  DecompositionResiduals r;
  for (std::size_t t = 0; t < x.size(); ++t)
    r.reconstruction = std::max(r.reconstruction, norm2(sq[t] - m[t] - a[t]));
  r.initial = norm2(a[0]);
  r.monotonicity = monotonicity_defect(a);
  r.predictability = predictability_residual(a);
  r.martingale = is_martingale(m, kMartingaleTol).residual;
  return {variant, std::move(m), std::move(a), r};
}

Pairing naturality_pairing(const AdaptedProcess& a, const AlgElement& y, const Partition& partition) {
  validate_partition(partition, a.last());
  const Filtration& f = *a.filtration();
  cplx lhs = 0.0;
  for (std::size_t i = 1; i < partition.size(); ++i) {
    const std::size_t s = partition[i - 1];
    const std::size_t t = partition[i];
    lhs += trace(f.level(s).expect(y) * (a[t] - a[s]));
  }
  return {lhs, trace(y * a.terminal())};
}

double NaturalityGap::orthogonality_residual() const {
  return std::abs(gap * gap - termwise_sum_sq);
}

double NaturalityGap::bound_excess() const {
  return std::max(0.0, gap * gap - fourth_moment_bound);
}

namespace {

// D_k = |ΔX_k|² − E_{k−1}|ΔX_k|² over the partition
std::vector<AlgElement> gap_terms(const AdaptedProcess& x, const Partition& partition,
                                  std::vector<AlgElement>* squares = nullptr) {
  const Filtration& f = *x.filtration();
  const std::vector<AlgElement> d = increments(x, partition);
  std::vector<AlgElement> terms;
  for (std::size_t k = 0; k < d.size(); ++k) {
    AlgElement sq = abs2(d[k]);
    terms.push_back(hermitian_part(sq - f.level(partition[k]).expect(sq)));
    if (squares) squares->push_back(std::move(sq));
  }
  return terms;
}

}  // namespace

NaturalityGap naturality_gap(const AdaptedProcess& x, const Partition& partition) {
  std::vector<AlgElement> squares;
  const std::vector<AlgElement> terms = gap_terms(x, partition, &squares);
  NaturalityGap out;
  AlgElement total = AlgElement::zero(x.algebra());
  for (const auto& t : terms) {
    out.termwise_sum_sq += inner(t, t).real();
    total += t;
  }
  out.gap = norm2(total);
  for (const auto& sq : squares) out.fourth_moment_bound += 4.0 * trace(sq * sq).real();
  return out;
}

double naturality_defect(const AdaptedProcess& x, const AlgElement& y, const Partition& partition) {
  AlgElement total = AlgElement::zero(x.algebra());
  for (const auto& t : gap_terms(x, partition)) total -= t;
  return std::abs(trace(y * total));
}

double uniqueness_residual(const AdaptedProcess& m) {
  for (const auto& v : m.values())
    if (v.hermitian_defect() > kHermitianTol)
      throw DomainError("uniqueness residual needs a selfadjoint process");
  require_martingale(m);
  cplx lhs = 0.0;
  for (std::size_t k = 1; k < m.size(); ++k) {
    const AlgElement d = m[k] - m[k - 1];
    lhs += trace(d * d);
  }
  const cplx rhs = trace(m.terminal() * m.terminal()) - trace(m[0] * m[0]);
  return std::abs(lhs - rhs);
}

CrossVariation cross_variation(const AdaptedProcess& x, const AdaptedProcess& y,
                               const Partition& partition) {
  require_same_filtration(x, y);
  const std::vector<AlgElement> dx = increments(x, partition);
  const std::vector<AlgElement> dy = increments(y, partition);
  AlgElement value = AlgElement::zero(x.algebra());
  for (std::size_t k = 0; k < dx.size(); ++k) value += dx[k].adjoint() * dy[k];

  const AdaptedProcess xs = adjoint(x);
  const AlgElement expansion = xs.terminal() * y.terminal() - xs[0] * y[0] -
                               left_sum(xs, y, partition, "X*", "Y").value -
                               right_sum(y, xs, partition, "Y", "X*").value;

  const cplx i(0.0, 1.0);
  const AlgElement polar =
      0.25 * (quadratic_variation_sum(x + y, partition) - quadratic_variation_sum(x - y, partition) +
              i * (quadratic_variation_sum(i * x + y, partition) -
                   quadratic_variation_sum(i * x - y, partition)));

  CrossVariation out{value, norm2(expansion - value), norm2(polar - value)};
  return out;
}

}  // namespace ncmart
