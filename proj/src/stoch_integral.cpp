#include "ncmart/stoch_integral.hpp"

#include "ncmart/errors.hpp"

#include <algorithm>
#include <utility>

namespace ncmart {

std::string to_string(Side side) { return side == Side::left ? "left" : "right"; }

namespace {

AlgElement term(const AlgElement& dx, const AlgElement& f, Side side) {
  return side == Side::left ? dx * f : f * dx;
}

AlgElement sum_over(const AdaptedProcess& x, const AdaptedProcess& f, Side side,
                    const Partition& partition) {
  require_same_filtration(x, f);
  validate_partition(partition, x.last());
  AlgElement acc = AlgElement::zero(x.algebra());
  for (std::size_t i = 1; i < partition.size(); ++i) {
    const std::size_t a = partition[i - 1];
    const std::size_t b = partition[i];
    acc += term(x[b] - x[a], f[a], side);
  }
  return acc;
}

}  // namespace

IntegralSum left_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                     const Partition& partition, std::string integrator_id,
                     std::string integrand_id) {
  return {Side::left, sum_over(integrator, integrand, Side::left, partition), partition,
          std::move(integrator_id), std::move(integrand_id)};
}

IntegralSum right_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                      const Partition& partition, std::string integrator_id,
                      std::string integrand_id) {
  return {Side::right, sum_over(integrator, integrand, Side::right, partition), partition,
          std::move(integrator_id), std::move(integrand_id)};
}

IntegralSum integral_sum(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                         Side side, const Partition& partition) {
  return side == Side::left ? left_sum(integrator, integrand, partition)
                            : right_sum(integrator, integrand, partition);
}

AdaptedProcess integral_process(const AdaptedProcess& integrator, const AdaptedProcess& integrand,
                                Side side) {
  require_same_filtration(integrator, integrand);
  const MartingaleCheck check = is_martingale(integrator, 1e-9);
  if (!check.ok) throw NotMartingale("integrator is not a martingale", check.residual);
  std::vector<AlgElement> values;
  values.reserve(integrator.size());
  AlgElement acc = AlgElement::zero(integrator.algebra());
  values.push_back(acc);
  for (std::size_t k = 1; k < integrator.size(); ++k) {
    acc += term(integrator[k] - integrator[k - 1], integrand[k - 1], side);
    values.push_back(acc);
  }
  return AdaptedProcess(integrator.filtration(), std::move(values));
}

double integrand_bound(const AdaptedProcess& integrand) {
  double m = 0.0;
  for (const auto& f : integrand.values()) m = std::max(m, norm_inf(f));
  return m;
}

bool is_refinement(const Partition& coarse, const Partition& fine) {
  return std::includes(fine.begin(), fine.end(), coarse.begin(), coarse.end());
}

std::vector<Partition> dyadic_chain(std::size_t last) {
  std::size_t stride = 1;
  while (stride < last) stride *= 2;
  std::vector<Partition> chain;
  for (; stride >= 1; stride /= 2) {
    Partition p;
    for (std::size_t k = 0; k < last; k += stride) p.push_back(k);
    p.push_back(last);
    if (chain.empty() || chain.back() != p) chain.push_back(std::move(p));
  }
  return chain;
}

std::vector<double> refinement_table(const AdaptedProcess& integrator,
                                     const AdaptedProcess& integrand, Side side,
                                     const std::vector<Partition>& chain) {
  if (chain.empty()) throw InvalidPartition("refinement chain is empty");
  const Partition full = full_partition(integrator.last());
  for (std::size_t i = 0; i < chain.size(); ++i) {
    validate_partition(chain[i], integrator.last());
    const Partition& next = i + 1 < chain.size() ? chain[i + 1] : full;
    if (!is_refinement(chain[i], next))
      throw InvalidPartition("refinement chain is not nested");
  }
  std::vector<AlgElement> sums;
  sums.reserve(chain.size() + 1);
  for (const auto& p : chain) sums.push_back(sum_over(integrator, integrand, side, p));
  sums.push_back(sum_over(integrator, integrand, side, full));
  std::vector<double> table;
  table.reserve(chain.size());
  for (std::size_t i = 0; i < chain.size(); ++i) table.push_back(norm2(sums[i + 1] - sums[i]));
  return table;
}

RefinementOrthogonality refinement_orthogonality(const AdaptedProcess& integrator,
                                                 const AdaptedProcess& integrand, Side side,
                                                 const Partition& coarse, const Partition& fine) {
  require_same_filtration(integrator, integrand);
  validate_partition(coarse, integrator.last());
  validate_partition(fine, integrator.last());
  if (!is_refinement(coarse, fine)) throw InvalidPartition("fine partition does not refine coarse");

  // On each fine interval [u_{j-1}, u_j] inside coarse [t_{k-1}, t_k] the
  // difference contributes ΔX(u_j)(f(u_{j-1}) − f(t_{k-1})) (or mirrored).
  RefinementOrthogonality out;
  AlgElement diff = AlgElement::zero(integrator.algebra());
  std::size_t anchor = 0;
  for (std::size_t j = 1; j < fine.size(); ++j) {
    const std::size_t a = fine[j - 1];
    const std::size_t b = fine[j];
    if (std::binary_search(coarse.begin(), coarse.end(), a)) anchor = a;
    const AlgElement t = term(integrator[b] - integrator[a], integrand[a] - integrand[anchor], side);
    out.diagonal_sum += inner(t, t).real();
    diff += t;
  }
  out.difference_norm_sq = inner(diff, diff).real();
  return out;
}

}  // namespace ncmart
