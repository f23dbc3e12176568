#include "ncmart/inequalities.hpp"

#include "ncmart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <sstream>

namespace ncmart {

namespace {

void require_exponent(double p) {
  if (!(p >= 2.0)) throw DomainError("square-function ratios need p >= 2");
}

AlgElement square_sum(const std::vector<AlgElement>& d) {
  AlgElement acc = AlgElement::zero(d.front().algebra());
  for (const auto& x : d) acc += abs2(x);
  return acc;
}

double psd_sqrt(double v) { return v > 0.0 ? std::sqrt(v) : 0.0; }

}  // namespace

double square_function_norm(const AdaptedProcess& x, const Partition& partition, double p) {
  const AlgElement s = square_sum(increments(x, partition));
  return lp_norm(apply_function(s, psd_sqrt), p);
}

double bg_ratio(const AdaptedProcess& x, const Partition& partition, double p) {
  require_exponent(p);
  const double den = lp_norm(x.terminal(), p);
  if (den <= kRatioFloor) throw UndefinedRatio("terminal value has zero norm");
  return square_function_norm(x, partition, p) / den;
}

double dual_doob_ratio(const AdaptedProcess& x, const Partition& partition, double p) {
  require_exponent(p);
  const std::vector<AlgElement> d = increments(x, partition);
  const AlgElement s = square_sum(d);
  const double den = lp_norm(s, p / 2.0);
  if (den <= kRatioFloor) throw UndefinedRatio("square function vanishes");
  AlgElement c = AlgElement::zero(x.algebra());
  for (std::size_t k = 0; k < d.size(); ++k)
    c += x.filtration()->level(partition[k]).expect(abs2(d[k]));
  return lp_norm(c, p / 2.0) / den;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * static_cast<double>(values.size()));
  const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, double(values.size() - 1)));
  return values[idx];
}

RatioEstimate summarize_ratios(std::string statistic, double p, const std::vector<double>& ratios,
                               std::uint64_t seed) {
  RatioEstimate e;
  e.statistic = std::move(statistic);
  e.p = p;
  e.seed = seed;
  e.instance_count = ratios.size();
  if (ratios.empty()) return e;
  e.ratio = std::accumulate(ratios.begin(), ratios.end(), 0.0) / static_cast<double>(ratios.size());
  e.max_ratio = *std::max_element(ratios.begin(), ratios.end());
  e.q50 = quantile(ratios, 0.5);
  e.q90 = quantile(ratios, 0.9);
  e.q99 = quantile(ratios, 0.99);
  return e;
}

// ---------------------------------------------------------------------------

ChebyshevResult chebyshev_projection(const AlgElement& x, double eta) {
  if (!(eta > 0.0)) throw DomainError("Chebyshev threshold must be positive");
  if (!loewner_psd(x, kHermitianTol)) throw DomainError("Chebyshev projection needs x >= 0");
  Projection e = spectral_projection(x, Interval{eta, kInf});
  const AlgElement below = e.complement().element();
  ChebyshevResult r{e, e.trace(), trace(x).real() / eta, norm_inf(below * x * below), false};
  r.holds = r.trace_e <= r.trace_bound + 1e-10 && r.compressed_norm <= eta + 1e-10;
  return r;
}

double ProjectionCertificate::max_sup_norm() const {
  return sup_norms.empty() ? 0.0 : *std::max_element(sup_norms.begin(), sup_norms.end());
}

bool ProjectionCertificate::valid() const {
  return trace_defect <= trace_bound + 1e-10 && max_sup_norm() <= epsilon + 1e-9 &&
         chain_defect <= 1e-9;
}

ProjectionCertificate kolmogorov_projection(const AdaptedProcess& x, double epsilon, Side side) {
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
  const MartingaleCheck check = is_martingale(x, 1e-9);
  if (!check.ok) throw NotMartingale("Kolmogorov projection needs a martingale", check.residual);

  // eigenvalues within 1e-12 of ε² count as below the cut
  const Interval below{-kInf, epsilon * epsilon + 1e-12};
  std::vector<Projection> chain;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const AlgElement sq = side == Side::left ? abs2(x[n].adjoint()) : abs2(x[n]);
    if (chain.empty()) {
      chain.push_back(spectral_projection(sq, below));
      continue;
    }
    const AlgElement& f = chain.back().element();
    const Projection e_n = spectral_projection(hermitian_part(f * sq * f), below);
    chain.push_back(proj_meet(chain.back(), e_n));
  }

  ProjectionCertificate cert{chain.back(), epsilon, 0.0, 0.0, {}, side, {}, 0.0};
  cert.trace_defect = 1.0 - cert.projection.trace();
  const double xm = norm2(x.terminal());
  cert.trace_bound = xm * xm / (epsilon * epsilon);
  const AlgElement& e = cert.projection.element();
  for (const auto& v : x.values())
    cert.sup_norms.push_back(norm_inf(side == Side::left ? e * v : v * e));
  for (std::size_t n = 1; n < chain.size(); ++n) {
    const AlgElement diff = hermitian_part(chain[n - 1].element() - chain[n].element());
    cert.chain_defect = std::max(cert.chain_defect, -min_eigenvalue(diff));
  }
  cert.chain = std::move(chain);
  return cert;
}

double percentile_epsilon(const AdaptedProcess& x, double percentile) {
  std::vector<double> norms;
  for (const auto& v : x.values()) {
    const double n = norm_inf(v);
    if (n > kRatioFloor) norms.push_back(n);
  }
  if (norms.empty()) return 1.0;
  return quantile(std::move(norms), percentile / 100.0);
}

// ---------------------------------------------------------------------------

ModulusTable segal_modulus(const AdaptedProcess& x, const Projection& e, Compression side) {
  require_same_algebra(x[0], e.element());
  const TimeGrid& grid = x.filtration()->grid();
  const AlgElement& p = e.element();
  struct PairNorm {
    double gap;
    double norm;
  };
  std::vector<PairNorm> pairs;
  for (std::size_t s = 0; s < x.size(); ++s)
    for (std::size_t t = s + 1; t < x.size(); ++t) {
      const AlgElement d = x[t] - x[s];
      double n = 0.0;
      switch (side) {
        case Compression::left: n = norm_inf(p * d); break;
        case Compression::right: n = norm_inf(d * p); break;
        case Compression::weak: n = norm_inf(p * d * p); break;
      }
      pairs.push_back({grid[t] - grid[s], n});
    }
  std::sort(pairs.begin(), pairs.end(), [](const PairNorm& a, const PairNorm& b) {
    return a.gap < b.gap || (a.gap == b.gap && a.norm < b.norm);
  });
  ModulusTable table;
  double running = 0.0;
  for (const auto& pr : pairs) {
    running = std::max(running, pr.norm);
    if (!table.gaps.empty() && std::abs(pr.gap - table.gaps.back()) <= 1e-12 * std::max(1.0, pr.gap)) {
      table.moduli.back() = running;
    } else {
      table.gaps.push_back(pr.gap);
      table.moduli.push_back(running);
    }
  }
  return table;
}

}  // namespace ncmart
