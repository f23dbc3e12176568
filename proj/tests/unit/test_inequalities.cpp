#include "support.hpp"

#include "ncmart/errors.hpp"
#include "ncmart/harness.hpp"
#include "ncmart/inequalities.hpp"

#include <doctest.h>

using namespace ncmart;
using namespace support;

namespace {

AdaptedProcess centred_martingale(std::uint64_t seed, const AlgebraPtr& alg, std::size_t levels) {
  Rng rng(seed);
  const auto f = harness::random_filtration(alg, rng, levels, {2, 8, 0.3, 0.3});
  const AdaptedProcess x = martingale_from_terminal(f, random_element(alg, rng));
  return x - constant(f, x[0]);
}

}  // namespace

TEST_CASE("ratio examples") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  const Partition full = full_partition(2);
  CHECK(bg_ratio(x, full, 2.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(square_function_norm(x, full, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  for (double p : {2.0, 3.0, 4.0, 8.0}) CHECK(dual_doob_ratio(x, full, p) == doctest::Approx(1.0).epsilon(1e-14));
  const AdaptedProcess zero = constant(x.filtration(), AlgElement::zero(alg));
  CHECK_THROWS_AS(bg_ratio(zero, full, 4.0), UndefinedRatio);
  CHECK_THROWS_AS(dual_doob_ratio(zero, full, 4.0), UndefinedRatio);
  // constant with nonzero terminal: zero numerator over a positive denominator
  CHECK(bg_ratio(constant(x.filtration(), AlgElement::identity(alg)), full, 4.0) == 0.0);
  CHECK_THROWS_AS(bg_ratio(x, full, 1.5), DomainError);
}

TEST_CASE("ratio properties") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const AlgebraPtr alg = test_algebras()[seed % 5];
    const AdaptedProcess x = centred_martingale(seed, alg, 2 + seed % 7);
    const Partition full = full_partition(x.last());
    const double sq = square_function_norm(x, full, 2.0);
    CHECK(std::abs(sq * sq - std::pow(norm2(x.terminal()), 2)) < 1e-10);
    CHECK(bg_ratio(x, full, 2.0) <= 1.0 + 1e-9);
    CHECK(dual_doob_ratio(x, full, 2.0) == doctest::Approx(1.0).epsilon(1e-10));
    const AdaptedProcess x3 = cplx(3.0) * x;
    for (double p : {3.0, 4.0, 8.0}) {
      const double b = bg_ratio(x, full, p);
      const double d = dual_doob_ratio(x, full, p);
      CHECK(std::isfinite(b));
      CHECK(b > 0.0);
      CHECK(std::isfinite(d));
      CHECK(std::abs(bg_ratio(x3, full, p) - b) < 1e-10);
      CHECK(std::abs(dual_doob_ratio(x3, full, p) - d) < 1e-10);
      // numerator from an independent square root
      AlgElement s = AlgElement::zero(alg);
      for (std::size_t k = 1; k < x.size(); ++k) s += abs2(x[k] - x[k - 1]);
      const AlgElement root = apply_function(hermitian_part(s), [](double v) { return std::sqrt(std::max(v, 0.0)); });
      CHECK(b == doctest::Approx(lp_oracle(root, p) / lp_oracle(x.terminal(), p)).epsilon(1e-10));
    }
  }
}

TEST_CASE("summaries and quantiles") {
  CHECK(quantile({3.0, 1.0, 2.0}, 0.5) == 2.0);
  CHECK(quantile({3.0, 1.0, 2.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0}, 1.0) == 3.0);
  CHECK(std::isnan(quantile({}, 0.5)));
  std::vector<double> v;
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  CHECK(quantile(v, 0.9) == 90.0);
  const RatioEstimate e = summarize_ratios("bg", 4.0, v, 17);
  CHECK(e.instance_count == 100);
  CHECK(e.max_ratio == 100.0);
  CHECK(e.ratio == doctest::Approx(50.5));
  CHECK(e.q50 == 50.0);
  CHECK(e.q99 == 99.0);
  CHECK(e.seed == 17);
  CHECK(e.statistic == "bg");
}

TEST_CASE("chebyshev examples") {
  auto alg = TracialAlgebra::matrix(2);
  const ChebyshevResult a = chebyshev_projection(m2(alg, 4, 0, 0, 0), 1.0);
  CHECK(dist(a.projection.element(), m2(alg, 1, 0, 0, 0)) < 1e-12);
  CHECK(a.trace_e == doctest::Approx(0.5));
  CHECK(a.trace_bound == doctest::Approx(2.0));
  CHECK(a.holds);
  const ChebyshevResult z = chebyshev_projection(AlgElement::zero(alg), 1.0);
  CHECK(z.trace_e == 0.0);
  CHECK(z.trace_bound == 0.0);
  CHECK(z.holds);
  const ChebyshevResult b = chebyshev_projection(0.7 * AlgElement::identity(alg), 0.7);
  CHECK(b.trace_e == doctest::Approx(1.0));
  CHECK(b.trace_bound == doctest::Approx(1.0));
  CHECK(b.holds);
  CHECK_THROWS_AS(chebyshev_projection(m2(alg, 1, 0, 0, -1), 1.0), DomainError);
  CHECK_THROWS_AS(chebyshev_projection(AlgElement::identity(alg), 0.0), DomainError);
}

TEST_CASE("chebyshev on random positive elements") {
  Rng rng(31);
  for (const auto& alg : test_algebras())
    for (int i = 0; i < 20; ++i) {
      const AlgElement x = random_element(alg, rng, ElementKind::positive);
      for (double eta : {0.01, 0.3, 1.0, 2.5, 10.0}) {
        const ChebyshevResult r = chebyshev_projection(x, eta);
        CHECK(r.trace_e <= trace(x).real() / eta + 1e-10);
        const AlgElement c = r.projection.complement().element();
        CHECK(norm_inf(c * x * c) <= eta + 1e-10);
        CHECK(r.holds);
      }
    }
}

TEST_CASE("kolmogorov examples") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  for (Side side : {Side::left, Side::right}) {
    const ProjectionCertificate c = kolmogorov_projection(x, 2.0, side);
    CHECK(dist(c.projection.element(), AlgElement::identity(alg)) < 1e-12);
    CHECK(c.trace_defect == doctest::Approx(0.0).scale(1.0));
    CHECK(c.trace_bound == doctest::Approx(0.5));
    REQUIRE(c.sup_norms.size() == 3);
    CHECK(c.sup_norms[0] == 0.0);  // X(0) = 0
    CHECK(c.sup_norms[1] == doctest::Approx(1.0));
    CHECK(c.sup_norms[2] == doctest::Approx(std::sqrt(2.0)));
    CHECK(c.valid());
  }
  const AdaptedProcess zero = constant(x.filtration(), AlgElement::zero(alg));
  const ProjectionCertificate z = kolmogorov_projection(zero, 0.1, Side::left);
  CHECK(dist(z.projection.element(), AlgElement::identity(alg)) < 1e-12);
  for (double n : z.sup_norms) CHECK(n == 0.0);
  // ε huge
  const ProjectionCertificate h = kolmogorov_projection(x, 1e6, Side::right);
  CHECK(dist(h.projection.element(), AlgElement::identity(alg)) < 1e-12);
  // ε below every singular value: e = 0, bounds still hold
  const ProjectionCertificate s = kolmogorov_projection(x, 0.5, Side::left);
  CHECK(s.trace_defect == doctest::Approx(1.0));
  CHECK(s.trace_defect <= s.trace_bound + 1e-10);
  CHECK(s.valid());
  CHECK_THROWS_AS(kolmogorov_projection(x, 0.0, Side::left), DomainError);
  const AdaptedProcess bad(x.filtration(), {AlgElement::zero(alg), m2(alg, 1, 0, 0, -1), AlgElement::identity(alg)});
  CHECK_THROWS_AS(kolmogorov_projection(bad, 1.0, Side::left), NotMartingale);
}

TEST_CASE("kolmogorov certificates on random martingales") {
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    Rng rng(seed);
    const AlgebraPtr alg = test_algebras()[seed % 5];
    const auto f = harness::random_filtration(alg, rng, 2 + seed % 7, {2, 8, 0.3, 0.3});
    const AdaptedProcess x = martingale_from_terminal(f, random_element(alg, rng));
    const double eps = percentile_epsilon(x, 30.0);
    for (Side side : {Side::left, Side::right}) {
      const ProjectionCertificate c = kolmogorov_projection(x, eps, side);
      const AlgElement& e = c.projection.element();
      CHECK(1.0 - trace(e).real() <= std::pow(norm2(x.terminal()), 2) / (eps * eps) + 1e-10);
      for (const auto& v : x.values()) CHECK(norm_inf(side == Side::left ? e * v : v * e) <= eps + 1e-9);
      for (std::size_t n = 1; n < c.chain.size(); ++n)
        CHECK(loewner_leq(c.chain[n].element(), c.chain[n - 1].element(), 1e-9));
      CHECK(c.valid());
    }
  }
}

TEST_CASE("segal modulus") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  const ModulusTable z = segal_modulus(x, Projection::zero(alg), Compression::left);
  for (double m : z.moduli) CHECK(m == 0.0);
  const ModulusTable one = segal_modulus(x, Projection::identity(alg), Compression::weak);
  REQUIRE(one.gaps.size() == 2);
  CHECK(one.gaps[0] == 1.0);
  CHECK(one.gaps[1] == 2.0);
  CHECK(one.moduli[0] == doctest::Approx(1.0));  // ‖diag(1,−1)‖ and ‖σ_x‖
  CHECK(one.moduli[1] == doctest::Approx(std::sqrt(2.0)));
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    Rng rng(seed);
    const AlgebraPtr a = test_algebras()[seed % 5];
    const auto f = harness::random_filtration(a, rng, 3 + seed % 6, {2, 8, 0.3, 0.3});
    const AdaptedProcess y = martingale_from_terminal(f, random_element(a, rng));
    const double eps = percentile_epsilon(y, 30.0);
    const Projection e = kolmogorov_projection(y, eps, Side::left).projection;
    const ModulusTable l = segal_modulus(y, e, Compression::left);
    const ModulusTable r = segal_modulus(y, e, Compression::right);
    const ModulusTable w = segal_modulus(y, e, Compression::weak);
    CHECK(l.moduli.front() <= 2.0 * eps + 1e-9);
    for (std::size_t g = 0; g < w.moduli.size(); ++g) {
      CHECK(w.moduli[g] <= std::min(l.moduli[g], r.moduli[g]) + 1e-10);
      if (g > 0) CHECK(l.moduli[g] >= l.moduli[g - 1]);
    }
  }
}
