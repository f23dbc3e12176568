#include "support.hpp"

#include "ncmart/errors.hpp"
#include "ncmart/harness.hpp"
#include "ncmart/stoch_integral.hpp"

#include <doctest.h>

using namespace ncmart;
using namespace support;

namespace {

// Σ over consecutive partition points, written out directly
AlgElement sum_oracle(const AdaptedProcess& x, const AdaptedProcess& f, Side side, const Partition& p) {
  AlgElement s = AlgElement::zero(x.algebra());
  for (std::size_t k = 1; k < p.size(); ++k) {
    const AlgElement dx = x[p[k]] - x[p[k - 1]];
    s += side == Side::left ? dx * f[p[k - 1]] : f[p[k - 1]] * dx;
  }
  return s;
}

struct Random {
  FiltrationPtr f;
  AdaptedProcess x, g;
};

Random random_setup(std::uint64_t seed, std::size_t levels) {
  Rng rng(seed);
  const auto alg = test_algebras()[seed % 5];
  const auto f = harness::random_filtration(alg, rng, levels, {2, 8, 0.3, 0.3});
  std::vector<AlgElement> gv;
  for (std::size_t k = 0; k < f->size(); ++k) gv.push_back(random_in(f->level(k), rng));
  return {f, martingale_from_terminal(f, random_element(alg, rng)), AdaptedProcess(f, gv)};
}

}  // namespace

TEST_CASE("integral sum examples") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  const AdaptedProcess one = constant(x.filtration(), AlgElement::identity(alg));
  for (const Partition& p : {Partition{0, 2}, Partition{0, 1, 2}}) {
    CHECK(dist(left_sum(x, one, p).value, x[2] - x[0]) < 1e-15);
    CHECK(dist(right_sum(x, one, p).value, x[2] - x[0]) < 1e-15);
  }
  const IntegralSum l = left_sum(x, x, full_partition(2));
  CHECK(dist(l.value, m2(alg, 0, -1, 1, 0)) < 1e-15);
  CHECK(l.side == Side::left);
  CHECK(l.integrator_id == "X");
  const IntegralSum r = right_sum(x, x, full_partition(2), "X", "X");
  CHECK(dist(r.value, m2(alg, 0, 1, -1, 0)) < 1e-15);
  CHECK(r.integrand_id == "X");
  const AdaptedProcess c = constant(x.filtration(), cplx(3, 1) * AlgElement::identity(alg));
  CHECK(norm2(left_sum(c, x, full_partition(2)).value) == 0.0);
  CHECK(norm2(right_sum(c, x, full_partition(2)).value) == 0.0);
  const AdaptedProcess other = m2_example(alg);
  CHECK_THROWS_AS(left_sum(x, other, full_partition(2)), StructuralError);
  CHECK_THROWS_AS(left_sum(x, x, {0, 3}), InvalidPartition);
}

TEST_CASE("integral process examples") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  const AdaptedProcess ip = integral_process(x, x, Side::left);
  CHECK(norm2(ip[0]) == 0.0);
  CHECK(norm2(ip[1]) < 1e-15);
  CHECK(dist(ip[2], m2(alg, 0, -1, 1, 0)) < 1e-15);
  const AdaptedProcess one = constant(x.filtration(), AlgElement::identity(alg));
  const AdaptedProcess id = integral_process(x, one, Side::right);
  for (std::size_t k = 0; k < 3; ++k) CHECK(dist(id[k], x[k] - x[0]) < 1e-15);
  const AdaptedProcess c = constant(x.filtration(), cplx(3, 1) * AlgElement::identity(alg));
  const AdaptedProcess flat = integral_process(c, x, Side::left);
  for (const auto& v : flat.values()) CHECK(norm2(v) == 0.0);
  const AdaptedProcess bad(x.filtration(), {AlgElement::zero(alg), m2(alg, 1, 0, 0, -1), AlgElement::identity(alg)});
  CHECK_THROWS_AS(integral_process(bad, x, Side::left), NotMartingale);
}

TEST_CASE("dyadic chain and refinement predicate") {
  const auto c7 = dyadic_chain(7);
  REQUIRE(c7.size() == 4);
  CHECK(c7[0] == Partition{0, 7});
  CHECK(c7[1] == Partition{0, 4, 7});
  CHECK(c7[2] == Partition{0, 2, 4, 6, 7});
  CHECK(c7[3] == full_partition(7));
  CHECK(dyadic_chain(1) == std::vector<Partition>{{0, 1}});
  CHECK(is_refinement({0, 4}, {0, 2, 4}));
  CHECK_FALSE(is_refinement({0, 3, 4}, {0, 2, 4}));
}

TEST_CASE("refinement table examples") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  const auto t = refinement_table(x, x, Side::left, {full_partition(2)});
  REQUIRE(t.size() == 1);
  CHECK(t[0] == 0.0);
  // X and f constant between the points of {0,2}: the inserted point adds nothing
  const AdaptedProcess c = constant(x.filtration(), cplx(3, 1) * AlgElement::identity(alg));
  for (double v : refinement_table(c, c, Side::right, {{0, 2}, {0, 1, 2}})) CHECK(v == 0.0);
  CHECK_THROWS_AS(refinement_table(x, x, Side::left, {{0, 1, 2}, {0, 2}}), InvalidPartition);
}

TEST_CASE("refinement table against direct sums") {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const Random r = random_setup(seed, 8);
    const auto chain = dyadic_chain(r.x.last());
    for (Side side : {Side::left, Side::right}) {
      const auto t = refinement_table(r.x, r.g, side, chain);
      REQUIRE(t.size() == chain.size());
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const Partition& next = i + 1 < chain.size() ? chain[i + 1] : full_partition(r.x.last());
        const double expected = dist(sum_oracle(r.x, r.g, side, next), sum_oracle(r.x, r.g, side, chain[i]));
        CHECK(t[i] == doctest::Approx(expected).epsilon(1e-12).scale(1.0));
      }
      CHECK(t.back() <= 1e-12);
    }
  }
}

TEST_CASE("integral identities on random instances") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const Random r = random_setup(seed, 2 + seed % 7);
    const Partition full = full_partition(r.x.last());
    const AdaptedProcess y = martingale_from_terminal(r.f, random_element(r.f->algebra(), seed + 1000));
    for (Side side : {Side::left, Side::right}) {
      CHECK(dist(integral_sum(r.x, r.g, side, full).value, sum_oracle(r.x, r.g, side, full)) < 1e-12);
      CHECK(is_martingale(integral_process(r.x, r.g, side), 1e-9).ok);
      for (const auto& p : dyadic_chain(r.x.last())) {
        const RefinementOrthogonality o = refinement_orthogonality(r.x, r.g, side, p, full);
        CHECK(std::abs(o.difference_norm_sq - o.diagonal_sum) < 1e-9);
        CHECK(o.difference_norm_sq == doctest::Approx(std::pow(
                                          dist(sum_oracle(r.x, r.g, side, full), sum_oracle(r.x, r.g, side, p)), 2))
                                          .epsilon(1e-9)
                                          .scale(1.0));
      }
    }
    // adjoint relation and linearity
    const AlgElement l = left_sum(r.x, r.g, full).value;
    CHECK(dist(l.adjoint(), right_sum(adjoint(r.x), adjoint(r.g), full).value) < 1e-12);
    CHECK(dist(left_sum(r.x, r.g + y, full).value, l + left_sum(r.x, y, full).value) < 1e-10);
    CHECK(dist(left_sum(r.x + y, r.g, full).value, l + left_sum(y, r.g, full).value) < 1e-10);
  }
}

TEST_CASE("refinement invariance on a stuttered grid") {
  for (std::uint64_t seed = 200; seed < 220; ++seed) {
    const Random r = random_setup(seed, 2 + seed % 7);
    const FiltrationPtr st = harness::stutter(*r.f);
    const AdaptedProcess xs = harness::stutter(r.x, st);
    const AdaptedProcess gs = harness::stutter(r.g, st);
    Partition coarse;
    for (std::size_t k = 0; k < r.x.size(); ++k) coarse.push_back(2 * k);
    coarse.push_back(xs.last());
    for (Side side : {Side::left, Side::right}) {
      const AlgElement exact = integral_sum(r.x, r.g, side, full_partition(r.x.last())).value;
      CHECK(dist(integral_sum(xs, gs, side, coarse).value, exact) <= 1e-12);
      CHECK(dist(integral_sum(xs, gs, side, full_partition(xs.last())).value, exact) <= 1e-12);
    }
  }
}

TEST_CASE("integrand bound") {
  auto alg = TracialAlgebra::matrix(2);
  const AdaptedProcess x = m2_example(alg);
  CHECK(integrand_bound(x) == doctest::Approx(std::sqrt(2.0)));
}
