// Shared fixtures and brute-force oracles for the unit tests.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/cond_expect.hpp"
#include "ncmart/processes.hpp"
#include "ncmart/random.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <initializer_list>
#include <vector>

namespace support {

using namespace ncmart;

inline Matrix mat2(cplx a, cplx b, cplx c, cplx d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

inline AlgElement m2(const AlgebraPtr& alg, cplx a, cplx b, cplx c, cplx d) {
  return AlgElement::from_matrix(alg, mat2(a, b, c, d));
}

inline double dist(const AlgElement& a, const AlgElement& b) { return norm2(a - b); }

/// The M₂ chain scalars ⊂ diagonal ⊂ full.
inline FiltrationPtr m2_chain(const AlgebraPtr& alg) {
  return make_filtration(TimeGrid::uniform(3), {SubalgebraLevel::scalars(alg),
                                                SubalgebraLevel::block_full(alg, {{{0}, {1}}}),
                                                SubalgebraLevel::block_full(alg, {{{0, 1}}})});
}

/// X = E_k [[1,1],[1,−1]] on the M₂ chain.
inline AdaptedProcess m2_example(const AlgebraPtr& alg) {
  return martingale_from_terminal(m2_chain(alg), m2(alg, 1, 1, 1, -1));
}

inline AdaptedProcess constant(const FiltrationPtr& f, const AlgElement& x) {
  return AdaptedProcess(f, std::vector<AlgElement>(f->size(), x));
}

/// Algebras cycled through by property loops.
inline std::vector<AlgebraPtr> test_algebras() {
  return {TracialAlgebra::matrix(2), TracialAlgebra::matrix(3), TracialAlgebra::make({2, 3}, {0.4, 0.6}),
          TracialAlgebra::make({1, 2, 2}, {0.2, 0.3, 0.5}), TracialAlgebra::matrix(4)};
}

// --- oracles ---------------------------------------------------------------

/// τ(x) from the definition, entry by entry.
inline cplx trace_oracle(const AlgElement& x) {
  cplx t = 0.0;
  for (std::size_t b = 0; b < x.block_count(); ++b) {
    const int n = x.algebra()->block_dim(b);
    cplx s = 0.0;
    for (int i = 0; i < n; ++i) s += x.block(b)(i, i);
    t += x.algebra()->block_weight(b) * s / static_cast<double>(n);
  }
  return t;
}

/// ‖x‖_p from the eigenvalues of x*x (not singular values).
inline double lp_oracle(const AlgElement& x, double p) {
  double acc = 0.0, top = 0.0;
  for (std::size_t b = 0; b < x.block_count(); ++b) {
    const Matrix g = x.block(b).adjoint() * x.block(b);
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    const int n = x.algebra()->block_dim(b);
    for (int i = 0; i < n; ++i) {
      const double s = std::sqrt(std::max(0.0, es.eigenvalues()(i)));
      top = std::max(top, s);
      acc += x.algebra()->block_weight(b) / n * std::pow(s, p);
    }
  }
  return std::isinf(p) ? top : std::pow(acc, 1.0 / p);
}

/// Orthogonal projection onto span(basis) by Gram–Schmidt, independent of the
/// Gram solve in the library.
inline AlgElement projection_oracle(const std::vector<AlgElement>& basis, const AlgElement& x) {
  std::vector<AlgElement> q;
  for (const auto& b : basis) {
    AlgElement v = b;
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& u : q) v -= inner(u, v) * u;
    const double n = norm2(v);
    if (n > 1e-9) q.push_back((1.0 / n) * v);
  }
  AlgElement out = AlgElement::zero(x.algebra());
  for (const auto& u : q) out += inner(u, x) * u;
  return out;
}

}  // namespace support
