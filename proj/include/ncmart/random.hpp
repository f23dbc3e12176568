// random.hpp: seeded, splittable random generation of algebra elements.

#pragma once

#include "ncmart/algebra.hpp"
#include "ncmart/cond_expect.hpp"

#include <cstdint>
#include <random>

namespace ncmart {

/// Counter-based stream derivation: stream(seed, k) is a pure function of
/// (seed, k), so instance k of a sweep draws the same numbers no matter which
/// thread runs it.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

  double uniform();                 // [0, 1)
  int uniform_int(int lo, int hi);  // inclusive
  /// Standard complex Gaussian: E|z|² = 1.
  cplx complex_gaussian();
  /// Splits off an independent child stream.
  Rng split();

 private:
  std::mt19937_64 engine_;
};

enum class ElementKind { general, hermitian, positive, projection_like };

AlgElement random_element(const AlgebraPtr& algebra, Rng& rng, ElementKind kind = ElementKind::general);
AlgElement random_element(const AlgebraPtr& algebra, std::uint64_t seed,
                          ElementKind kind = ElementKind::general);

/// Block-diagonal Haar-like unitary (QR of a complex Gaussian per block).
AlgElement random_unitary(const AlgebraPtr& algebra, Rng& rng);

/// E(g) for a random g: a random element of the given subalgebra.
AlgElement random_in(const SubalgebraLevel& level, Rng& rng);

}  // namespace ncmart
