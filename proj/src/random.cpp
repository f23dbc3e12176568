#include "ncmart/random.hpp"

#include <Eigen/QR>

#include <cmath>

namespace ncmart {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer over a combined counter
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng::uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

int Rng::uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

cplx Rng::complex_gaussian() {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(engine_);
  const double im = n(engine_);
  return {re, im};
}

Rng Rng::split() {
  const std::uint64_t seed = engine_();
  const std::uint64_t stream = engine_();
  return Rng(seed, stream);
}

namespace {

Matrix gaussian_matrix(int n, Rng& rng) {
  Matrix m(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) m(i, j) = rng.complex_gaussian();
  return m;
}

}  // namespace

AlgElement random_element(const AlgebraPtr& algebra, Rng& rng, ElementKind kind) {
  std::vector<Matrix> blocks;
  for (int n : algebra->block_dims()) blocks.push_back(gaussian_matrix(n, rng));
  AlgElement g(algebra, std::move(blocks));
  switch (kind) {
    case ElementKind::general: return g;
    case ElementKind::hermitian: return hermitian_part(g);
    case ElementKind::positive: return abs2(g);
    case ElementKind::projection_like:
      return spectral_projection(hermitian_part(g), Interval{0.0, kInf}).element();
  }
  return g;
}

AlgElement random_element(const AlgebraPtr& algebra, std::uint64_t seed, ElementKind kind) {
  Rng rng(seed);
  return random_element(algebra, rng, kind);
}

AlgElement random_unitary(const AlgebraPtr& algebra, Rng& rng) {
  std::vector<Matrix> blocks;
  for (int n : algebra->block_dims()) {
    const Matrix g = gaussian_matrix(n, rng);
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ() * Matrix::Identity(n, n);
    // fix column phases so the distribution is Haar
    const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < n; ++i) {
      const double a = std::abs(r(i, i));
      if (a > 0.0) q.col(i) *= r(i, i) / a;
    }
    blocks.push_back(std::move(q));
  }
  return AlgElement(algebra, std::move(blocks));
}

AlgElement random_in(const SubalgebraLevel& level, Rng& rng) {
  return level.expect(random_element(level.algebra(), rng));
}

}  // namespace ncmart
