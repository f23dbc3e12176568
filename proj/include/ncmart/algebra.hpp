// algebra.hpp: finite-dimensional tracial algebras: direct sums of full
// matrix blocks carrying a weighted normalized trace.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace ncmart {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Threshold (operator norm) for Hermiticity and projection checks.
inline constexpr double kHermitianTol = 1e-10;

/// ⊕_b M_{n_b} with trace τ(x) = Σ_b w_b · tr(x_b) / n_b, Σ_b w_b = 1.
class TracialAlgebra {
 public:
  TracialAlgebra(std::vector<int> block_dims, std::vector<double> block_weights);

  static std::shared_ptr<const TracialAlgebra> make(std::vector<int> block_dims,
                                                    std::vector<double> block_weights);
  /// The full matrix algebra M_n with τ = tr/n.
  static std::shared_ptr<const TracialAlgebra> matrix(int n);

  std::size_t block_count() const { return dims_.size(); }
  int block_dim(std::size_t b) const { return dims_[b]; }
  double block_weight(std::size_t b) const { return weights_[b]; }
  /// w_b / n_b: the trace weight of one diagonal coordinate of block b.
  double coordinate_weight(std::size_t b) const { return weights_[b] / dims_[b]; }
  const std::vector<int>& block_dims() const { return dims_; }
  const std::vector<double>& block_weights() const { return weights_; }
  /// Σ n_b², the complex dimension of the algebra.
  std::size_t dimension() const;

  bool same_structure(const TracialAlgebra& other) const;

 private:
  std::vector<int> dims_;
  std::vector<double> weights_;
};

using AlgebraPtr = std::shared_ptr<const TracialAlgebra>;

/// An element of a TracialAlgebra, one square complex matrix per block.
class AlgElement {
 public:
  AlgElement(AlgebraPtr algebra, std::vector<Matrix> blocks);

  static AlgElement zero(AlgebraPtr algebra);
  static AlgElement identity(AlgebraPtr algebra);
  /// Convenience for single-block algebras.
  static AlgElement from_matrix(AlgebraPtr algebra, Matrix m);

  const AlgebraPtr& algebra() const { return algebra_; }
  std::size_t block_count() const { return blocks_.size(); }
  const Matrix& block(std::size_t b) const { return blocks_[b]; }
  Matrix& block(std::size_t b) { return blocks_[b]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }

  AlgElement adjoint() const;
  /// ‖x − x*‖_∞.
  double hermitian_defect() const;

  AlgElement& operator+=(const AlgElement& other);
  AlgElement& operator-=(const AlgElement& other);
  AlgElement& operator*=(cplx s);

 private:
  AlgebraPtr algebra_;
  std::vector<Matrix> blocks_;
};

/// Throws StructuralError unless both elements live over the same structure.
void require_same_algebra(const AlgElement& a, const AlgElement& b);
bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b);

AlgElement operator+(AlgElement a, const AlgElement& b);
AlgElement operator-(AlgElement a, const AlgElement& b);
AlgElement operator-(AlgElement a);
AlgElement operator*(const AlgElement& a, const AlgElement& b);
AlgElement operator*(cplx s, AlgElement a);
AlgElement operator*(AlgElement a, cplx s);

cplx trace(const AlgElement& x);
/// τ(a* b).
cplx inner(const AlgElement& a, const AlgElement& b);

/// ‖x‖_p = τ(|x|^p)^{1/p}; p = kInf gives the operator norm.
double lp_norm(const AlgElement& x, double p);
double norm2(const AlgElement& x);
double norm_inf(const AlgElement& x);

/// x* x, returned exactly Hermitian.
AlgElement abs2(const AlgElement& x);

/// (h + h*)/2; only meant for values that are Hermitian up to roundoff.
AlgElement hermitian_part(const AlgElement& h);

struct HermitianEigen {
  std::vector<Eigen::VectorXd> values;  // ascending, per block
  std::vector<Matrix> vectors;          // orthonormal columns, per block
};

/// Eigendecomposition per block; DomainError if ‖h − h*‖_∞ > tol.
HermitianEigen hermitian_eig(const AlgElement& h, double tol = kHermitianTol);

/// Functional calculus g(h) for Hermitian h.
AlgElement apply_function(const AlgElement& h, const std::function<double(double)>& g);

double min_eigenvalue(const AlgElement& h);

/// Half-open real interval [lo, hi); either end may be infinite.
struct Interval {
  double lo = -kInf;
  double hi = kInf;
  bool contains(double v) const { return v >= lo && v < hi; }
};

/// e = e* = e² within kHermitianTol in operator norm.
class Projection {
 public:
  explicit Projection(AlgElement e);

  static Projection zero(AlgebraPtr algebra);
  static Projection identity(AlgebraPtr algebra);

  const AlgElement& element() const { return e_; }
  const AlgebraPtr& algebra() const { return e_.algebra(); }
  /// 1 − e.
  Projection complement() const;
  double trace() const;

 private:
  AlgElement e_;
};

Projection spectral_projection(const AlgElement& h, Interval interval);

/// Projection onto the intersection of the ranges of e and f.
Projection proj_meet(const Projection& e, const Projection& f);

/// True iff every eigenvalue of h is ≥ −tol.  DomainError if h is not
/// Hermitian within tol.
bool loewner_psd(const AlgElement& h, double tol);
/// a ≤ b in Loewner order within tol.
bool loewner_leq(const AlgElement& a, const AlgElement& b, double tol);

}  // namespace ncmart
