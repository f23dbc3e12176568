#include "ncmart/algebra.hpp"

#include "ncmart/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace ncmart {

TracialAlgebra::TracialAlgebra(std::vector<int> block_dims, std::vector<double> block_weights)
    : dims_(std::move(block_dims)), weights_(std::move(block_weights)) {
  if (dims_.empty()) throw DomainError("algebra needs at least one block");
  if (dims_.size() != weights_.size())
    throw DomainError("block_dims and block_weights differ in length");
  for (int n : dims_)
    if (n <= 0) throw DomainError("block dimensions must be positive");
  for (double w : weights_)
    if (!(w > 0.0) || !std::isfinite(w)) throw DomainError("block weights must be positive");
  const double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    std::ostringstream os;
    os << "block weights sum to " << total << ", expected 1";
    throw DomainError(os.str());
  }
}

std::shared_ptr<const TracialAlgebra> TracialAlgebra::make(std::vector<int> block_dims,
                                                           std::vector<double> block_weights) {
  return std::make_shared<const TracialAlgebra>(std::move(block_dims), std::move(block_weights));
}

std::shared_ptr<const TracialAlgebra> TracialAlgebra::matrix(int n) { return make({n}, {1.0}); }

std::size_t TracialAlgebra::dimension() const {
  std::size_t d = 0;
  for (int n : dims_) d += static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
  return d;
}

bool TracialAlgebra::same_structure(const TracialAlgebra& other) const {
  return dims_ == other.dims_ && weights_ == other.weights_;
}

bool same_algebra(const AlgebraPtr& a, const AlgebraPtr& b) {
  return a == b || (a && b && a->same_structure(*b));
}

void require_same_algebra(const AlgElement& a, const AlgElement& b) {
  if (!same_algebra(a.algebra(), b.algebra()))
    throw StructuralError("elements belong to algebras with different block structure");
}

// ---------------------------------------------------------------------------

AlgElement::AlgElement(AlgebraPtr algebra, std::vector<Matrix> blocks)
    : algebra_(std::move(algebra)), blocks_(std::move(blocks)) {
  if (!algebra_) throw StructuralError("element without algebra");
  if (blocks_.size() != algebra_->block_count())
    throw StructuralError("block count does not match the algebra");
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    const int n = algebra_->block_dim(b);
    if (blocks_[b].rows() != n || blocks_[b].cols() != n)
      throw StructuralError("block size does not match the algebra");
  }
}

AlgElement AlgElement::zero(AlgebraPtr algebra) {
  std::vector<Matrix> blocks;
  for (int n : algebra->block_dims()) blocks.push_back(Matrix::Zero(n, n));
  return AlgElement(std::move(algebra), std::move(blocks));
}

AlgElement AlgElement::identity(AlgebraPtr algebra) {
  std::vector<Matrix> blocks;
  for (int n : algebra->block_dims()) blocks.push_back(Matrix::Identity(n, n));
  return AlgElement(std::move(algebra), std::move(blocks));
}

AlgElement AlgElement::from_matrix(AlgebraPtr algebra, Matrix m) {
  std::vector<Matrix> blocks;
  blocks.push_back(std::move(m));
  return AlgElement(std::move(algebra), std::move(blocks));
}

AlgElement AlgElement::adjoint() const {
  std::vector<Matrix> blocks;
  blocks.reserve(blocks_.size());
  for (const auto& m : blocks_) blocks.push_back(m.adjoint());
  return AlgElement(algebra_, std::move(blocks));
}

namespace {

double op_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() == 1) return std::abs(m(0, 0));
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

double AlgElement::hermitian_defect() const {
  double d = 0.0;
  for (const auto& m : blocks_) d = std::max(d, op_norm(m - m.adjoint()));
  return d;
}

AlgElement& AlgElement::operator+=(const AlgElement& other) {
  require_same_algebra(*this, other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] += other.blocks_[b];
  return *this;
}

AlgElement& AlgElement::operator-=(const AlgElement& other) {
  require_same_algebra(*this, other);
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b] -= other.blocks_[b];
  return *this;
}

AlgElement& AlgElement::operator*=(cplx s) {
  for (auto& m : blocks_) m *= s;
  return *this;
}

AlgElement operator+(AlgElement a, const AlgElement& b) { return a += b; }
AlgElement operator-(AlgElement a, const AlgElement& b) { return a -= b; }
AlgElement operator-(AlgElement a) { return a *= cplx(-1.0); }
AlgElement operator*(cplx s, AlgElement a) { return a *= s; }
AlgElement operator*(AlgElement a, cplx s) { return a *= s; }

AlgElement operator*(const AlgElement& a, const AlgElement& b) {
  require_same_algebra(a, b);
  std::vector<Matrix> blocks;
  blocks.reserve(a.block_count());
  for (std::size_t i = 0; i < a.block_count(); ++i) blocks.push_back(a.block(i) * b.block(i));
  return AlgElement(a.algebra(), std::move(blocks));
}

// ---------------------------------------------------------------------------

cplx trace(const AlgElement& x) {
  cplx t = 0.0;
  for (std::size_t b = 0; b < x.block_count(); ++b)
    t += x.algebra()->coordinate_weight(b) * x.block(b).trace();
  return t;
}

cplx inner(const AlgElement& a, const AlgElement& b) {
  require_same_algebra(a, b);
  cplx t = 0.0;
  for (std::size_t i = 0; i < a.block_count(); ++i)
    t += a.algebra()->coordinate_weight(i) * a.block(i).conjugate().cwiseProduct(b.block(i)).sum();
  return t;
}

double norm2(const AlgElement& x) {
  double s = 0.0;
  for (std::size_t b = 0; b < x.block_count(); ++b)
    s += x.algebra()->coordinate_weight(b) * x.block(b).squaredNorm();
  return std::sqrt(s);
}

double norm_inf(const AlgElement& x) {
  double s = 0.0;
  for (const auto& m : x.blocks()) s = std::max(s, op_norm(m));
  return s;
}

double lp_norm(const AlgElement& x, double p) {
  if (!(p >= 1.0)) throw DomainError("lp_norm requires p >= 1");
  if (p == kInf) return norm_inf(x);
  if (p == 2.0) return norm2(x);
  double s = 0.0;
  for (std::size_t b = 0; b < x.block_count(); ++b) {
    Eigen::JacobiSVD<Matrix> svd(x.block(b));
    const Eigen::VectorXd& sv = svd.singularValues();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) acc += std::pow(sv(i), p);
    s += x.algebra()->coordinate_weight(b) * acc;
  }
  return std::pow(s, 1.0 / p);
}

AlgElement hermitian_part(const AlgElement& h) {
  std::vector<Matrix> blocks;
  blocks.reserve(h.block_count());
  for (const auto& m : h.blocks()) {
    Matrix s = m + m.adjoint();
    blocks.push_back(0.5 * s);
  }
  return AlgElement(h.algebra(), std::move(blocks));
}

AlgElement abs2(const AlgElement& x) { return hermitian_part(x.adjoint() * x); }

HermitianEigen hermitian_eig(const AlgElement& h, double tol) {
  const double defect = h.hermitian_defect();
  if (defect > tol) {
    std::ostringstream os;
    os << "element is not Hermitian (defect " << defect << " > " << tol << ")";
    throw DomainError(os.str());
  }
  HermitianEigen out;
  for (const auto& m : h.blocks()) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    out.values.push_back(es.eigenvalues());
    out.vectors.push_back(es.eigenvectors());
  }
  return out;
}

AlgElement apply_function(const AlgElement& h, const std::function<double(double)>& g) {
  const HermitianEigen eig = hermitian_eig(h);
  std::vector<Matrix> blocks;
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    Eigen::VectorXcd d(eig.values[b].size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = g(eig.values[b](i));
    const Matrix& v = eig.vectors[b];
    blocks.push_back(v * d.asDiagonal() * v.adjoint());
  }
  return hermitian_part(AlgElement(h.algebra(), std::move(blocks)));
}

double min_eigenvalue(const AlgElement& h) {
  const HermitianEigen eig = hermitian_eig(h, kInf);
  double lo = kInf;
  for (const auto& v : eig.values)
    if (v.size() > 0) lo = std::min(lo, v(0));
  return lo;
}

// ---------------------------------------------------------------------------

Projection::Projection(AlgElement e) : e_(std::move(e)) {
  const double defect = std::max(e_.hermitian_defect(), norm_inf(e_ * e_ - e_));
  if (defect > kHermitianTol) {
    std::ostringstream os;
    os << "element is not a projection (defect " << defect << ")";
    throw DomainError(os.str());
  }
}

Projection Projection::zero(AlgebraPtr algebra) { return Projection(AlgElement::zero(std::move(algebra))); }

Projection Projection::identity(AlgebraPtr algebra) {
  return Projection(AlgElement::identity(std::move(algebra)));
}

Projection Projection::complement() const {
  return Projection(AlgElement::identity(e_.algebra()) - e_);
}

double Projection::trace() const { return ncmart::trace(e_).real(); }

namespace {

// Σ v v* over the selected columns.
Matrix range_projector(const Matrix& vectors, const std::vector<Eigen::Index>& cols) {
  const Eigen::Index n = vectors.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Eigen::Index c : cols) p.noalias() += vectors.col(c) * vectors.col(c).adjoint();
  return p;
}

}  // namespace

Projection spectral_projection(const AlgElement& h, Interval interval) {
  const HermitianEigen eig = hermitian_eig(h);
  std::vector<Matrix> blocks;
  for (std::size_t b = 0; b < h.block_count(); ++b) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < eig.values[b].size(); ++i)
      if (interval.contains(eig.values[b](i))) cols.push_back(i);
    blocks.push_back(range_projector(eig.vectors[b], cols));
  }
  return Projection(hermitian_part(AlgElement(h.algebra(), std::move(blocks))));
}

Projection proj_meet(const Projection& e, const Projection& f) {
  require_same_algebra(e.element(), f.element());
  // ran e ∩ ran f is the kernel of e^⊥ + f^⊥.
  constexpr double kNullThreshold = 1e-8;
  const AlgElement s = e.complement().element() + f.complement().element();
  const HermitianEigen eig = hermitian_eig(s);
  std::vector<Matrix> blocks;
  for (std::size_t b = 0; b < s.block_count(); ++b) {
    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < eig.values[b].size(); ++i)
      if (eig.values[b](i) < kNullThreshold) cols.push_back(i);
    blocks.push_back(range_projector(eig.vectors[b], cols));
  }
  return Projection(hermitian_part(AlgElement(s.algebra(), std::move(blocks))));
}

bool loewner_psd(const AlgElement& h, double tol) {
  const HermitianEigen eig = hermitian_eig(h, tol);
  for (const auto& v : eig.values)
    if (v.size() > 0 && v(0) < -tol) return false;
  return true;
}

bool loewner_leq(const AlgElement& a, const AlgElement& b, double tol) {
  return loewner_psd(b - a, tol);
}

}  // namespace ncmart
