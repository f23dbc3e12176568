#include "ncmart/cond_expect.hpp"

#include "ncmart/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

namespace ncmart {

std::string to_string(LevelKind kind) {
  switch (kind) {
    case LevelKind::scalars: return "scalars";
    case LevelKind::block_full: return "block_full";
    case LevelKind::block_scalar: return "block_scalar";
    case LevelKind::general: return "general";
  }
  return "unknown";
}

CoordinatePartition singleton_partition(const TracialAlgebra& algebra) {
  CoordinatePartition p;
  for (int n : algebra.block_dims()) {
    std::vector<std::vector<int>> groups;
    for (int i = 0; i < n; ++i) groups.push_back({i});
    p.push_back(std::move(groups));
  }
  return p;
}

CoordinatePartition trivial_partition(const TracialAlgebra& algebra) {
  CoordinatePartition p;
  for (int n : algebra.block_dims()) {
    std::vector<int> all(n);
    for (int i = 0; i < n; ++i) all[i] = i;
    p.push_back({all});
  }
  return p;
}

namespace {

constexpr double kSubalgebraTol = 1e-10;

void validate_partition(const TracialAlgebra& algebra, const CoordinatePartition& partition) {
  if (partition.size() != algebra.block_count())
    throw DomainError("coordinate partition must list groups for every block");
  for (std::size_t b = 0; b < partition.size(); ++b) {
    const int n = algebra.block_dim(b);
    std::vector<int> seen(n, 0);
    for (const auto& group : partition[b]) {
      if (group.empty()) throw DomainError("coordinate partition has an empty group");
      for (int i : group) {
        if (i < 0 || i >= n) throw DomainError("coordinate index out of range in partition");
        if (seen[i]++) throw DomainError("coordinate listed twice in partition");
      }
    }
    if (std::find(seen.begin(), seen.end(), 0) != seen.end())
      throw DomainError("coordinate partition does not cover every coordinate");
  }
}

AlgElement matrix_unit(const AlgebraPtr& algebra, std::size_t block, int i, int j) {
  AlgElement e = AlgElement::zero(algebra);
  e.block(block)(i, j) = 1.0;
  return e;
}

AlgElement group_projection(const AlgebraPtr& algebra, std::size_t block,
                            const std::vector<int>& group) {
  AlgElement e = AlgElement::zero(algebra);
  for (int i : group) e.block(block)(i, i) = 1.0;
  return e;
}

// group id of each coordinate, per block
std::vector<std::vector<int>> group_labels(const TracialAlgebra& algebra,
                                           const CoordinatePartition& partition) {
  std::vector<std::vector<int>> labels;
  for (std::size_t b = 0; b < partition.size(); ++b) {
    std::vector<int> l(algebra.block_dim(b), -1);
    for (std::size_t g = 0; g < partition[b].size(); ++g)
      for (int i : partition[b][g]) l[i] = static_cast<int>(g);
    labels.push_back(std::move(l));
  }
  return labels;
}

}  // namespace

SubalgebraLevel::SubalgebraLevel(LevelKind kind, AlgebraPtr algebra, CoordinatePartition partition,
                                 std::vector<AlgElement> basis)
    : kind_(kind), algebra_(std::move(algebra)), partition_(std::move(partition)),
      basis_(std::move(basis)) {
  if (basis_.empty()) throw DomainError("subalgebra basis is empty");
  const auto d = static_cast<Eigen::Index>(basis_.size());
  Matrix gram(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (!same_algebra(basis_[i].algebra(), algebra_))
      throw StructuralError("basis element from a different algebra");
    for (Eigen::Index j = i; j < d; ++j) {
      gram(i, j) = inner(basis_[i], basis_[j]);
      gram(j, i) = std::conj(gram(i, j));
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(d - 1);
  gram_condition_ = lo > 0.0 ? hi / lo : kInf;
  if (!(gram_condition_ <= kMaxGramCondition)) {
    std::ostringstream os;
    os << "subalgebra basis is ill-conditioned (Gram condition " << gram_condition_ << ")";
    throw IllConditionedBasis(os.str(), gram_condition_);
  }
  gram_lu_.compute(gram);
}

SubalgebraLevel SubalgebraLevel::scalars(AlgebraPtr algebra) {
  std::vector<AlgElement> basis{AlgElement::identity(algebra)};
  return SubalgebraLevel(LevelKind::scalars, std::move(algebra), {}, std::move(basis));
}

SubalgebraLevel SubalgebraLevel::block_full(AlgebraPtr algebra, CoordinatePartition partition) {
  validate_partition(*algebra, partition);
  std::vector<AlgElement> basis;
  for (std::size_t b = 0; b < partition.size(); ++b)
    for (const auto& group : partition[b])
      for (int i : group)
        for (int j : group) basis.push_back(matrix_unit(algebra, b, i, j));
  return SubalgebraLevel(LevelKind::block_full, std::move(algebra), std::move(partition),
                         std::move(basis));
}

SubalgebraLevel SubalgebraLevel::block_scalar(AlgebraPtr algebra, CoordinatePartition partition) {
  validate_partition(*algebra, partition);
  std::vector<AlgElement> basis;
  for (std::size_t b = 0; b < partition.size(); ++b)
    for (const auto& group : partition[b]) basis.push_back(group_projection(algebra, b, group));
  return SubalgebraLevel(LevelKind::block_scalar, std::move(algebra), std::move(partition),
                         std::move(basis));
}

SubalgebraLevel SubalgebraLevel::general(AlgebraPtr algebra, std::vector<AlgElement> basis,
                                         bool check_products) {
  SubalgebraLevel level(LevelKind::general, std::move(algebra), {}, std::move(basis));
  const AlgElement one = AlgElement::identity(level.algebra_);
  if (level.membership_residual(one) > kSubalgebraTol)
    throw DomainError("subalgebra span does not contain the identity");
  for (const auto& b : level.basis_) {
    const double scale = std::max(1.0, norm2(b));
    if (level.membership_residual(b.adjoint()) > kSubalgebraTol * scale)
      throw DomainError("subalgebra span is not closed under adjoints");
  }
  if (!check_products) return level;
  for (const auto& a : level.basis_)
    for (const auto& b : level.basis_) {
      const AlgElement ab = a * b;
      if (level.membership_residual(ab) > kSubalgebraTol * std::max(1.0, norm2(ab)))
        throw DomainError("subalgebra span is not closed under multiplication");
    }
  return level;
}

SubalgebraLevel SubalgebraLevel::as_general() const {
  SubalgebraLevel copy = *this;
  copy.kind_ = LevelKind::general;
  copy.partition_.clear();
  return copy;
}

AlgElement SubalgebraLevel::expect_gram(const AlgElement& x) const {
  if (!same_algebra(x.algebra(), algebra_))
    throw StructuralError("element and subalgebra live in different algebras");
  const auto d = static_cast<Eigen::Index>(basis_.size());
  Eigen::VectorXcd rhs(d);
  for (Eigen::Index i = 0; i < d; ++i) rhs(i) = inner(basis_[i], x);
  const Eigen::VectorXcd c = gram_lu_.solve(rhs);
  AlgElement out = AlgElement::zero(algebra_);
  for (Eigen::Index i = 0; i < d; ++i)
    for (std::size_t b = 0; b < out.block_count(); ++b) out.block(b) += c(i) * basis_[i].block(b);
  return out;
}

AlgElement SubalgebraLevel::expect(const AlgElement& x) const {
  if (!same_algebra(x.algebra(), algebra_))
    throw StructuralError("element and subalgebra live in different algebras");
  switch (kind_) {
    case LevelKind::scalars: {
      AlgElement one = AlgElement::identity(algebra_);
      return trace(x) * one;
    }
    case LevelKind::block_full: {
      AlgElement out = AlgElement::zero(algebra_);
      const auto labels = group_labels(*algebra_, partition_);
      for (std::size_t b = 0; b < out.block_count(); ++b) {
        const int n = algebra_->block_dim(b);
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i)
            if (labels[b][i] == labels[b][j]) out.block(b)(i, j) = x.block(b)(i, j);
      }
      return out;
    }
    case LevelKind::block_scalar: {
      AlgElement out = AlgElement::zero(algebra_);
      for (std::size_t b = 0; b < out.block_count(); ++b)
        for (const auto& group : partition_[b]) {
          cplx mean = 0.0;
          for (int i : group) mean += x.block(b)(i, i);
          mean /= static_cast<double>(group.size());
          for (int i : group) out.block(b)(i, i) = mean;
        }
      return out;
    }
    case LevelKind::general:
      return expect_gram(x);
  }
  return expect_gram(x);
}

double SubalgebraLevel::membership_residual(const AlgElement& x) const {
  return norm2(expect(x) - x);
}

AlgElement expect(const SubalgebraLevel& level, const AlgElement& x) { return level.expect(x); }

AlgElement expect_chain(std::span<const SubalgebraLevel> levels, const AlgElement& x,
                        std::size_t s_index, std::size_t t_index) {
  if (s_index > t_index) throw DomainError("expect_chain requires s <= t");
  if (t_index >= levels.size()) throw DomainError("expect_chain level index out of range");
  return levels[s_index].expect(levels[t_index].expect(x));
}

double tower_residual(std::span<const SubalgebraLevel> levels, const AlgElement& x,
                      std::size_t s_index, std::size_t t_index) {
  return norm2(expect_chain(levels, x, s_index, t_index) - levels[s_index].expect(x));
}

}  // namespace ncmart
