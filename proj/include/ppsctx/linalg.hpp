#pragma once

// Dense complex linear algebra for projectors and the subspaces they span.
//
// Every value type here is immutable once constructed and validated, so they
// can be shared freely between threads.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ppsctx/errors.hpp"

namespace ppsctx {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using ColVector = Eigen::VectorXcd;

namespace tol {
inline constexpr double proj = 1e-9;   // idempotence, hermiticity, eigenvalue clustering
inline constexpr double orth = 1e-9;   // ||PQ|| and ||PQ - QP||
inline constexpr double meet = 1e-7;   // eigenvalue-2 cluster of P + Q
inline constexpr double rank = 1e-10;  // singular value cut, relative to the largest
}  // namespace tol

/// Largest entry modulus.
inline double norm_inf(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

/// A square complex matrix over a d-dimensional Hilbert space.
class Operator {
 public:
  explicit Operator(Matrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols()) {
      throw Error(ErrorCode::InvalidOperator,
                  "operator must be a non-empty square matrix, got " + std::to_string(m_.rows()) + "x" +
                      std::to_string(m_.cols()));
    }
    if (!all_finite(m_)) throw Error(ErrorCode::InvalidOperator, "operator has non-finite entries");
  }

  static Operator identity(int dim) { return Operator(Matrix::Identity(dim, dim)); }
  static Operator zero(int dim) { return Operator(Matrix::Zero(dim, dim)); }

  int dim() const noexcept { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const noexcept { return m_; }
  Complex trace() const { return m_.trace(); }
  Operator adjoint() const { return Operator(m_.adjoint()); }

  friend Operator operator+(const Operator& a, const Operator& b) {
    check_same_dim(a, b);
    return Operator(a.m_ + b.m_);
  }
  friend Operator operator-(const Operator& a, const Operator& b) {
    check_same_dim(a, b);
    return Operator(a.m_ - b.m_);
  }
  friend Operator operator*(const Operator& a, const Operator& b) {
    check_same_dim(a, b);
    return Operator(a.m_ * b.m_);
  }
  friend Operator operator*(Complex s, const Operator& a) { return Operator(s * a.m_); }

  static void check_same_dim(const Operator& a, const Operator& b) {
    if (a.dim() != b.dim()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "dimensions " + std::to_string(a.dim()) + " and " + std::to_string(b.dim()));
    }
  }

 private:
  Matrix m_;
};

/// A nonzero, not necessarily normalized, state vector.
class Vector {
 public:
  explicit Vector(ColVector c) : c_(std::move(c)) {
    if (c_.size() == 0) throw Error(ErrorCode::InvalidOperator, "vector must have positive dimension");
    if (!all_finite(c_)) throw Error(ErrorCode::InvalidOperator, "vector has non-finite components");
    if (c_.norm() <= tol::proj) throw Error(ErrorCode::ZeroVector, "vector norm is below tolerance");
  }
  Vector(std::initializer_list<Complex> components)
      : Vector(ColVector(Eigen::Map<const ColVector>(components.begin(),
                                                     static_cast<Eigen::Index>(components.size())))) {}

  int dim() const noexcept { return static_cast<int>(c_.size()); }
  const ColVector& components() const noexcept { return c_; }
  double norm() const { return c_.norm(); }
  ColVector normalized() const { return c_ / c_.norm(); }

 private:
  ColVector c_;
};

/// Orthogonal projector: Hermitian, idempotent, spectrum in {0, 1}.
class Projector {
 public:
  /// Validates `op` against tol::proj; throws NotAProjector naming the failing property.
  static Projector from_operator(const Operator& op) {
    const Matrix& m = op.matrix();
    const double herm = norm_inf(m - m.adjoint());
    if (herm > tol::proj) {
      throw Error(ErrorCode::NotAProjector, "matrix is not Hermitian (deviation " + fmt(herm) + ")");
    }
    const double idem = norm_inf(m * m - m);
    if (idem > tol::proj) {
      throw Error(ErrorCode::NotAProjector, "matrix is not idempotent (deviation " + fmt(idem) + ")");
    }
    const Matrix h = (m + m.adjoint()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    int rank = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const double ev = es.eigenvalues()[i];
      if (std::abs(ev - 1.0) <= tol::proj) {
        ++rank;
      } else if (std::abs(ev) > tol::proj) {
        throw Error(ErrorCode::NotAProjector, "eigenvalue " + fmt(ev) + " is neither 0 nor 1");
      }
    }
    return Projector(op, rank);
  }

  /// Projector onto the span of the (already orthonormal) columns of `basis`.
  static Projector from_orthonormal_columns(int dim, const Matrix& basis) {
    if (basis.cols() == 0) return zero(dim);
    return Projector(Operator(basis * basis.adjoint()), static_cast<int>(basis.cols()));
  }

  static Projector identity(int dim) { return Projector(Operator::identity(dim), dim); }
  static Projector zero(int dim) { return Projector(Operator::zero(dim), 0); }

  int dim() const noexcept { return op_.dim(); }
  int rank() const noexcept { return rank_; }
  const Operator& op() const noexcept { return op_; }
  const Matrix& matrix() const noexcept { return op_.matrix(); }
  bool is_zero() const noexcept { return rank_ == 0; }

  /// I - P.
  Projector complement() const {
    return Projector(Operator(Matrix::Identity(dim(), dim()) - matrix()), dim() - rank_);
  }

 private:
  Projector(Operator op, int rank) : op_(std::move(op)), rank_(rank) {}

  static std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
  }

  Operator op_;
  int rank_;
};

inline void check_same_dim(const Projector& p, const Projector& q) {
  Operator::check_same_dim(p.op(), q.op());
}

inline bool approx_equal(const Matrix& a, const Matrix& b, double eps = tol::proj) {
  return a.rows() == b.rows() && a.cols() == b.cols() && norm_inf(a - b) <= eps;
}

inline bool approx_equal(const Projector& p, const Projector& q, double eps = tol::proj) {
  return approx_equal(p.matrix(), q.matrix(), eps);
}

/// Projector onto the eigenspace of a Hermitian matrix for eigenvalues >= threshold.
inline Projector spectral_projector(const Matrix& hermitian, double threshold) {
  const int d = static_cast<int>(hermitian.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es((hermitian + hermitian.adjoint()) / 2.0);
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()[i] >= threshold) keep.push_back(i);
  }
  Matrix basis(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    basis.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]);
  }
  return Projector::from_orthonormal_columns(d, basis);
}

/// Projector onto the column space of `a`. Singular values at or below
/// tol::rank times the largest one are treated as zero.
inline Projector range_projector(const Operator& a) {
  const int d = a.dim();
  Eigen::JacobiSVD<Matrix> svd(a.matrix(), Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv[0] == 0.0) return Projector::zero(d);
  const double cut = tol::rank * sv[0];
  Eigen::Index r = 0;
  while (r < sv.size() && sv[r] > cut) ++r;
  return Projector::from_orthonormal_columns(d, svd.matrixU().leftCols(r));
}

/// Orthogonal projector onto span(vs). Vectors need not be normalized or independent.
inline Projector projector_from_vectors(std::span<const Vector> vs) {
  if (vs.empty()) throw Error(ErrorCode::InvalidArgument, "projector_from_vectors needs at least one vector");
  const int d = vs.front().dim();
  Matrix cols(d, static_cast<Eigen::Index>(vs.size()));
  for (std::size_t j = 0; j < vs.size(); ++j) {
    if (vs[j].dim() != d) {
      throw Error(ErrorCode::DimensionMismatch, "vector " + std::to_string(j) + " has dimension " +
                                                    std::to_string(vs[j].dim()) + ", expected " +
                                                    std::to_string(d));
    }
    cols.col(static_cast<Eigen::Index>(j)) = vs[j].normalized();
  }
  Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  const double cut = tol::rank * sv[0];
  Eigen::Index r = 0;
  while (r < sv.size() && sv[r] > cut) ++r;
  return Projector::from_orthonormal_columns(d, svd.matrixU().leftCols(r));
}

inline Projector projector_from_vector(const Vector& v) {
  return projector_from_vectors(std::span<const Vector>(&v, 1));
}

inline bool is_orthogonal(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  return norm_inf(p.matrix() * q.matrix()) <= tol::orth;
}

inline bool commutes(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  return norm_inf(p.matrix() * q.matrix() - q.matrix() * p.matrix()) <= tol::orth;
}

/// p <= q as subspaces, i.e. q p = p.
inline bool is_subprojector(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  return norm_inf(q.matrix() * p.matrix() - p.matrix()) <= tol::proj;
}

/// Projector onto ran(p) ∩ ran(q): the eigenvalue-2 spectral projector of p + q.
inline Projector meet(const Projector& p, const Projector& q) {
  check_same_dim(p, q);
  if (p.is_zero() || q.is_zero()) return Projector::zero(p.dim());
  return spectral_projector(p.matrix() + q.matrix(), 2.0 - tol::meet);
}

/// Product of commuting projectors, re-validated as a projector.
inline Projector commuting_product(const Projector& p, const Projector& q) {
  return Projector::from_operator(p.op() * q.op());
}

/// Unit vector spanning a rank-1 projector, scaled so its first nonzero
/// component is +1.
inline ColVector canonical_ray(const Projector& p) {
  if (p.rank() != 1) throw Error(ErrorCode::InvalidArgument, "canonical_ray needs a rank-1 projector");
  const Matrix& m = p.matrix();
  Eigen::Index best = 0;
  m.diagonal().real().maxCoeff(&best);
  ColVector v = m.col(best);
  v /= v.norm();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > 1e-9) {
      v /= v[i];
      break;
    }
  }
  return v;
}

/// Hash of the entries rounded to 12 decimal places. Used as a display tag;
/// equality decisions go through approx_equal.
inline std::uint64_t fingerprint(const Projector& p) {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](long long x) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>((x >> (8 * b)) & 0xff);
      h *= 1099511628211ull;
    }
  };
  mix(p.dim());
  const Matrix& m = p.matrix();
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    mix(std::llround(m.data()[i].real() * 1e12));
    mix(std::llround(m.data()[i].imag() * 1e12));
  }
  return h;
}

/// Insertion-ordered set of projectors, deduplicated up to tol::proj.
class ProjectorIndex {
 public:
  std::optional<std::size_t> find(const Projector& p) const {
    const double sig = signature(p);
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const Projector& q = items_[i];
      if (q.dim() != p.dim() || q.rank() != p.rank()) continue;
      if (std::abs(sigs_[i] - sig) > slack(p.dim())) continue;
      if (approx_equal(p, q)) return i;
    }
    return std::nullopt;
  }

  /// Returns (index, inserted).
  std::pair<std::size_t, bool> insert(const Projector& p) {
    if (auto i = find(p)) return {*i, false};
    items_.push_back(p);
    sigs_.push_back(signature(p));
    return {items_.size() - 1, true};
  }

  std::size_t size() const noexcept { return items_.size(); }
  const Projector& operator[](std::size_t i) const { return items_[i]; }

 private:
  // Weighted entry sum; tol-close matrices have signatures within slack().
  static double signature(const Projector& p) {
    const Matrix& m = p.matrix();
    double s = 0.0;
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += m(i, j).real() * static_cast<double>(1 + i + 2 * j) + m(i, j).imag() * static_cast<double>(3 + 2 * i + j);
      }
    }
    return s;
  }
  static double slack(int d) { return tol::proj * 8.0 * d * d * (3.0 * d + 3.0) + 1e-12; }

  std::vector<Projector> items_;
  std::vector<double> sigs_;
};

}  // namespace ppsctx
