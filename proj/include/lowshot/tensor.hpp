#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace lowshot {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ClassId = std::int32_t;

/// Vectors at or below this norm cannot be normalized.
inline constexpr double kNormEpsilon = 1e-12;

/// Sequential inner product. Every similarity used for prediction goes
/// through this so that equal inputs give bitwise-equal scores regardless of
/// memory alignment.
double dot(std::span<const double> a, std::span<const double> b);
double dot(const Vector& a, const Vector& b);

double l2_norm(std::span<const double> v);

/// u = v / ||v||. Throws DegenerateNorm when ||v|| <= kNormEpsilon.
Vector l2_normalize(const Vector& v);

/// Vector-Jacobian product of l2_normalize: (I - u u^T) g / ||v||.
Vector l2_normalize_backward(const Vector& v, const Vector& u, const Vector& upstream);

/// Column-wise l2_normalize. `norms`, if given, receives each column's norm.
Matrix normalize_columns(const Matrix& m, Vector* norms = nullptr);

/// Column-wise l2_normalize_backward given the forward outputs.
Matrix normalize_columns_backward(const Matrix& unit, const Vector& norms, const Matrix& upstream);

bool all_finite(const Matrix& m);

/// Entries i.i.d. uniform on [-L, L], L = sqrt(6 / (rows + cols)).
Matrix xavier_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed);

/// Deep copy of column `j` as an owning vector.
inline Vector column(const Matrix& m, Eigen::Index j) { return m.col(j); }

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace lowshot

namespace lowshot {

/// Exact equality of shape and of every stored bit.
bool bitwise_equal(const Matrix& a, const Matrix& b);

}  // namespace lowshot
