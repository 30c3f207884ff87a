#include "lowshot/tensor.hpp"

#include "lowshot/error.hpp"
#include "lowshot/random.hpp"

#include <cmath>
#include <cstring>
#include <string>

namespace lowshot {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::InvalidShape, "dot of sizes " + std::to_string(a.size()) + " and " + std::to_string(b.size()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double dot(const Vector& a, const Vector& b) { return dot(as_span(a), as_span(b)); }

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vector l2_normalize(const Vector& v) {
  if (!v.allFinite()) throw Error(Errc::DegenerateNorm, "vector has non-finite entries");
  const double norm = l2_norm(as_span(v));
  if (!(norm > kNormEpsilon)) throw Error(Errc::DegenerateNorm, "norm " + std::to_string(norm) + " <= 1e-12");
  Vector u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = v[i] / norm;
  return u;
}

Vector l2_normalize_backward(const Vector& v, const Vector& u, const Vector& upstream) {
  const double norm = l2_norm(as_span(v));
  return (upstream - u * u.dot(upstream)) / norm;
}

Matrix normalize_columns(const Matrix& m, Vector* norms) {
  Matrix out(m.rows(), m.cols());
  if (norms) norms->resize(m.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const Vector col = m.col(j);
    if (norms) (*norms)[j] = l2_norm(as_span(col));
    try {
      out.col(j) = l2_normalize(col);
    } catch (const Error& e) {
      throw Error(Errc::DegenerateNorm, "column " + std::to_string(j) + ": " + e.detail());
    }
  }
  return out;
}

Matrix normalize_columns_backward(const Matrix& unit, const Vector& norms, const Matrix& upstream) {
  // Per column: (g - u (u^T g)) / ||v||
  const Eigen::RowVectorXd proj = (unit.array() * upstream.array()).colwise().sum();
  Matrix out = upstream - unit * proj.asDiagonal();
  return out * norms.cwiseInverse().asDiagonal();
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

Matrix xavier_uniform(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) {
    throw Error(Errc::InvalidShape, "xavier_uniform shape " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  CounterRng rng(seed);
  Matrix m(rows, cols);
  // Column-major fill order is part of the determinism contract.
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-limit, limit);
  return m;
}

bool bitwise_equal(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  if (a.size() == 0) return true;
  return std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace lowshot
