#pragma once

#include <Eigen/Dense>

#include <span>

namespace drbsgt {

/// Agent-major storage: row i holds agent i's copy of a length-n vector.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline std::span<const double> row_span(const Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<double> row_span(Matrix& m, Eigen::Index row) {
  return {m.data() + row * m.cols(), static_cast<std::size_t>(m.cols())};
}

inline std::span<const double> as_span(const Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline std::span<double> as_span(Vector& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

inline Eigen::Map<const Vector> as_vector(std::span<const double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

inline Eigen::Map<Vector> as_vector(std::span<double> s) {
  return {s.data(), static_cast<Eigen::Index>(s.size())};
}

/// Row average (1/m) 1ᵀ u.
inline RowVector row_mean(const Matrix& u) { return u.colwise().mean(); }

/// ‖u − 1ū‖²_F, the squared Frobenius dispersion of the rows around their mean.
inline double dispersion_squared(const Matrix& u) {
  const RowVector mean = row_mean(u);
  return (u.rowwise() - mean).squaredNorm();
}

}  // namespace drbsgt
