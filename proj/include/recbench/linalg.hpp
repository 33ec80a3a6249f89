#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace recbench {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::vector<double>& data() noexcept { return data_; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool all_finite() const noexcept {
    for (const double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  double squared_norm() const noexcept {
    double s = 0.0;
    for (const double v : data_) s += v * v;
    return s;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Solves A x = b for symmetric positive definite A (n x n, row-major).
// Returns nullopt when the Cholesky factorisation fails.
inline std::optional<std::vector<double>> cholesky_solve(const std::vector<double>& a, const std::vector<double>& b,
                                                         std::size_t n) {
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const auto dim = static_cast<Eigen::Index>(n);
  const Eigen::Map<const RowMajor> A(a.data(), dim, dim);
  const Eigen::LLT<RowMajor> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  std::vector<double> x(n);
  Eigen::Map<Eigen::VectorXd>(x.data(), dim) = llt.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), dim));
  for (const double v : x) {
    if (!std::isfinite(v)) return std::nullopt;
  }
  return x;
}

}  // namespace recbench
