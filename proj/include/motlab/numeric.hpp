#pragma once

#include <cmath>
#include <cstdio>
#include <cstddef>
#include <string>
#include <vector>

#include "motlab/errors.hpp"

namespace motlab {

/// Formats a double with 17 significant digits, enough to round-trip
/// any IEEE-754 double exactly.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

/// Row-major dense matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static DenseMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    DenseMatrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != m.cols_)
        throw DimensionMismatchError("ragged matrix rows");
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  double& operator()(std::size_t i, std::size_t j) {
    return data_[i * cols_ + j];
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  double row_sum(std::size_t i) const {
    double s = 0;
    for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j);
    return s;
  }
  double col_sum(std::size_t j) const {
    double s = 0;
    for (std::size_t i = 0; i < rows_; ++i) s += (*this)(i, j);
    return s;
  }
  double total() const {
    double s = 0;
    for (double x : data_) s += x;
    return s;
  }

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<double> data_;
};

}  // namespace motlab
