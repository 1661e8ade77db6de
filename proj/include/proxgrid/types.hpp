#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace proxgrid {

/// Per-period power values for one terminal. Positive entries are
/// consumption, negative entries are generation.
using PowerProfile = std::vector<double>;

/// Dense row-major |terminals| x T matrix of power schedules. Terminal ids
/// are dense 0..rows-1, so row t is terminal t's profile and lives in one
/// contiguous block.
class ScheduleMatrix {
 public:
  ScheduleMatrix() = default;
  ScheduleMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, 0.0) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double* row(int t) { return data_.data() + static_cast<size_t>(t) * cols_; }
  const double* row(int t) const { return data_.data() + static_cast<size_t>(t) * cols_; }

  std::span<double> row_span(int t) { return {row(t), static_cast<size_t>(cols_)}; }
  std::span<const double> row_span(int t) const { return {row(t), static_cast<size_t>(cols_)}; }

  double& operator()(int t, int tau) { return data_[static_cast<size_t>(t) * cols_ + tau]; }
  double operator()(int t, int tau) const { return data_[static_cast<size_t>(t) * cols_ + tau]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  size_t size() const { return data_.size(); }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  friend bool operator==(const ScheduleMatrix& a, const ScheduleMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

}  // namespace proxgrid
