#pragma once

#include <cassert>
#include <cstddef>
#include <span>
#include <vector>

namespace hardbench {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const noexcept {
    assert(r < rows_ && c < cols_);
    return values_[r * cols_ + c];
  }

  std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

/// Dense 3-d array indexed [outer][middle][inner], inner fastest.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(std::size_t outer, std::size_t middle, std::size_t inner, double fill = 0.0)
      : outer_(outer), middle_(middle), inner_(inner), values_(outer * middle * inner, fill) {}

  std::size_t outer() const noexcept { return outer_; }
  std::size_t middle() const noexcept { return middle_; }
  std::size_t inner() const noexcept { return inner_; }
  bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t a, std::size_t b, std::size_t c) noexcept {
    assert(a < outer_ && b < middle_ && c < inner_);
    return values_[(a * middle_ + b) * inner_ + c];
  }
  double operator()(std::size_t a, std::size_t b, std::size_t c) const noexcept {
    assert(a < outer_ && b < middle_ && c < inner_);
    return values_[(a * middle_ + b) * inner_ + c];
  }

  std::span<double> at(std::size_t a, std::size_t b) noexcept {
    return {values_.data() + (a * middle_ + b) * inner_, inner_};
  }
  std::span<const double> at(std::size_t a, std::size_t b) const noexcept {
    return {values_.data() + (a * middle_ + b) * inner_, inner_};
  }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  bool operator==(const Tensor3&) const = default;

 private:
  std::size_t outer_ = 0;
  std::size_t middle_ = 0;
  std::size_t inner_ = 0;
  std::vector<double> values_;
};

}  // namespace hardbench
