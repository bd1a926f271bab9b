// Copyright 2026 The masksdm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MASKSDM_NUMERICS_TENSOR_H_
#define MASKSDM_NUMERICS_TENSOR_H_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace masksdm::numerics {

// Dense row-major matrix of doubles. Every tensor in the engine is rank 2;
// vectors are 1 x n rows and scalars are 1 x 1.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  // Throws kShapeMismatch if data.size() != rows * cols.
  Tensor(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Tensor FromRows(std::initializer_list<std::initializer_list<double>> rows);
  static Tensor Scalar(double value) { return Tensor(1, 1, value); }
  static Tensor ZerosLike(const Tensor& t) { return Tensor(t.rows_, t.cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool SameShape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  void Fill(double v);
  // this += other (same shape).
  void AddInPlace(const Tensor& other);
  bool AllFinite() const;
  std::string ShapeString() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Raw kernels on row-major buffers. `accumulate` adds into c instead of
// overwriting it.
// c[n x m] = a[n x k] * b[k x m]
void GemmNN(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m, bool accumulate);
// c[n x k] += a[n x m] * b[k x m]^T
void GemmNT(const double* a, const double* b, double* c, std::size_t n,
            std::size_t m, std::size_t k);
// c[k x m] += a[n x k]^T * b[n x m]
void GemmTN(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m);

}  // namespace masksdm::numerics

#endif  // MASKSDM_NUMERICS_TENSOR_H_
