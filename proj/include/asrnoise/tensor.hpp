// include/asrnoise/tensor.hpp

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ASRNOISE_TENSOR_HPP_
#define ASRNOISE_TENSOR_HPP_

#include <cassert>
#include <cstddef>
#include <vector>

namespace asrnoise {

/// Dense row-major double matrix. Small enough on purpose: the models here
/// are desk scale and double precision keeps the finite-difference checks
/// honest.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

  double* row(int i) { return data.data() + static_cast<std::size_t>(i) * cols; }
  const double* row(int i) const {
    return data.data() + static_cast<std::size_t>(i) * cols;
  }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  double at(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  std::size_t size() const { return data.size(); }
  void zero() { std::fill(data.begin(), data.end(), 0.0); }
  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

// The three matmul kernels used throughout the model code. The parallel
// versions split output rows across the worker pool; each output element is
// accumulated in the same k-order as the serial reference, so serial and
// parallel results are bitwise identical (tests enforce this).

// out = a . b             a: m x k, b: k x n
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
// out = a . b^T           a: m x k, b: n x k
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T . b           a: k x m, b: k x n
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

namespace serial {
// Reference implementations, kept for tests and the kernel benchmark.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
}  // namespace serial

// out += a . b etc.; same shapes and determinism contract as above.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out);

}  // namespace asrnoise

#endif  // ASRNOISE_TENSOR_HPP_
