// src/tensor.cpp

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

#include "asrnoise/tensor.hpp"

#include "asrnoise/parallel.hpp"

namespace asrnoise {

namespace {

// One output row of a . b, accumulating over k in index order.
inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& out, int i,
                       bool accumulate) {
  double* o = out.row(i);
  if (!accumulate) {
    for (int j = 0; j < out.cols; ++j) o[j] = 0.0;
  }
  const double* ai = a.row(i);
  for (int k = 0; k < a.cols; ++k) {
    const double aik = ai[k];
    const double* bk = b.row(k);
    for (int j = 0; j < out.cols; ++j) o[j] += aik * bk[j];
  }
}

// One output row of a . b^T (row-by-row dot products).
inline void matmul_nt_row(const Matrix& a, const Matrix& b, Matrix& out, int i,
                          bool accumulate) {
  double* o = out.row(i);
  const double* ai = a.row(i);
  for (int j = 0; j < out.cols; ++j) {
    const double* bj = b.row(j);
    double sum = 0.0;
    for (int k = 0; k < a.cols; ++k) sum += ai[k] * bj[k];
    o[j] = accumulate ? o[j] + sum : sum;
  }
}

// One output row of a^T . b; row i of out reads column i of a.
inline void matmul_tn_row(const Matrix& a, const Matrix& b, Matrix& out, int i,
                          bool accumulate) {
  double* o = out.row(i);
  if (!accumulate) {
    for (int j = 0; j < out.cols; ++j) o[j] = 0.0;
  }
  for (int k = 0; k < a.rows; ++k) {
    const double aki = a.at(k, i);
    const double* bk = b.row(k);
    for (int j = 0; j < out.cols; ++j) o[j] += aki * bk[j];
  }
}

}  // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_row(a, b, out, static_cast<int>(i), false);
  });
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_nt_row(a, b, out, static_cast<int>(i), false);
  });
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_tn_row(a, b, out, static_cast<int>(i), false);
  });
}

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_row(a, b, out, static_cast<int>(i), true);
  });
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_nt_row(a, b, out, static_cast<int>(i), true);
  });
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  parallel::parallel_for(static_cast<std::size_t>(out.rows), [&](std::size_t i) {
    matmul_tn_row(a, b, out, static_cast<int>(i), true);
  });
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.rows && out.rows == a.rows && out.cols == b.cols);
  for (int i = 0; i < out.rows; ++i) matmul_row(a, b, out, i, false);
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.cols == b.cols && out.rows == a.rows && out.cols == b.rows);
  for (int i = 0; i < out.rows; ++i) matmul_nt_row(a, b, out, i, false);
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  assert(a.rows == b.rows && out.rows == a.cols && out.cols == b.cols);
  for (int i = 0; i < out.rows; ++i) matmul_tn_row(a, b, out, i, false);
}

}  // namespace serial

}  // namespace asrnoise
