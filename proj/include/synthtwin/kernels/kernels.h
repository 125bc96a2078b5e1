// Copyright 2026 The Synthtwin Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Data-parallel inner loops. Every kernel has a plain serial reference in
// kernels::serial and an OpenMP version in kernels::omp.
//
// The OpenMP reductions split the index range into fixed-size blocks, reduce
// each block independently and then add the block partials in block order, so
// their result does not depend on the number of threads. They may differ from
// the serial reference by floating-point reassociation only.

#ifndef SYNTHTWIN_KERNELS_KERNELS_H_
#define SYNTHTWIN_KERNELS_KERNELS_H_

#include <cstddef>
#include <span>

#include <Eigen/Dense>

#include "synthtwin/tabular/dataset.h"

namespace synthtwin::kernels {

inline constexpr std::size_t kBlockRows = 512;

// Sufficient statistics of the Poisson log-link likelihood over weighted rows:
// row k of `x` stands for count[k] observations with positives[k] successes.
struct PoissonStats {
  Eigen::VectorXd score;  // X^T (positives - count * lambda)
  Eigen::MatrixXd info;   // X^T diag(count * lambda) X
  double loglik = 0.0;    // sum positives * eta - count * lambda
};

// Number of threads OpenMP kernels will use (1 without OpenMP).
int MaxThreads();
// Sets the OpenMP thread count; no-op without OpenMP.
void SetThreads(int n);

namespace serial {

PoissonStats PoissonScoreInfo(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& count,
                              const Eigen::VectorXd& positives,
                              const Eigen::VectorXd& w);

// sum_i y_i eta_i - exp(eta_i) with eta_i = w^T x~_i (y in {0,1}, so the
// log-factorial term vanishes).
double PoissonLogLik(const tabular::Dataset& ds, std::span<const double> w);

template <typename F>
void ForEach(std::size_t n, F&& f) {
  for (std::size_t i = 0; i < n; ++i) f(i);
}

}  // namespace serial

namespace omp {

PoissonStats PoissonScoreInfo(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& count,
                              const Eigen::VectorXd& positives,
                              const Eigen::VectorXd& w);

double PoissonLogLik(const tabular::Dataset& ds, std::span<const double> w);

// Calls f(i) for every i in [0, n), statically scheduled. f must only write
// to slots owned by i.
template <typename F>
void ForEach(std::size_t n, F&& f) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) f(static_cast<std::size_t>(i));
}

}  // namespace omp
}  // namespace synthtwin::kernels

#endif  // SYNTHTWIN_KERNELS_KERNELS_H_
