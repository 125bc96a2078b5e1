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

#include "synthtwin/kernels/kernels.h"

#include <cmath>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "synthtwin/tabular/ops.h"

namespace synthtwin::kernels {
namespace {

void AccumulateRows(const Eigen::MatrixXd& x, const Eigen::VectorXd& count,
                    const Eigen::VectorXd& positives, const Eigen::VectorXd& w,
                    Eigen::Index begin, Eigen::Index end, PoissonStats& out) {
  for (Eigen::Index i = begin; i < end; ++i) {
    const double eta = x.row(i).dot(w);
    const double lambda = std::exp(eta);
    const double mass = count(i) * lambda;
    out.loglik += positives(i) * eta - mass;
    out.score.noalias() += (positives(i) - mass) * x.row(i).transpose();
    out.info.selfadjointView<Eigen::Lower>().rankUpdate(x.row(i).transpose(),
                                                        mass);
  }
}

PoissonStats ZeroStats(Eigen::Index p) {
  return {Eigen::VectorXd::Zero(p), Eigen::MatrixXd::Zero(p, p), 0.0};
}

void Symmetrize(Eigen::MatrixXd& info) {
  info = info.selfadjointView<Eigen::Lower>();
}

double RowLogLik(const tabular::Dataset& ds, const double* w, std::size_t i) {
  const double eta = tabular::LinearPredictor(ds.schema(), w, ds.row(i));
  return ds.target(i) * eta - std::exp(eta);
}

}  // namespace

int MaxThreads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void SetThreads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace serial {

PoissonStats PoissonScoreInfo(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& count,
                              const Eigen::VectorXd& positives,
                              const Eigen::VectorXd& w) {
  PoissonStats stats = ZeroStats(x.cols());
  AccumulateRows(x, count, positives, w, 0, x.rows(), stats);
  Symmetrize(stats.info);
  return stats;
}

double PoissonLogLik(const tabular::Dataset& ds, std::span<const double> w) {
  double total = 0.0;
  for (std::size_t i = 0; i < ds.rows(); ++i) total += RowLogLik(ds, w.data(), i);
  return total;
}

}  // namespace serial

namespace omp {

PoissonStats PoissonScoreInfo(const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& count,
                              const Eigen::VectorXd& positives,
                              const Eigen::VectorXd& w) {
  const Eigen::Index n = x.rows();
  const auto block = static_cast<Eigen::Index>(kBlockRows);
  const Eigen::Index blocks = (n + block - 1) / block;
  std::vector<PoissonStats> partial(blocks, ZeroStats(x.cols()));
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    AccumulateRows(x, count, positives, w, b * block,
                   std::min(n, (b + 1) * block), partial[b]);
  }
  PoissonStats stats = ZeroStats(x.cols());
  for (const PoissonStats& p : partial) {
    stats.score += p.score;
    stats.info += p.info;
    stats.loglik += p.loglik;
  }
  Symmetrize(stats.info);
  return stats;
}

double PoissonLogLik(const tabular::Dataset& ds, std::span<const double> w) {
  const auto n = static_cast<std::ptrdiff_t>(ds.rows());
  const auto block = static_cast<std::ptrdiff_t>(kBlockRows);
  const std::ptrdiff_t blocks = (n + block - 1) / block;
  std::vector<double> partial(blocks, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < blocks; ++b) {
    double sum = 0.0;
    for (std::ptrdiff_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
      sum += RowLogLik(ds, w.data(), static_cast<std::size_t>(i));
    }
    partial[b] = sum;
  }
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace omp
}  // namespace synthtwin::kernels
