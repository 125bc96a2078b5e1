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

// Doubly-stochastic ELBO for the two-part generator under a mean-field
// Gaussian posterior over the unconstrained coordinates.
//
// With z = mean + exp(log_std) * eta, the term attributed to example i is
//
//   e_i(z) = log p(x_i, y_i | z) + (log prior(z) - log q(z)) / N,
//
// so that (N / |batch|) * sum_i e_i is an unbiased estimate of the ELBO.

#ifndef SYNTHTWIN_DPVI_ELBO_H_
#define SYNTHTWIN_DPVI_ELBO_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "synthtwin/genmodel/params.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::dpvi {

struct VariationalPosterior {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_std;

  static VariationalPosterior Initial(Eigen::Index dim, double log_std = -2.0);
  Eigen::Index dim() const { return mean.size(); }
  // mean + exp(log_std) * eta.
  Eigen::VectorXd Reparameterize(const Eigen::VectorXd& eta) const;

  nlohmann::json ToJson() const;
  static VariationalPosterior FromJson(const nlohmann::json& j);
};

// Isotropic Gaussian prior N(0, scale^2 I) on the unconstrained coordinates,
// raised to `weight` (weight 0 gives a flat prior).
struct Prior {
  double scale = 1.0;
  double weight = 1.0;

  double LogDensity(const Eigen::VectorXd& z) const;
  Eigen::VectorXd Gradient(const Eigen::VectorXd& z) const;
};

// log q(z) under the diagonal Gaussian posterior.
double LogPosteriorDensity(const VariationalPosterior& q, const Eigen::VectorXd& z);

// Log-likelihood of the generator at a fixed unconstrained point, with the
// gradient in unconstrained coordinates.
class ModelEvaluator {
 public:
  ModelEvaluator(const genmodel::ParamLayout& layout, const Eigen::VectorXd& z);

  double LogLik(std::span<const tabular::Code> x, int y) const;
  // Overwrites `grad` (length layout.size()) with d LogLik / dz.
  double LogLikAndGradient(std::span<const tabular::Code> x, int y,
                           double* grad) const;

 private:
  const genmodel::ParamLayout& layout_;
  const tabular::Schema& schema_;
  std::vector<double> log_pi_;
  std::vector<double> pi_;
  std::vector<double> log_theta_;  // [r][category] flat, as in GenerativeParams
  std::vector<double> theta_;
  const double* w_;
};

// Per-example terms e_i at the explicit draw z.
Eigen::VectorXd ElboTerms(const genmodel::ParamLayout& layout,
                          const VariationalPosterior& posterior,
                          const Eigen::VectorXd& z, const tabular::Dataset& batch,
                          std::size_t n_total, const Prior& prior);

// Per-example terms at z = mean + exp(log_std) * eta.
Eigen::VectorXd ElboTermsAt(const genmodel::ParamLayout& layout,
                            const VariationalPosterior& posterior,
                            const Eigen::VectorXd& eta,
                            const tabular::Dataset& batch, std::size_t n_total,
                            const Prior& prior);

// Gradient of (log prior - log q) at z = mean + exp(log_std) * eta with
// respect to (mean, log_std), not divided by N. Returned as [d/dmean,
// d/dlog_std].
Eigen::VectorXd RegularizerGradient(const VariationalPosterior& posterior,
                                    const Eigen::VectorXd& eta,
                                    const Prior& prior);

// Gradients of every e_i with respect to [mean, log_std] (row i, 2D
// columns), for fixed draws eta (one column per Monte-Carlo sample, shared
// across the batch), averaged over the draws.
Eigen::MatrixXd PerExampleGradientsAt(const genmodel::ParamLayout& layout,
                                      const VariationalPosterior& posterior,
                                      const Eigen::MatrixXd& etas,
                                      const tabular::Dataset& batch,
                                      std::size_t n_total, const Prior& prior);

// As above with `mc_samples` standard-normal draws generated from `seed`.
Eigen::MatrixXd PerExampleGradients(const genmodel::ParamLayout& layout,
                                    const VariationalPosterior& posterior,
                                    const tabular::Dataset& batch,
                                    std::size_t n_total, const Prior& prior,
                                    std::uint64_t seed, int mc_samples = 1);

namespace serial {
Eigen::MatrixXd PerExampleGradientsAt(const genmodel::ParamLayout& layout,
                                      const VariationalPosterior& posterior,
                                      const Eigen::MatrixXd& etas,
                                      const tabular::Dataset& batch,
                                      std::size_t n_total, const Prior& prior);
}  // namespace serial

// Standard-normal matrix (dim x count) from `seed`.
Eigen::MatrixXd StandardNormalDraws(Eigen::Index dim, int count, std::uint64_t seed);

}  // namespace synthtwin::dpvi

#endif  // SYNTHTWIN_DPVI_ELBO_H_
