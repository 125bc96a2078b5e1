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

#include "synthtwin/dpvi/elbo.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "synthtwin/common/random.h"
#include "synthtwin/kernels/kernels.h"
#include "synthtwin/tabular/ops.h"

namespace synthtwin::dpvi {
namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

// Log-softmax of [logits, 0].
void PinnedLogSoftmax(const double* logits, std::size_t free, double* log_out,
                      double* out) {
  double m = 0.0;
  for (std::size_t k = 0; k < free; ++k) m = std::max(m, logits[k]);
  double sum = std::exp(-m);
  for (std::size_t k = 0; k < free; ++k) sum += std::exp(logits[k] - m);
  const double lse = m + std::log(sum);
  for (std::size_t k = 0; k < free; ++k) log_out[k] = logits[k] - lse;
  log_out[free] = -lse;
  for (std::size_t k = 0; k <= free; ++k) out[k] = std::exp(log_out[k]);
}

void CheckBatch(const tabular::Dataset& batch, std::size_t n_total) {
  if (batch.empty()) throw std::invalid_argument("elbo: empty batch");
  if (n_total < batch.rows()) {
    throw std::invalid_argument("elbo: N smaller than batch size");
  }
}

template <typename ForEach>
Eigen::MatrixXd GradientsWith(const genmodel::ParamLayout& layout,
                              const VariationalPosterior& posterior,
                              const Eigen::MatrixXd& etas,
                              const tabular::Dataset& batch,
                              std::size_t n_total, const Prior& prior,
                              ForEach for_each) {
  CheckBatch(batch, n_total);
  const Eigen::Index dim = layout.size();
  if (posterior.dim() != dim || etas.rows() != dim || etas.cols() < 1) {
    throw std::invalid_argument("per_example_grads: dimension mismatch");
  }
  const int samples = static_cast<int>(etas.cols());
  const double inv_n = 1.0 / static_cast<double>(n_total);
  const Eigen::VectorXd scale = posterior.log_std.array().exp();

  // Per-draw quantities shared by the whole batch.
  std::vector<Eigen::VectorXd> z(samples);
  std::vector<Eigen::VectorXd> reg_z(samples);    // d(log prior)/dz / N
  std::vector<Eigen::VectorXd> dz_dlogstd(samples);
  std::vector<ModelEvaluator> evaluators;
  evaluators.reserve(samples);
  for (int s = 0; s < samples; ++s) {
    z[s] = posterior.mean + scale.cwiseProduct(etas.col(s));
    reg_z[s] = prior.Gradient(z[s]) * inv_n;
    dz_dlogstd[s] = scale.cwiseProduct(etas.col(s));
    evaluators.emplace_back(layout, z[s]);
  }

  Eigen::MatrixXd grads(batch.rows(), 2 * dim);
  for_each(batch.rows(), [&](std::size_t i) {
    Eigen::VectorXd dz(dim);
    Eigen::VectorXd g_mean = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd g_logstd = Eigen::VectorXd::Zero(dim);
    for (int s = 0; s < samples; ++s) {
      evaluators[s].LogLikAndGradient(batch.row(i), batch.target(i), dz.data());
      dz += reg_z[s];
      g_mean += dz;
      g_logstd.array() += dz.array() * dz_dlogstd[s].array() + inv_n;
    }
    grads.row(i).head(dim) = g_mean / samples;
    grads.row(i).tail(dim) = g_logstd / samples;
  });
  return grads;
}

}  // namespace

VariationalPosterior VariationalPosterior::Initial(Eigen::Index dim,
                                                   double log_std) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Constant(dim, log_std)};
}

Eigen::VectorXd VariationalPosterior::Reparameterize(
    const Eigen::VectorXd& eta) const {
  return mean + log_std.array().exp().matrix().cwiseProduct(eta);
}

nlohmann::json VariationalPosterior::ToJson() const {
  return {{"mean", std::vector<double>(mean.data(), mean.data() + mean.size())},
          {"log_std",
           std::vector<double>(log_std.data(), log_std.data() + log_std.size())}};
}

VariationalPosterior VariationalPosterior::FromJson(const nlohmann::json& j) {
  auto m = j.at("mean").get<std::vector<double>>();
  auto s = j.at("log_std").get<std::vector<double>>();
  if (m.size() != s.size()) {
    throw std::invalid_argument("posterior: mean and log_std lengths differ");
  }
  return {Eigen::Map<Eigen::VectorXd>(m.data(), m.size()),
          Eigen::Map<Eigen::VectorXd>(s.data(), s.size())};
}

double Prior::LogDensity(const Eigen::VectorXd& z) const {
  if (weight == 0.0) return 0.0;
  const double n = static_cast<double>(z.size());
  return weight * (-0.5 * z.squaredNorm() / (scale * scale) -
                   n * (std::log(scale) + kHalfLog2Pi));
}

Eigen::VectorXd Prior::Gradient(const Eigen::VectorXd& z) const {
  return -(weight / (scale * scale)) * z;
}

double LogPosteriorDensity(const VariationalPosterior& q, const Eigen::VectorXd& z) {
  const Eigen::ArrayXd u = (z - q.mean).array() / q.log_std.array().exp();
  return -0.5 * u.square().sum() - q.log_std.sum() -
         static_cast<double>(z.size()) * kHalfLog2Pi;
}

ModelEvaluator::ModelEvaluator(const genmodel::ParamLayout& layout,
                               const Eigen::VectorXd& z)
    : layout_(layout), schema_(layout.schema()) {
  if (z.size() != layout.size()) {
    throw std::invalid_argument("model evaluator: vector length mismatch");
  }
  const int R = layout.components();
  log_pi_.resize(R);
  pi_.resize(R);
  PinnedLogSoftmax(z.data() + layout.MixtureOffset(), R - 1, log_pi_.data(),
                   pi_.data());
  const std::size_t total = schema_.TotalCategories();
  log_theta_.resize(R * total);
  theta_.resize(R * total);
  for (int r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < schema_.num_features(); ++j) {
      const std::size_t at = r * total + schema_.CategoryOffset(j);
      PinnedLogSoftmax(z.data() + layout.TableLogitOffset(r, j),
                       schema_.cardinality(j) - 1, log_theta_.data() + at,
                       theta_.data() + at);
    }
  }
  w_ = z.data() + layout.WeightsOffset();
}

double ModelEvaluator::LogLik(std::span<const tabular::Code> x, int y) const {
  const int R = layout_.components();
  const std::size_t total = schema_.TotalCategories();
  double m = -std::numeric_limits<double>::infinity();
  double a[256];
  std::vector<double> heap;
  double* terms = a;
  if (R > 256) {
    heap.resize(R);
    terms = heap.data();
  }
  for (int r = 0; r < R; ++r) {
    double t = log_pi_[r];
    for (std::size_t j = 0; j < x.size(); ++j) {
      t += log_theta_[r * total + schema_.CategoryOffset(j) + x[j]];
    }
    terms[r] = t;
    m = std::max(m, t);
  }
  double sum = 0.0;
  for (int r = 0; r < R; ++r) sum += std::exp(terms[r] - m);
  const double eta = tabular::LinearPredictor(schema_, w_, x);
  return m + std::log(sum) + y * eta - std::exp(eta) - std::lgamma(y + 1.0);
}

double ModelEvaluator::LogLikAndGradient(std::span<const tabular::Code> x, int y,
                                         double* grad) const {
  const int R = layout_.components();
  const std::size_t total = schema_.TotalCategories();
  std::fill_n(grad, layout_.size(), 0.0);

  std::vector<double> resp(R);
  double m = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < R; ++r) {
    double t = log_pi_[r];
    for (std::size_t j = 0; j < x.size(); ++j) {
      t += log_theta_[r * total + schema_.CategoryOffset(j) + x[j]];
    }
    resp[r] = t;
    m = std::max(m, t);
  }
  double sum = 0.0;
  for (int r = 0; r < R; ++r) {
    resp[r] = std::exp(resp[r] - m);
    sum += resp[r];
  }
  const double log_mix = m + std::log(sum);
  for (int r = 0; r < R; ++r) resp[r] /= sum;

  // d/du_k log sum_r pi_r f_r = resp_k - pi_k for the free mixture logits.
  for (int k = 0; k + 1 < R; ++k) grad[layout_.MixtureOffset() + k] = resp[k] - pi_[k];
  // d/dv_{r,j,c} = resp_r * ([x_j == c] - theta_{r,j,c}).
  for (int r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double* th = theta_.data() + r * total + schema_.CategoryOffset(j);
      double* g = grad + layout_.TableLogitOffset(r, j);
      const int free = schema_.cardinality(j) - 1;
      for (int c = 0; c < free; ++c) {
        g[c] = resp[r] * ((x[j] == c ? 1.0 : 0.0) - th[c]);
      }
    }
  }
  const double eta = tabular::LinearPredictor(schema_, w_, x);
  const double lambda = std::exp(eta);
  const double d = y - lambda;
  double* gw = grad + layout_.WeightsOffset();
  gw[0] = d;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > 0) gw[schema_.EncodedOffset(j) + x[j] - 1] = d;
  }
  return log_mix + y * eta - lambda - std::lgamma(y + 1.0);
}

Eigen::VectorXd ElboTerms(const genmodel::ParamLayout& layout,
                          const VariationalPosterior& posterior,
                          const Eigen::VectorXd& z, const tabular::Dataset& batch,
                          std::size_t n_total, const Prior& prior) {
  CheckBatch(batch, n_total);
  ModelEvaluator eval(layout, z);
  const double shared = (prior.LogDensity(z) - LogPosteriorDensity(posterior, z)) /
                        static_cast<double>(n_total);
  Eigen::VectorXd terms(batch.rows());
  for (std::size_t i = 0; i < batch.rows(); ++i) {
    terms(i) = eval.LogLik(batch.row(i), batch.target(i)) + shared;
  }
  return terms;
}

Eigen::VectorXd ElboTermsAt(const genmodel::ParamLayout& layout,
                            const VariationalPosterior& posterior,
                            const Eigen::VectorXd& eta,
                            const tabular::Dataset& batch, std::size_t n_total,
                            const Prior& prior) {
  return ElboTerms(layout, posterior, posterior.Reparameterize(eta), batch,
                   n_total, prior);
}

Eigen::VectorXd RegularizerGradient(const VariationalPosterior& posterior,
                                    const Eigen::VectorXd& eta,
                                    const Prior& prior) {
  const Eigen::Index dim = posterior.dim();
  const Eigen::VectorXd scale = posterior.log_std.array().exp();
  const Eigen::VectorXd gz = prior.Gradient(posterior.mean + scale.cwiseProduct(eta));
  Eigen::VectorXd out(2 * dim);
  // -log q(z) = |eta|^2 / 2 + sum log_std + const, independent of the mean.
  out.head(dim) = gz;
  out.tail(dim) = (gz.array() * scale.array() * eta.array() + 1.0).matrix();
  return out;
}

Eigen::MatrixXd PerExampleGradientsAt(const genmodel::ParamLayout& layout,
                                      const VariationalPosterior& posterior,
                                      const Eigen::MatrixXd& etas,
                                      const tabular::Dataset& batch,
                                      std::size_t n_total, const Prior& prior) {
  return GradientsWith(layout, posterior, etas, batch, n_total, prior,
                       [](std::size_t n, auto&& f) { kernels::omp::ForEach(n, f); });
}

namespace serial {
Eigen::MatrixXd PerExampleGradientsAt(const genmodel::ParamLayout& layout,
                                      const VariationalPosterior& posterior,
                                      const Eigen::MatrixXd& etas,
                                      const tabular::Dataset& batch,
                                      std::size_t n_total, const Prior& prior) {
  return GradientsWith(layout, posterior, etas, batch, n_total, prior,
                       [](std::size_t n, auto&& f) { kernels::serial::ForEach(n, f); });
}
}  // namespace serial

Eigen::MatrixXd StandardNormalDraws(Eigen::Index dim, int count, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(dim, count);
  for (int s = 0; s < count; ++s) {
    for (Eigen::Index k = 0; k < dim; ++k) out(k, s) = normal(rng);
  }
  return out;
}

Eigen::MatrixXd PerExampleGradients(const genmodel::ParamLayout& layout,
                                    const VariationalPosterior& posterior,
                                    const tabular::Dataset& batch,
                                    std::size_t n_total, const Prior& prior,
                                    std::uint64_t seed, int mc_samples) {
  if (mc_samples < 1) throw std::invalid_argument("per_example_grads: mc_samples < 1");
  return PerExampleGradientsAt(layout, posterior,
                               StandardNormalDraws(layout.size(), mc_samples, seed),
                               batch, n_total, prior);
}

}  // namespace synthtwin::dpvi
