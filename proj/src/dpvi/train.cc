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

#include "synthtwin/dpvi/train.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "synthtwin/common/random.h"
#include "synthtwin/privacy/gaussian_mechanism.h"

namespace synthtwin::dpvi {
namespace {

constexpr double kMinLogStd = -10.0;
constexpr double kMaxLogStd = 2.0;

// Poisson subsample: every row independently with probability q.
std::vector<std::size_t> PoissonBatch(std::size_t n, double q, std::uint64_t seed) {
  std::vector<std::size_t> idx;
  if (q >= 1.0) {
    idx.resize(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  CounterEngine rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (unif(rng) < q) idx.push_back(i);
  }
  return idx;
}

}  // namespace

double LrSchedule::At(std::int64_t t) const {
  return base / std::sqrt(1.0 + static_cast<double>(t) / decay_steps);
}

void DpviConfig::Validate() const {
  if (!(epsilon > 0.0) && !non_private) {
    throw std::invalid_argument("dpvi: epsilon must be positive");
  }
  if (delta && !(*delta > 0.0 && *delta < 1.0)) {
    throw std::invalid_argument("dpvi: delta must lie in (0, 1)");
  }
  if (!(clip_norm > 0.0)) throw std::invalid_argument("dpvi: clip_norm must be positive");
  if (expected_batch < 1) throw std::invalid_argument("dpvi: expected_batch must be >= 1");
  if (iterations < 0) throw std::invalid_argument("dpvi: iterations must be >= 0");
  if (!(learning_rate.base > 0.0) || !(learning_rate.decay_steps > 0.0)) {
    throw std::invalid_argument("dpvi: learning-rate schedule must be positive");
  }
  if (mc_samples < 1) throw std::invalid_argument("dpvi: mc_samples must be >= 1");
  if (!(prior_scale > 0.0)) throw std::invalid_argument("dpvi: prior_scale must be positive");
  if (components < 1) throw std::invalid_argument("dpvi: components must be >= 1");
  if (elbo_every < 0) throw std::invalid_argument("dpvi: elbo_every must be >= 0");
}

nlohmann::json DpviConfig::ToJson() const {
  return {{"epsilon", epsilon},
          {"delta", delta ? nlohmann::json(*delta) : nlohmann::json(nullptr)},
          {"clip_norm", clip_norm},
          {"expected_batch", expected_batch},
          {"iterations", iterations},
          {"learning_rate",
           {{"base", learning_rate.base}, {"decay_steps", learning_rate.decay_steps}}},
          {"mc_samples", mc_samples},
          {"prior_scale", prior_scale},
          {"components", components},
          {"init_log_std", init_log_std},
          {"seed", seed},
          {"non_private", non_private},
          {"elbo_every", elbo_every}};
}

DpviConfig DpviConfig::FromJson(const nlohmann::json& j) {
  DpviConfig c;
  c.epsilon = j.value("epsilon", c.epsilon);
  if (j.contains("delta") && !j.at("delta").is_null()) c.delta = j.at("delta").get<double>();
  c.clip_norm = j.value("clip_norm", c.clip_norm);
  c.expected_batch = j.value("expected_batch", c.expected_batch);
  c.iterations = j.value("iterations", c.iterations);
  if (j.contains("learning_rate")) {
    const auto& lr = j.at("learning_rate");
    c.learning_rate.base = lr.value("base", c.learning_rate.base);
    c.learning_rate.decay_steps = lr.value("decay_steps", c.learning_rate.decay_steps);
  }
  c.mc_samples = j.value("mc_samples", c.mc_samples);
  c.prior_scale = j.value("prior_scale", c.prior_scale);
  c.components = j.value("components", c.components);
  c.init_log_std = j.value("init_log_std", c.init_log_std);
  c.seed = j.value("seed", c.seed);
  c.non_private = j.value("non_private", c.non_private);
  c.elbo_every = j.value("elbo_every", c.elbo_every);
  c.Validate();
  return c;
}

void ApplyUpdate(VariationalPosterior& posterior, const Eigen::VectorXd& grad,
                 double lr) {
  const Eigen::Index dim = posterior.dim();
  if (grad.size() != 2 * dim) throw std::invalid_argument("dpvi: gradient size mismatch");
  posterior.mean += lr * grad.head(dim);
  posterior.log_std += lr * grad.tail(dim);
  posterior.log_std = posterior.log_std.cwiseMax(kMinLogStd).cwiseMin(kMaxLogStd);
}

double ElboPerExample(const genmodel::ParamLayout& layout,
                      const VariationalPosterior& posterior,
                      const Eigen::MatrixXd& etas, const tabular::Dataset& data,
                      const Prior& prior) {
  double total = 0.0;
  for (Eigen::Index s = 0; s < etas.cols(); ++s) {
    total += ElboTermsAt(layout, posterior, etas.col(s), data, data.rows(), prior).sum();
  }
  return total / (static_cast<double>(etas.cols()) * static_cast<double>(data.rows()));
}

TrainResult Train(const tabular::Dataset& data, const DpviConfig& config) {
  config.Validate();
  const std::size_t n = data.rows();
  if (n == 0) throw std::invalid_argument("dpvi: empty training set");
  const std::size_t batch = std::min(n, config.expected_batch);
  const double q = static_cast<double>(batch) / static_cast<double>(n);
  const double delta = config.delta.value_or(1.0 / static_cast<double>(n));

  double sigma = 0.0;
  double clip = config.clip_norm;
  if (config.non_private) {
    clip = std::numeric_limits<double>::infinity();
  } else if (config.iterations > 0) {
    sigma = privacy::CalibrateSigma({config.epsilon, delta}, q, config.iterations);
  }

  genmodel::ParamLayout layout(data.schema_ptr(), config.components);
  const Prior prior{config.prior_scale, 1.0};
  TrainResult result;
  result.posterior = VariationalPosterior::Initial(layout.size(), config.init_log_std);
  result.clip_norm = clip;

  const std::uint64_t batch_seed = DeriveSeed(config.seed, "batch");
  const std::uint64_t eta_seed = DeriveSeed(config.seed, "eta");
  const std::uint64_t noise_seed = DeriveSeed(config.seed, "noise");
  Eigen::MatrixXd trace_etas;
  if (config.elbo_every > 0) {
    trace_etas = StandardNormalDraws(layout.size(), 4, DeriveSeed(config.seed, "trace"));
  }

  for (std::int64_t t = 0; t < config.iterations; ++t) {
    const tabular::Dataset mb =
        data.Select(PoissonBatch(n, q, DeriveSeed(batch_seed, t)));
    Eigen::MatrixXd grads(0, 2 * layout.size());
    if (!mb.empty()) {
      grads = PerExampleGradientsAt(
          layout, result.posterior,
          StandardNormalDraws(layout.size(), config.mc_samples, DeriveSeed(eta_seed, t)),
          mb, n, prior);
    }
    const Eigen::VectorXd g = privacy::ClipAndNoise(
        grads, clip, sigma, DeriveSeed(noise_seed, t), static_cast<double>(batch));
    ApplyUpdate(result.posterior, g, config.learning_rate.At(t));
    if (config.elbo_every > 0 && (t + 1) % config.elbo_every == 0) {
      result.elbo_trace.push_back(
          {t + 1, ElboPerExample(layout, result.posterior, trace_etas, data, prior)});
    }
  }

  privacy::AccountantSummary& acc = result.accountant;
  acc.sampling_rate = q;
  acc.noise_multiplier = sigma;
  acc.steps = config.iterations;
  acc.dataset_size = static_cast<std::int64_t>(n);
  acc.delta = delta;
  acc.target_epsilon = config.epsilon;
  acc.non_private = config.non_private;
  if (config.non_private && config.iterations > 0) {
    acc.epsilon = std::numeric_limits<double>::infinity();
  } else if (config.iterations == 0) {
    acc.epsilon = 0.0;
  } else {
    acc.epsilon = privacy::TotalEpsilon(
        {q, sigma, config.iterations, privacy::DefaultAlphaGrid()}, delta);
    if (!(acc.epsilon <= config.epsilon)) {
      throw std::runtime_error("dpvi: certified epsilon exceeds the budget");
    }
  }
  return result;
}

genmodel::GenerativeParams DrawGenerator(const genmodel::ParamLayout& layout,
                                         const VariationalPosterior& posterior,
                                         std::uint64_t seed) {
  if (posterior.dim() != layout.size()) {
    throw std::invalid_argument("draw_generator: posterior does not match layout");
  }
  Eigen::VectorXd eta = StandardNormalDraws(layout.size(), 1, seed).col(0);
  return genmodel::Constrain(layout, posterior.Reparameterize(eta));
}

nlohmann::json TrainedGenerator::ToJson() const {
  return {{"schema", schema->ToJson()},
          {"components", components},
          {"posterior", posterior.ToJson()},
          {"accountant", accountant.ToJson()},
          {"config", config}};
}

TrainedGenerator TrainedGenerator::FromJson(const nlohmann::json& j) {
  TrainedGenerator g;
  g.schema = tabular::Schema::FromJson(j.at("schema"));
  g.components = j.at("components").get<int>();
  g.posterior = VariationalPosterior::FromJson(j.at("posterior"));
  g.accountant = privacy::AccountantSummary::FromJson(j.at("accountant"));
  g.config = j.value("config", nlohmann::json::object());
  if (g.posterior.dim() != genmodel::ParamLayout(g.schema, g.components).size()) {
    throw std::invalid_argument("trained generator: posterior size does not match schema");
  }
  return g;
}

}  // namespace synthtwin::dpvi
