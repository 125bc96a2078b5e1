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

// DP-SGD on the reparameterized ELBO.

#ifndef SYNTHTWIN_DPVI_TRAIN_H_
#define SYNTHTWIN_DPVI_TRAIN_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "json.hpp"
#include "synthtwin/dpvi/elbo.h"
#include "synthtwin/genmodel/params.h"
#include "synthtwin/privacy/accountant.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::dpvi {

// lr_t = base / sqrt(1 + t / decay_steps).
struct LrSchedule {
  double base = 1e-2;
  double decay_steps = 100.0;

  double At(std::int64_t t) const;
};

struct DpviConfig {
  double epsilon = 1.0;
  std::optional<double> delta;  // 1 / N when unset
  double clip_norm = 2.0;
  std::size_t expected_batch = 100;  // capped at N
  std::int64_t iterations = 2000;
  LrSchedule learning_rate;
  int mc_samples = 1;
  double prior_scale = 1.0;
  int components = genmodel::kDefaultComponents;
  double init_log_std = -2.0;
  std::uint64_t seed = 0;
  // sigma = 0 and no clipping; the accountant reports epsilon = +inf.
  bool non_private = false;
  // Record the full-data ELBO every this many steps (0 disables).
  std::int64_t elbo_every = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static DpviConfig FromJson(const nlohmann::json& j);
};

struct ElboPoint {
  std::int64_t step = 0;
  double value = 0.0;  // ELBO / N
};

struct TrainResult {
  VariationalPosterior posterior;
  privacy::AccountantSummary accountant;
  double clip_norm = 0.0;
  std::vector<ElboPoint> elbo_trace;
};

// Throws std::runtime_error if sigma cannot be calibrated; that happens
// before the data is read.
TrainResult Train(const tabular::Dataset& data, const DpviConfig& config);

// One posterior step with a given (already privatized) gradient over
// [mean, log_std].
void ApplyUpdate(VariationalPosterior& posterior, const Eigen::VectorXd& grad,
                 double lr);

// z ~ N(mean, diag(exp(2 log_std))), constrained.
genmodel::GenerativeParams DrawGenerator(const genmodel::ParamLayout& layout,
                                         const VariationalPosterior& posterior,
                                         std::uint64_t seed);

// Full-data ELBO / N averaged over fixed standard-normal draws (columns).
double ElboPerExample(const genmodel::ParamLayout& layout,
                      const VariationalPosterior& posterior,
                      const Eigen::MatrixXd& etas, const tabular::Dataset& data,
                      const Prior& prior);

// A trained generator as persisted: layout, posterior and privacy cost.
struct TrainedGenerator {
  tabular::SchemaPtr schema;
  int components = 0;
  VariationalPosterior posterior;
  privacy::AccountantSummary accountant;
  nlohmann::json config;

  genmodel::ParamLayout layout() const { return {schema, components}; }
  nlohmann::json ToJson() const;
  static TrainedGenerator FromJson(const nlohmann::json& j);
};

}  // namespace synthtwin::dpvi

#endif  // SYNTHTWIN_DPVI_TRAIN_H_
