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

#ifndef SYNTHTWIN_GENMODEL_PARAMS_H_
#define SYNTHTWIN_GENMODEL_PARAMS_H_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "synthtwin/tabular/schema.h"

namespace synthtwin::genmodel {

inline constexpr int kDefaultComponents = 16;

// Parameters of the two-part generator: a mixture of R products of
// categoricals over the features, and a Poisson-regression head over the
// target with rate exp(w^T x~) (x~ the reference-coded design row).
class GenerativeParams {
 public:
  // Uniform mixture, uniform tables, zero regression weights.
  GenerativeParams(tabular::SchemaPtr schema, int components);

  // Throws std::invalid_argument if a simplex is off by more than 1e-9 or
  // has a negative entry, or if shapes disagree with the schema.
  GenerativeParams(tabular::SchemaPtr schema,
                   std::vector<double> mixture_weights,
                   std::vector<double> tables, Eigen::VectorXd weights);

  const tabular::Schema& schema() const { return *schema_; }
  const tabular::SchemaPtr& schema_ptr() const { return schema_; }
  int components() const { return static_cast<int>(mixture_.size()); }

  std::span<const double> mixture_weights() const { return mixture_; }
  // theta_j^(r), a simplex over the categories of feature j.
  std::span<const double> table(int r, std::size_t j) const {
    return {tables_.data() + TableOffset(r, j),
            static_cast<std::size_t>(schema_->cardinality(j))};
  }
  // Flat [r][j][c] layout, components major.
  std::span<const double> tables() const { return tables_; }
  const Eigen::VectorXd& regression_weights() const { return weights_; }

  std::size_t TableOffset(int r, std::size_t j) const {
    return static_cast<std::size_t>(r) * schema_->TotalCategories() +
           schema_->CategoryOffset(j);
  }

  // Marginal of feature j under the mixture: sum_r pi_r theta_j^(r).
  std::vector<double> FeatureMarginal(std::size_t j) const;

  nlohmann::json ToJson() const;
  static GenerativeParams FromJson(const nlohmann::json& j);

 private:
  void Validate() const;

  tabular::SchemaPtr schema_;
  std::vector<double> mixture_;
  std::vector<double> tables_;
  Eigen::VectorXd weights_;
};

// Coordinates of the unconstrained parameterization, in this order:
//   mixture logits        R - 1
//   table logits          R * sum_j (c_j - 1), components major
//   regression weights    p
// Every simplex is a softmax over its free logits with a pinned trailing 0.
class ParamLayout {
 public:
  ParamLayout(tabular::SchemaPtr schema, int components);

  const tabular::Schema& schema() const { return *schema_; }
  const tabular::SchemaPtr& schema_ptr() const { return schema_; }
  int components() const { return components_; }

  Eigen::Index size() const { return size_; }
  Eigen::Index MixtureOffset() const { return 0; }
  Eigen::Index TableLogitOffset(int r, std::size_t j) const {
    return table_base_ + r * free_per_component_ +
           static_cast<Eigen::Index>(free_offsets_[j]);
  }
  Eigen::Index WeightsOffset() const { return weights_base_; }
  Eigen::Index FreePerComponent() const { return free_per_component_; }

 private:
  tabular::SchemaPtr schema_;
  int components_;
  std::vector<std::size_t> free_offsets_;
  Eigen::Index free_per_component_ = 0;
  Eigen::Index table_base_ = 0;
  Eigen::Index weights_base_ = 0;
  Eigen::Index size_ = 0;
};

struct UnconstrainedParams {
  ParamLayout layout;
  Eigen::VectorXd values;
};

// Softmax with pinned last logit.
GenerativeParams Constrain(const ParamLayout& layout,
                           const Eigen::Ref<const Eigen::VectorXd>& values);
inline GenerativeParams Constrain(const UnconstrainedParams& u) {
  return Constrain(u.layout, u.values);
}
// Requires strictly positive simplex entries.
UnconstrainedParams Unconstrain(const GenerativeParams& params);

}  // namespace synthtwin::genmodel

#endif  // SYNTHTWIN_GENMODEL_PARAMS_H_
