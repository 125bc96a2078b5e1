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

#include "synthtwin/genmodel/params.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace synthtwin::genmodel {
namespace {

constexpr double kSimplexTolerance = 1e-9;

void CheckSimplex(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument(what + ": negative or non-finite entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument(what + ": entries sum to " + std::to_string(sum));
  }
}

// Writes softmax([logits, 0]) to out (size logits.size() + 1).
void PinnedSoftmax(const double* logits, std::size_t free, double* out) {
  double m = 0.0;
  for (std::size_t k = 0; k < free; ++k) m = std::max(m, logits[k]);
  double sum = std::exp(-m);
  for (std::size_t k = 0; k < free; ++k) {
    out[k] = std::exp(logits[k] - m);
    sum += out[k];
  }
  out[free] = std::exp(-m);
  for (std::size_t k = 0; k <= free; ++k) out[k] /= sum;
}

void PinnedLogits(std::span<const double> p, double* out) {
  const double last = std::log(p.back());
  for (std::size_t k = 0; k + 1 < p.size(); ++k) out[k] = std::log(p[k]) - last;
}

}  // namespace

GenerativeParams::GenerativeParams(tabular::SchemaPtr schema, int components)
    : schema_(std::move(schema)) {
  if (components < 1) throw std::invalid_argument("generative params: R must be >= 1");
  mixture_.assign(components, 1.0 / components);
  tables_.resize(static_cast<std::size_t>(components) * schema_->TotalCategories());
  for (int r = 0; r < components; ++r) {
    for (std::size_t j = 0; j < schema_->num_features(); ++j) {
      const int c = schema_->cardinality(j);
      std::fill_n(tables_.begin() + TableOffset(r, j), c, 1.0 / c);
    }
  }
  weights_ = Eigen::VectorXd::Zero(schema_->EncodedWidth());
}

GenerativeParams::GenerativeParams(tabular::SchemaPtr schema,
                                   std::vector<double> mixture_weights,
                                   std::vector<double> tables,
                                   Eigen::VectorXd weights)
    : schema_(std::move(schema)),
      mixture_(std::move(mixture_weights)),
      tables_(std::move(tables)),
      weights_(std::move(weights)) {
  Validate();
}

void GenerativeParams::Validate() const {
  if (mixture_.empty()) throw std::invalid_argument("generative params: R must be >= 1");
  CheckSimplex(mixture_, "mixture weights");
  if (tables_.size() != mixture_.size() * schema_->TotalCategories()) {
    throw std::invalid_argument("generative params: table size mismatch");
  }
  for (int r = 0; r < components(); ++r) {
    for (std::size_t j = 0; j < schema_->num_features(); ++j) {
      CheckSimplex(table(r, j), "component " + std::to_string(r) + " feature '" +
                                    schema_->feature(j).name + "'");
    }
  }
  if (weights_.size() != static_cast<Eigen::Index>(schema_->EncodedWidth())) {
    throw std::invalid_argument("generative params: regression weight length mismatch");
  }
  if (!weights_.allFinite()) {
    throw std::invalid_argument("generative params: non-finite regression weight");
  }
}

std::vector<double> GenerativeParams::FeatureMarginal(std::size_t j) const {
  std::vector<double> m(schema_->cardinality(j), 0.0);
  for (int r = 0; r < components(); ++r) {
    auto t = table(r, j);
    for (std::size_t c = 0; c < t.size(); ++c) m[c] += mixture_[r] * t[c];
  }
  return m;
}

nlohmann::json GenerativeParams::ToJson() const {
  nlohmann::json comps = nlohmann::json::array();
  for (int r = 0; r < components(); ++r) {
    nlohmann::json tabs = nlohmann::json::object();
    for (std::size_t j = 0; j < schema_->num_features(); ++j) {
      auto t = table(r, j);
      tabs[schema_->feature(j).name] = std::vector<double>(t.begin(), t.end());
    }
    comps.push_back(tabs);
  }
  return {{"schema", schema_->ToJson()},
          {"mixture_weights", mixture_},
          {"component_tables", comps},
          {"regression_weights",
           std::vector<double>(weights_.data(), weights_.data() + weights_.size())}};
}

GenerativeParams GenerativeParams::FromJson(const nlohmann::json& j) {
  tabular::SchemaPtr schema = tabular::Schema::FromJson(j.at("schema"));
  auto mixture = j.at("mixture_weights").get<std::vector<double>>();
  const auto& comps = j.at("component_tables");
  if (comps.size() != mixture.size()) {
    throw std::invalid_argument("generative params: component count mismatch");
  }
  std::vector<double> tables;
  for (const auto& comp : comps) {
    for (const auto& f : schema->features()) {
      auto t = comp.at(f.name).get<std::vector<double>>();
      if (t.size() != f.categories.size()) {
        throw std::invalid_argument("generative params: table for '" + f.name +
                                    "' has wrong length");
      }
      tables.insert(tables.end(), t.begin(), t.end());
    }
  }
  auto w = j.at("regression_weights").get<std::vector<double>>();
  return GenerativeParams(schema, std::move(mixture), std::move(tables),
                          Eigen::Map<Eigen::VectorXd>(w.data(), w.size()));
}

ParamLayout::ParamLayout(tabular::SchemaPtr schema, int components)
    : schema_(std::move(schema)), components_(components) {
  if (components < 1) throw std::invalid_argument("param layout: R must be >= 1");
  std::size_t acc = 0;
  for (std::size_t j = 0; j < schema_->num_features(); ++j) {
    free_offsets_.push_back(acc);
    acc += schema_->cardinality(j) - 1;
  }
  free_per_component_ = static_cast<Eigen::Index>(acc);
  table_base_ = components - 1;
  weights_base_ = table_base_ + components * free_per_component_;
  size_ = weights_base_ + static_cast<Eigen::Index>(schema_->EncodedWidth());
}

GenerativeParams Constrain(const ParamLayout& layout,
                           const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() != layout.size()) {
    throw std::invalid_argument("constrain: vector length does not match layout");
  }
  const tabular::Schema& schema = layout.schema();
  const int R = layout.components();
  std::vector<double> mixture(R);
  PinnedSoftmax(values.data() + layout.MixtureOffset(), R - 1, mixture.data());
  std::vector<double> tables(static_cast<std::size_t>(R) * schema.TotalCategories());
  for (int r = 0; r < R; ++r) {
    for (std::size_t j = 0; j < schema.num_features(); ++j) {
      PinnedSoftmax(values.data() + layout.TableLogitOffset(r, j),
                    schema.cardinality(j) - 1,
                    tables.data() + r * schema.TotalCategories() +
                        schema.CategoryOffset(j));
    }
  }
  return GenerativeParams(layout.schema_ptr(), std::move(mixture),
                          std::move(tables),
                          values.segment(layout.WeightsOffset(),
                                         schema.EncodedWidth()));
}

UnconstrainedParams Unconstrain(const GenerativeParams& params) {
  ParamLayout layout(params.schema_ptr(), params.components());
  Eigen::VectorXd values(layout.size());
  auto require_positive = [](std::span<const double> p) {
    for (double v : p) {
      if (!(v > 0.0)) {
        throw std::invalid_argument("unconstrain: simplex entries must be > 0");
      }
    }
  };
  require_positive(params.mixture_weights());
  PinnedLogits(params.mixture_weights(), values.data() + layout.MixtureOffset());
  for (int r = 0; r < params.components(); ++r) {
    for (std::size_t j = 0; j < params.schema().num_features(); ++j) {
      require_positive(params.table(r, j));
      PinnedLogits(params.table(r, j), values.data() + layout.TableLogitOffset(r, j));
    }
  }
  values.segment(layout.WeightsOffset(), params.schema().EncodedWidth()) =
      params.regression_weights();
  return {std::move(layout), std::move(values)};
}

}  // namespace synthtwin::genmodel
