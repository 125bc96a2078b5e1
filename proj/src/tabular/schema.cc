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

#include "synthtwin/tabular/schema.h"

#include <set>
#include <stdexcept>

namespace synthtwin::tabular {

std::shared_ptr<const Schema> Schema::Create(std::vector<Feature> features,
                                             std::string target_name) {
  if (target_name.empty()) {
    throw std::invalid_argument("schema: empty target name");
  }
  std::set<std::string> names{target_name};
  for (const Feature& f : features) {
    if (f.name.empty()) throw std::invalid_argument("schema: empty feature name");
    if (!names.insert(f.name).second) {
      throw std::invalid_argument("schema: duplicate name '" + f.name + "'");
    }
    if (f.categories.size() < 2) {
      throw std::invalid_argument("schema: feature '" + f.name +
                                  "' needs at least two categories");
    }
    std::set<std::string> labels(f.categories.begin(), f.categories.end());
    if (labels.size() != f.categories.size()) {
      throw std::invalid_argument("schema: feature '" + f.name +
                                  "' has duplicate categories");
    }
  }
  return std::shared_ptr<const Schema>(
      new Schema(std::move(features), std::move(target_name)));
}

Schema::Schema(std::vector<Feature> features, std::string target_name)
    : features_(std::move(features)), target_name_(std::move(target_name)) {
  for (const Feature& f : features_) {
    offsets_.push_back(encoded_width_);
    encoded_width_ += f.categories.size() - 1;
    category_offsets_.push_back(total_categories_);
    total_categories_ += f.categories.size();
  }
}

int Schema::FeatureIndex(std::string_view name) const {
  for (std::size_t j = 0; j < features_.size(); ++j) {
    if (features_[j].name == name) return static_cast<int>(j);
  }
  return -1;
}

int Schema::CategoryIndex(std::size_t j, std::string_view label) const {
  const auto& cats = features_.at(j).categories;
  for (std::size_t c = 0; c < cats.size(); ++c) {
    if (cats[c] == label) return static_cast<int>(c);
  }
  return -1;
}

std::vector<std::string> Schema::EncodedColumnNames() const {
  std::vector<std::string> names{"(intercept)"};
  for (const Feature& f : features_) {
    for (std::size_t c = 1; c < f.categories.size(); ++c) {
      names.push_back(f.name + "=" + f.categories[c]);
    }
  }
  return names;
}

nlohmann::json Schema::ToJson() const {
  nlohmann::json feats = nlohmann::json::array();
  for (const Feature& f : features_) {
    feats.push_back({{"name", f.name}, {"categories", f.categories}});
  }
  return {{"features", feats}, {"target", target_name_}};
}

std::shared_ptr<const Schema> Schema::FromJson(const nlohmann::json& j) {
  std::vector<Feature> features;
  for (const auto& f : j.at("features")) {
    features.push_back({f.at("name").get<std::string>(),
                        f.at("categories").get<std::vector<std::string>>()});
  }
  return Create(std::move(features), j.at("target").get<std::string>());
}

}  // namespace synthtwin::tabular
