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

#ifndef SYNTHTWIN_TABULAR_SCHEMA_H_
#define SYNTHTWIN_TABULAR_SCHEMA_H_

#include <cstddef>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace synthtwin::tabular {

struct Feature {
  std::string name;
  std::vector<std::string> categories;

  bool operator==(const Feature&) const = default;
};

// Ordered categorical features plus a binary target. Immutable once built;
// datasets share it through a shared_ptr.
class Schema {
 public:
  // Throws std::invalid_argument on duplicate names, features with fewer than
  // two categories, duplicate category labels or an empty target name.
  static std::shared_ptr<const Schema> Create(std::vector<Feature> features,
                                              std::string target_name);

  const std::vector<Feature>& features() const { return features_; }
  const Feature& feature(std::size_t j) const { return features_.at(j); }
  std::size_t num_features() const { return features_.size(); }
  const std::string& target_name() const { return target_name_; }
  int cardinality(std::size_t j) const {
    return static_cast<int>(features_[j].categories.size());
  }

  // Index of a feature by name, or -1.
  int FeatureIndex(std::string_view name) const;
  // Index of a category label within feature j, or -1.
  int CategoryIndex(std::size_t j, std::string_view label) const;

  // Width of the reference-coded design matrix: 1 + sum_j (c_j - 1).
  std::size_t EncodedWidth() const { return encoded_width_; }
  // Column of the first non-reference indicator of feature j.
  std::size_t EncodedOffset(std::size_t j) const { return offsets_[j]; }
  // Sum of cardinalities.
  std::size_t TotalCategories() const { return total_categories_; }
  // Offset of feature j inside a flat array of all categories.
  std::size_t CategoryOffset(std::size_t j) const {
    return category_offsets_[j];
  }

  // Names of the design-matrix columns, e.g. "ethnicity=South Asian".
  std::vector<std::string> EncodedColumnNames() const;

  bool operator==(const Schema& other) const {
    return features_ == other.features_ && target_name_ == other.target_name_;
  }

  nlohmann::json ToJson() const;
  static std::shared_ptr<const Schema> FromJson(const nlohmann::json& j);

 private:
  Schema(std::vector<Feature> features, std::string target_name);

  std::vector<Feature> features_;
  std::string target_name_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> category_offsets_;
  std::size_t encoded_width_ = 1;
  std::size_t total_categories_ = 0;
};

using SchemaPtr = std::shared_ptr<const Schema>;

}  // namespace synthtwin::tabular

#endif  // SYNTHTWIN_TABULAR_SCHEMA_H_
