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

#ifndef SYNTHTWIN_TABULAR_DATASET_H_
#define SYNTHTWIN_TABULAR_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthtwin/tabular/schema.h"

namespace synthtwin::tabular {

using Code = std::int32_t;

// Row-major table of category codes plus a binary target column. Values are
// validated on construction and never change afterwards.
class Dataset {
 public:
  // `codes` holds rows() * schema->num_features() entries.
  Dataset(SchemaPtr schema, std::vector<Code> codes,
          std::vector<std::uint8_t> targets,
          std::optional<std::string> party_label = std::nullopt);

  // Empty dataset over `schema`.
  explicit Dataset(SchemaPtr schema);

  const Schema& schema() const { return *schema_; }
  const SchemaPtr& schema_ptr() const { return schema_; }
  std::size_t rows() const { return targets_.size(); }
  std::size_t num_features() const { return schema_->num_features(); }
  bool empty() const { return targets_.empty(); }

  std::span<const Code> row(std::size_t i) const {
    return {codes_.data() + i * num_features(), num_features()};
  }
  int target(std::size_t i) const { return targets_[i]; }

  std::span<const Code> codes() const { return codes_; }
  std::span<const std::uint8_t> targets() const { return targets_; }

  const std::optional<std::string>& party_label() const {
    return party_label_;
  }
  Dataset WithPartyLabel(std::optional<std::string> label) const;

  // Rows at `indices`, in the given order.
  Dataset Select(std::span<const std::size_t> indices) const;

  // Concatenation; schemas must be equal. Keeps this dataset's label.
  Dataset Concat(const Dataset& other) const;

  // Equal schema, codes and targets (party label ignored).
  bool SameRows(const Dataset& other) const;

 private:
  SchemaPtr schema_;
  std::vector<Code> codes_;
  std::vector<std::uint8_t> targets_;
  std::optional<std::string> party_label_;
};

// Incremental construction with per-row validation.
class DatasetBuilder {
 public:
  explicit DatasetBuilder(SchemaPtr schema) : schema_(std::move(schema)) {}

  void Reserve(std::size_t rows);
  // Throws std::invalid_argument when a code is out of range or y not in
  // {0, 1}.
  void AddRow(std::span<const Code> x, int y);
  std::size_t rows() const { return targets_.size(); }
  Dataset Build(std::optional<std::string> party_label = std::nullopt) &&;

 private:
  SchemaPtr schema_;
  std::vector<Code> codes_;
  std::vector<std::uint8_t> targets_;
};

}  // namespace synthtwin::tabular

#endif  // SYNTHTWIN_TABULAR_DATASET_H_
