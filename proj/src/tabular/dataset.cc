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

#include "synthtwin/tabular/dataset.h"

#include <stdexcept>
#include <string>

namespace synthtwin::tabular {
namespace {

void CheckRow(const Schema& schema, std::span<const Code> x, int y,
              std::size_t row) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < 0 || x[j] >= schema.cardinality(j)) {
      throw std::invalid_argument(
          "dataset: row " + std::to_string(row) + ", feature '" +
          schema.feature(j).name + "': category index " +
          std::to_string(x[j]) + " out of range");
    }
  }
  if (y != 0 && y != 1) {
    throw std::invalid_argument("dataset: row " + std::to_string(row) +
                                ": target must be 0 or 1");
  }
}

}  // namespace

Dataset::Dataset(SchemaPtr schema, std::vector<Code> codes,
                 std::vector<std::uint8_t> targets,
                 std::optional<std::string> party_label)
    : schema_(std::move(schema)),
      codes_(std::move(codes)),
      targets_(std::move(targets)),
      party_label_(std::move(party_label)) {
  if (!schema_) throw std::invalid_argument("dataset: null schema");
  if (codes_.size() != targets_.size() * schema_->num_features()) {
    throw std::invalid_argument("dataset: code count does not match rows");
  }
  for (std::size_t i = 0; i < targets_.size(); ++i) {
    CheckRow(*schema_, row(i), targets_[i], i);
  }
}

Dataset::Dataset(SchemaPtr schema) : schema_(std::move(schema)) {
  if (!schema_) throw std::invalid_argument("dataset: null schema");
}

Dataset Dataset::WithPartyLabel(std::optional<std::string> label) const {
  Dataset copy = *this;
  copy.party_label_ = std::move(label);
  return copy;
}

Dataset Dataset::Select(std::span<const std::size_t> indices) const {
  const std::size_t d = num_features();
  std::vector<Code> codes;
  std::vector<std::uint8_t> targets;
  codes.reserve(indices.size() * d);
  targets.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= rows()) throw std::out_of_range("dataset: row index out of range");
    auto r = row(i);
    codes.insert(codes.end(), r.begin(), r.end());
    targets.push_back(targets_[i]);
  }
  Dataset out(schema_);
  out.codes_ = std::move(codes);
  out.targets_ = std::move(targets);
  out.party_label_ = party_label_;
  return out;
}

Dataset Dataset::Concat(const Dataset& other) const {
  if (!(*schema_ == other.schema())) {
    throw std::invalid_argument("dataset: cannot concatenate, schemas differ");
  }
  Dataset out = *this;
  out.codes_.insert(out.codes_.end(), other.codes_.begin(), other.codes_.end());
  out.targets_.insert(out.targets_.end(), other.targets_.begin(),
                      other.targets_.end());
  return out;
}

bool Dataset::SameRows(const Dataset& other) const {
  return *schema_ == other.schema() && codes_ == other.codes_ &&
         targets_ == other.targets_;
}

void DatasetBuilder::Reserve(std::size_t rows) {
  codes_.reserve(rows * schema_->num_features());
  targets_.reserve(rows);
}

void DatasetBuilder::AddRow(std::span<const Code> x, int y) {
  if (x.size() != schema_->num_features()) {
    throw std::invalid_argument("dataset: row has wrong number of features");
  }
  CheckRow(*schema_, x, y, targets_.size());
  codes_.insert(codes_.end(), x.begin(), x.end());
  targets_.push_back(static_cast<std::uint8_t>(y));
}

Dataset DatasetBuilder::Build(std::optional<std::string> party_label) && {
  return Dataset(std::move(schema_), std::move(codes_), std::move(targets_),
                 std::move(party_label));
}

}  // namespace synthtwin::tabular
