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

#include "synthtwin/tabular/ops.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "synthtwin/common/random.h"

namespace synthtwin::tabular {
namespace {

// Uniformly chosen m-subset of [0, n), returned sorted.
std::vector<std::size_t> ChooseSorted(std::size_t n, std::size_t m,
                                      std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Engine rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(m);
  std::sort(idx.begin(), idx.end());
  return idx;
}

int RequireFeature(const Schema& schema, std::string_view name) {
  int j = schema.FeatureIndex(name);
  if (j < 0) {
    throw std::invalid_argument("unknown feature '" + std::string(name) + "'");
  }
  return j;
}

int RequireCategory(const Schema& schema, int j, std::string_view label) {
  int c = schema.CategoryIndex(j, label);
  if (c < 0) {
    throw std::invalid_argument("feature '" + schema.feature(j).name +
                                "' has no category '" + std::string(label) +
                                "'");
  }
  return c;
}

}  // namespace

std::size_t FloorCount(double fraction, std::size_t n) {
  return static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(n) + 1e-9));
}

std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& ds,
                                           double train_fraction,
                                           std::uint64_t seed) {
  if (ds.empty()) throw std::invalid_argument("train_test_split: empty dataset");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_test_split: fraction must be in (0, 1)");
  }
  const std::size_t n = ds.rows();
  std::vector<std::size_t> train = ChooseSorted(n, FloorCount(train_fraction, n), seed);
  std::vector<std::size_t> test;
  test.reserve(n - train.size());
  std::size_t t = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (t < train.size() && train[t] == i) {
      ++t;
    } else {
      test.push_back(i);
    }
  }
  return {ds.Select(train), ds.Select(test)};
}

Dataset Subsample(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("subsample: fraction must be in (0, 1]");
  }
  if (fraction == 1.0) return ds;
  return ds.Select(ChooseSorted(ds.rows(), FloorCount(fraction, ds.rows()), seed));
}

Dataset InjectMarginalSkew(const Dataset& ds, std::string_view feature,
                           std::string_view category, int target_value,
                           double keep_prob, std::uint64_t seed) {
  if (!(keep_prob >= 0.0 && keep_prob <= 1.0)) {
    throw std::invalid_argument("inject_marginal_skew: keep_prob must be in [0, 1]");
  }
  if (target_value != 0 && target_value != 1) {
    throw std::invalid_argument("inject_marginal_skew: target must be 0 or 1");
  }
  const int j = RequireFeature(ds.schema(), feature);
  const int c = RequireCategory(ds.schema(), j, category);

  std::vector<std::size_t> matching;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.row(i)[j] == c && ds.target(i) == target_value) matching.push_back(i);
  }
  const auto keep = static_cast<std::size_t>(
      std::floor(keep_prob * static_cast<double>(matching.size()) + 0.5));
  std::vector<std::size_t> kept_positions = ChooseSorted(matching.size(), keep, seed);

  std::vector<bool> drop(ds.rows(), false);
  for (std::size_t i : matching) drop[i] = true;
  for (std::size_t k : kept_positions) drop[matching[k]] = false;

  std::vector<std::size_t> rows;
  rows.reserve(ds.rows());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (!drop[i]) rows.push_back(i);
  }
  return ds.Select(rows);
}

Dataset DropFeature(const Dataset& ds, std::string_view feature) {
  const Schema& schema = ds.schema();
  const int drop = RequireFeature(schema, feature);
  if (schema.num_features() < 2) {
    throw std::invalid_argument("drop_feature: cannot drop the only feature");
  }
  std::vector<Feature> kept;
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    if (static_cast<int>(j) != drop) kept.push_back(schema.feature(j));
  }
  SchemaPtr reduced = Schema::Create(std::move(kept), schema.target_name());

  std::vector<Code> codes;
  codes.reserve(ds.rows() * reduced->num_features());
  std::vector<std::uint8_t> targets(ds.targets().begin(), ds.targets().end());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (static_cast<int>(j) != drop) codes.push_back(r[j]);
    }
  }
  return Dataset(std::move(reduced), std::move(codes), std::move(targets),
                 ds.party_label());
}

Dataset FilterCategory(const Dataset& ds, std::string_view feature,
                       std::string_view category) {
  const int j = RequireFeature(ds.schema(), feature);
  const int c = RequireCategory(ds.schema(), j, category);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.row(i)[j] == c) rows.push_back(i);
  }
  return ds.Select(rows);
}

double MarginalTable::Cell(std::string_view a, std::string_view b) const {
  auto ia = std::find(labels_a.begin(), labels_a.end(), a);
  auto ib = std::find(labels_b.begin(), labels_b.end(), b);
  if (ia == labels_a.end() || ib == labels_b.end()) {
    throw std::invalid_argument("marginal table: unknown cell");
  }
  return proportions(ia - labels_a.begin(), ib - labels_b.begin());
}

MarginalTable TwoWayMarginal(const Dataset& ds, std::string_view feat_a,
                             std::string_view feat_b) {
  if (ds.empty()) throw std::invalid_argument("two_way_marginal: empty dataset");
  const Schema& schema = ds.schema();
  const int a = RequireFeature(schema, feat_a);
  const bool b_is_target = feat_b == schema.target_name();
  const int b = b_is_target ? -1 : RequireFeature(schema, feat_b);

  MarginalTable table;
  table.feature_a = std::string(feat_a);
  table.feature_b = std::string(feat_b);
  table.labels_a = schema.feature(a).categories;
  table.labels_b = b_is_target ? std::vector<std::string>{"0", "1"}
                               : schema.feature(b).categories;
  Eigen::MatrixXd counts =
      Eigen::MatrixXd::Zero(table.labels_a.size(), table.labels_b.size());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    const int kb = b_is_target ? ds.target(i) : ds.row(i)[b];
    counts(ds.row(i)[a], kb) += 1.0;
  }
  table.proportions = counts / static_cast<double>(ds.rows());
  return table;
}

std::vector<double> OneWayMarginal(const Dataset& ds, std::size_t j) {
  if (ds.empty()) throw std::invalid_argument("one_way_marginal: empty dataset");
  std::vector<double> p(ds.schema().cardinality(j), 0.0);
  for (std::size_t i = 0; i < ds.rows(); ++i) p[ds.row(i)[j]] += 1.0;
  for (double& v : p) v /= static_cast<double>(ds.rows());
  return p;
}

Design OneHotEncode(const Dataset& ds) {
  const Schema& schema = ds.schema();
  const auto n = static_cast<Eigen::Index>(ds.rows());
  Design design{Eigen::MatrixXd::Zero(n, schema.EncodedWidth()),
                Eigen::VectorXd(n)};
  for (Eigen::Index i = 0; i < n; ++i) {
    design.x(i, 0) = 1.0;
    auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      if (r[j] > 0) design.x(i, schema.EncodedOffset(j) + r[j] - 1) = 1.0;
    }
    design.y(i) = ds.target(i);
  }
  return design;
}

std::vector<Code> DecodeRow(const Schema& schema,
                            const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  std::vector<Code> x(schema.num_features(), 0);
  for (std::size_t j = 0; j < schema.num_features(); ++j) {
    for (int c = 1; c < schema.cardinality(j); ++c) {
      if (row(schema.EncodedOffset(j) + c - 1) != 0.0) x[j] = c;
    }
  }
  return x;
}

}  // namespace synthtwin::tabular
