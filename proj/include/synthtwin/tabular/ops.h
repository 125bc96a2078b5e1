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

#ifndef SYNTHTWIN_TABULAR_OPS_H_
#define SYNTHTWIN_TABULAR_OPS_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synthtwin/tabular/dataset.h"

namespace synthtwin::tabular {

// floor(fraction * n), tolerant of representation error in `fraction`
// (0.29 * 100 is 28.999999999999996 in binary).
std::size_t FloorCount(double fraction, std::size_t n);

// Random disjoint split; the first part has FloorCount(train_fraction, n)
// rows. Both parts keep the input row order.
std::pair<Dataset, Dataset> TrainTestSplit(const Dataset& ds,
                                           double train_fraction,
                                           std::uint64_t seed);

// Uniform subsample without replacement of FloorCount(fraction, n) rows.
// fraction == 1 returns the input unchanged.
Dataset Subsample(const Dataset& ds, double fraction, std::uint64_t seed);

// Keeps exactly round-half-up(keep_prob * m) of the m rows with
// (feature == category, target == target_value), chosen uniformly; every
// other row is retained in order.
Dataset InjectMarginalSkew(const Dataset& ds, std::string_view feature,
                           std::string_view category, int target_value,
                           double keep_prob, std::uint64_t seed);

// Projects out one feature. The result carries a reduced schema.
Dataset DropFeature(const Dataset& ds, std::string_view feature);

// Rows whose `feature` equals `category`.
Dataset FilterCategory(const Dataset& ds, std::string_view feature,
                       std::string_view category);

struct MarginalTable {
  std::string feature_a;
  std::string feature_b;
  std::vector<std::string> labels_a;
  std::vector<std::string> labels_b;
  // proportions(i, k) = fraction of rows with a == labels_a[i] and
  // b == labels_b[k].
  Eigen::MatrixXd proportions;

  double Cell(std::string_view a, std::string_view b) const;
};

// `feat_b` may name the target, in which case the labels are "0" and "1".
MarginalTable TwoWayMarginal(const Dataset& ds, std::string_view feat_a,
                             std::string_view feat_b);

// One-way category proportions of feature j.
std::vector<double> OneWayMarginal(const Dataset& ds, std::size_t j);

struct Design {
  Eigen::MatrixXd x;  // n x p, intercept first, reference coding
  Eigen::VectorXd y;
};

Design OneHotEncode(const Dataset& ds);

// Inverse of the reference coding for a single design row.
std::vector<Code> DecodeRow(const Schema& schema,
                            const Eigen::Ref<const Eigen::RowVectorXd>& row);

// w^T x~ without materializing the design row.
inline double LinearPredictor(const Schema& schema, const double* w,
                              std::span<const Code> x) {
  double eta = w[0];
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] > 0) eta += w[schema.EncodedOffset(j) + x[j] - 1];
  }
  return eta;
}

}  // namespace synthtwin::tabular

#endif  // SYNTHTWIN_TABULAR_OPS_H_
