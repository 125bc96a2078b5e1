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

// Combining a party's own data with other parties' synthetic releases, and
// Rubin's rules over the per-set fits.

#ifndef SYNTHTWIN_POOLING_POOLING_H_
#define SYNTHTWIN_POOLING_POOLING_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "synthtwin/glm/poisson.h"
#include "synthtwin/privacy/accountant.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::pooling {

// The only form in which one party's data reaches another: K synthetic sets
// of the releasing party's size plus the privacy cost of producing them.
class SyntheticRelease {
 public:
  // Throws std::invalid_argument if `sets` is empty or the sets disagree in
  // schema or size.
  SyntheticRelease(std::string party, std::vector<tabular::Dataset> sets,
                   privacy::AccountantSummary accountant,
                   nlohmann::json metadata = nlohmann::json::object());

  const std::string& party() const { return party_; }
  std::size_t K() const { return sets_.size(); }
  std::size_t set_size() const { return sets_.front().rows(); }
  const tabular::Schema& schema() const { return sets_.front().schema(); }
  const tabular::Dataset& set(std::size_t k) const { return sets_.at(k); }
  const privacy::AccountantSummary& accountant() const { return accountant_; }
  const nlohmann::json& metadata() const { return metadata_; }

  // Directory with set_000.csv, set_001.csv, ... and metadata.json.
  void Save(const std::filesystem::path& dir) const;
  static SyntheticRelease Load(const std::filesystem::path& dir);

 private:
  std::string party_;
  std::vector<tabular::Dataset> sets_;
  privacy::AccountantSummary accountant_;
  nlohmann::json metadata_;
};

// Combined set k = local rows followed by release.set(k) of every release
// (synthetic-only when include_local is false). Releases from the local
// party itself are rejected.
std::vector<tabular::Dataset> AssembleCombinedSets(
    const tabular::Dataset& local, std::span<const SyntheticRelease* const> releases,
    std::size_t K, bool include_local = true);
std::vector<tabular::Dataset> AssembleCombinedSets(
    const tabular::Dataset& local, std::span<const SyntheticRelease> releases,
    std::size_t K, bool include_local = true);

struct PooledFit {
  Eigen::VectorXd point;           // mean of the coefficients
  Eigen::VectorXd within;          // mean squared standard error
  Eigen::VectorXd between;         // unbiased variance of the coefficients
  Eigen::VectorXd total_variance;  // within + (1 + 1/K) between
  std::size_t K = 0;
  std::size_t dropped = 0;  // non-converged fits left out

  nlohmann::json ToJson() const;
};

// Throws std::invalid_argument for fewer than two fits, non-converged fits or
// differing dimensions.
PooledFit RubinCombine(std::span<const glm::RegressionFit> fits);

// Drops non-converged fits and combines the rest. Throws std::runtime_error
// when fewer than two remain.
PooledFit CombineConverged(std::span<const glm::RegressionFit> fits);

}  // namespace synthtwin::pooling

#endif  // SYNTHTWIN_POOLING_POOLING_H_
