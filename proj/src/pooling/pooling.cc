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

#include "synthtwin/pooling/pooling.h"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "synthtwin/tabular/csv.h"

namespace synthtwin::pooling {
namespace {

std::string SetFileName(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "set_%03zu.csv", k);
  return buf;
}

}  // namespace

SyntheticRelease::SyntheticRelease(std::string party,
                                   std::vector<tabular::Dataset> sets,
                                   privacy::AccountantSummary accountant,
                                   nlohmann::json metadata)
    : party_(std::move(party)),
      sets_(std::move(sets)),
      accountant_(accountant),
      metadata_(std::move(metadata)) {
  if (sets_.empty()) throw std::invalid_argument("release: K must be >= 1");
  for (const auto& s : sets_) {
    if (!(s.schema() == sets_.front().schema())) {
      throw std::invalid_argument("release: synthetic sets disagree in schema");
    }
    if (s.rows() != sets_.front().rows()) {
      throw std::invalid_argument("release: synthetic sets disagree in size");
    }
  }
}

void SyntheticRelease::Save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (std::size_t k = 0; k < sets_.size(); ++k) {
    tabular::WriteCsv(dir / SetFileName(k), sets_[k]);
  }
  nlohmann::json meta = metadata_;
  meta["party"] = party_;
  meta["size"] = set_size();
  meta["K"] = K();
  meta["epsilon"] = accountant_.ToJson()["epsilon"];
  meta["delta"] = accountant_.delta;
  meta["accountant"] = accountant_.ToJson();
  meta["schema"] = schema().ToJson();
  std::ofstream out(dir / "metadata.json");
  if (!out) throw std::runtime_error("release: cannot write " + (dir / "metadata.json").string());
  out << meta.dump(2) << "\n";
}

SyntheticRelease SyntheticRelease::Load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "metadata.json");
  if (!in) throw std::runtime_error("release: missing " + (dir / "metadata.json").string());
  const nlohmann::json meta = nlohmann::json::parse(in);
  auto schema = tabular::Schema::FromJson(meta.at("schema"));
  const std::string party = meta.at("party").get<std::string>();
  const std::size_t K = meta.at("K").get<std::size_t>();
  std::vector<tabular::Dataset> sets;
  sets.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    sets.push_back(tabular::LoadCsv(dir / SetFileName(k), schema, party));
  }
  nlohmann::json extra = meta;
  for (const char* key : {"party", "size", "K", "epsilon", "delta", "accountant", "schema"}) {
    extra.erase(key);
  }
  return SyntheticRelease(party, std::move(sets),
                          privacy::AccountantSummary::FromJson(meta.at("accountant")),
                          std::move(extra));
}

std::vector<tabular::Dataset> AssembleCombinedSets(
    const tabular::Dataset& local, std::span<const SyntheticRelease* const> releases,
    std::size_t K, bool include_local) {
  if (K < 1) throw std::invalid_argument("assemble: K must be >= 1");
  std::size_t synthetic_rows = 0;
  for (const SyntheticRelease* r : releases) {
    if (!(r->schema() == local.schema())) {
      throw std::invalid_argument("assemble: release of '" + r->party() +
                                  "' has a different schema");
    }
    if (r->K() < K) {
      throw std::invalid_argument("assemble: release of '" + r->party() +
                                  "' has fewer than K sets");
    }
    if (local.party_label() && *local.party_label() == r->party()) {
      throw std::invalid_argument("assemble: a party cannot pool its own release");
    }
    synthetic_rows += r->set_size();
  }
  const std::size_t d = local.num_features();
  std::vector<tabular::Dataset> out;
  out.reserve(K);
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<tabular::Code> codes;
    std::vector<std::uint8_t> targets;
    const std::size_t rows = (include_local ? local.rows() : 0) + synthetic_rows;
    codes.reserve(rows * d);
    targets.reserve(rows);
    auto append = [&](const tabular::Dataset& ds) {
      codes.insert(codes.end(), ds.codes().begin(), ds.codes().end());
      targets.insert(targets.end(), ds.targets().begin(), ds.targets().end());
    };
    if (include_local) append(local);
    for (const SyntheticRelease* r : releases) append(r->set(k));
    out.emplace_back(local.schema_ptr(), std::move(codes), std::move(targets),
                     local.party_label());
  }
  return out;
}

std::vector<tabular::Dataset> AssembleCombinedSets(
    const tabular::Dataset& local, std::span<const SyntheticRelease> releases,
    std::size_t K, bool include_local) {
  std::vector<const SyntheticRelease*> ptrs;
  for (const auto& r : releases) ptrs.push_back(&r);
  return AssembleCombinedSets(local, std::span<const SyntheticRelease* const>(ptrs), K,
                              include_local);
}

nlohmann::json PooledFit::ToJson() const {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return {{"point", vec(point)},     {"within", vec(within)},
          {"between", vec(between)}, {"total_variance", vec(total_variance)},
          {"K", K},                  {"dropped", dropped}};
}

PooledFit RubinCombine(std::span<const glm::RegressionFit> fits) {
  if (fits.size() < 2) throw std::invalid_argument("rubin_combine: need K >= 2 fits");
  const Eigen::Index p = fits.front().coefficients.size();
  for (const auto& f : fits) {
    if (f.coefficients.size() != p || f.std_errors.size() != p) {
      throw std::invalid_argument("rubin_combine: fits differ in dimension");
    }
    if (!f.converged) throw std::invalid_argument("rubin_combine: non-converged fit");
  }
  const double K = static_cast<double>(fits.size());
  PooledFit out;
  out.K = fits.size();
  out.point = Eigen::VectorXd::Zero(p);
  out.within = Eigen::VectorXd::Zero(p);
  for (const auto& f : fits) {
    out.point += f.coefficients;
    out.within += f.std_errors.cwiseAbs2();
  }
  out.point /= K;
  out.within /= K;
  out.between = Eigen::VectorXd::Zero(p);
  for (const auto& f : fits) out.between += (f.coefficients - out.point).cwiseAbs2();
  out.between /= K - 1.0;
  out.total_variance = out.within + (1.0 + 1.0 / K) * out.between;
  return out;
}

PooledFit CombineConverged(std::span<const glm::RegressionFit> fits) {
  std::vector<glm::RegressionFit> kept;
  for (const auto& f : fits) {
    if (f.converged) kept.push_back(f);
  }
  const std::size_t dropped = fits.size() - kept.size();
  if (dropped > 0) {
    spdlog::warn("rubin: dropping {} of {} non-converged fits", dropped, fits.size());
  }
  if (kept.size() < 2) {
    throw std::runtime_error("rubin: fewer than two converged fits");
  }
  PooledFit out = RubinCombine(kept);
  out.dropped = dropped;
  return out;
}

}  // namespace synthtwin::pooling
