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

#include "synthtwin/runner/vault.h"

#include <stdexcept>

namespace synthtwin::runner {

nlohmann::json AuditReport::ToJson() const {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& [key, n] : counts) {
    const auto& [accessor, owner, slot] = key;
    entries.push_back({{"accessor", accessor}, {"owner", owner}, {"slot", slot}, {"count", n}});
  }
  return {{"total_accesses", total}, {"cross_party_accesses", cross_party},
          {"entries", entries}};
}

void PartyVault::AddParty(const std::string& name) {
  if (name == kEvaluator || name == kOrchestrator || name == kPooledRealBaseline) {
    throw std::invalid_argument("vault: reserved party name '" + name + "'");
  }
  if (!parties_.insert(name).second) {
    throw std::invalid_argument("vault: duplicate party '" + name + "'");
  }
}

bool PartyVault::IsParty(std::string_view name) const {
  return parties_.find(name) != parties_.end();
}

void PartyVault::Put(std::string_view owner, std::string_view slot,
                     tabular::Dataset data) {
  if (!IsParty(owner)) throw std::invalid_argument("vault: unknown party '" + std::string(owner) + "'");
  std::lock_guard<std::mutex> lock(mu_);
  data_.insert_or_assign({std::string(owner), std::string(slot)},
                         data.WithPartyLabel(std::string(owner)));
}

bool PartyVault::Has(std::string_view owner, std::string_view slot) const {
  std::lock_guard<std::mutex> lock(mu_);
  return data_.count({std::string(owner), std::string(slot)}) > 0;
}

const tabular::Dataset& PartyVault::Get(std::string_view owner, std::string_view slot,
                                        std::string_view accessor) const {
  std::lock_guard<std::mutex> lock(mu_);
  const bool cross = IsParty(accessor) && accessor != owner;
  ++audit_.total;
  ++audit_.counts[{std::string(accessor), std::string(owner), std::string(slot)}];
  if (cross) {
    ++audit_.cross_party;
    throw std::logic_error("vault: party '" + std::string(accessor) +
                           "' attempted to read raw data of '" + std::string(owner) + "'");
  }
  auto it = data_.find({std::string(owner), std::string(slot)});
  if (it == data_.end()) {
    throw std::out_of_range("vault: no slot '" + std::string(slot) + "' for '" +
                            std::string(owner) + "'");
  }
  return it->second;
}

AuditReport PartyVault::Audit() const {
  std::lock_guard<std::mutex> lock(mu_);
  return audit_;
}

}  // namespace synthtwin::runner
