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

// Custody of raw party data with an access log. Every read names the owner,
// the accessor and the stage; a read by a party of another party's data is a
// cross-party access and must never happen.

#ifndef SYNTHTWIN_RUNNER_VAULT_H_
#define SYNTHTWIN_RUNNER_VAULT_H_

#include <map>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <tuple>

#include "json.hpp"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::runner {

// Accessors that are not parties.
inline constexpr std::string_view kEvaluator = "evaluator";
inline constexpr std::string_view kOrchestrator = "orchestrator";
inline constexpr std::string_view kPooledRealBaseline = "pooled-real-baseline";

struct AuditReport {
  std::size_t total = 0;
  std::size_t cross_party = 0;
  // (accessor, owner, slot) -> count
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> counts;

  nlohmann::json ToJson() const;
};

class PartyVault {
 public:
  // Registers a party. Throws if the name is taken or reserved.
  void AddParty(const std::string& name);
  bool IsParty(std::string_view name) const;

  void Put(std::string_view owner, std::string_view slot, tabular::Dataset data);
  bool Has(std::string_view owner, std::string_view slot) const;
  // Logs the access. Throws std::out_of_range for unknown slots and
  // std::logic_error when one party reads another's data.
  const tabular::Dataset& Get(std::string_view owner, std::string_view slot,
                              std::string_view accessor) const;

  AuditReport Audit() const;

 private:
  std::set<std::string, std::less<>> parties_;
  std::map<std::pair<std::string, std::string>, tabular::Dataset> data_;
  mutable std::mutex mu_;
  mutable AuditReport audit_;
};

}  // namespace synthtwin::runner

#endif  // SYNTHTWIN_RUNNER_VAULT_H_
