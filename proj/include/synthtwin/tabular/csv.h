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

#ifndef SYNTHTWIN_TABULAR_CSV_H_
#define SYNTHTWIN_TABULAR_CSV_H_

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "synthtwin/tabular/dataset.h"

namespace synthtwin::tabular {

// Header must list exactly the schema feature names followed by the target
// name. Cells are category labels (exact match); the target cell is 0 or 1.
// Errors name the offending line and column.
Dataset LoadCsv(const std::filesystem::path& path, SchemaPtr schema,
                std::optional<std::string> party_label = std::nullopt);
Dataset ReadCsv(std::istream& in, SchemaPtr schema,
                std::optional<std::string> party_label = std::nullopt);

void WriteCsv(const std::filesystem::path& path, const Dataset& ds);
void WriteCsv(std::ostream& out, const Dataset& ds);

}  // namespace synthtwin::tabular

#endif  // SYNTHTWIN_TABULAR_CSV_H_
