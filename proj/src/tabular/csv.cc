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

#include "synthtwin/tabular/csv.h"

#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/tokenizer.hpp>

namespace synthtwin::tabular {
namespace {

std::vector<std::string> SplitLine(const std::string& line, std::size_t lineno) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  try {
    Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
    return {tok.begin(), tok.end()};
  } catch (const boost::escaped_list_error& e) {
    throw std::invalid_argument("csv line " + std::to_string(lineno) + ": " +
                                e.what());
  }
}

std::string Quote(const std::string& cell) {
  if (cell.find_first_of(",\"\\\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Dataset ReadCsv(std::istream& in, SchemaPtr schema,
                std::optional<std::string> party_label) {
  const Schema& s = *schema;
  const std::size_t d = s.num_features();
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw std::invalid_argument("csv: missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = SplitLine(line, lineno);

  // Column position of each schema feature and of the target.
  std::vector<int> column(d + 1, -1);
  for (std::size_t c = 0; c < header.size(); ++c) {
    int j = header[c] == s.target_name() ? static_cast<int>(d)
                                         : s.FeatureIndex(header[c]);
    if (j < 0) {
      throw std::invalid_argument("csv header: unexpected column '" +
                                  header[c] + "'");
    }
    if (column[j] >= 0) {
      throw std::invalid_argument("csv header: duplicate column '" +
                                  header[c] + "'");
    }
    column[j] = static_cast<int>(c);
  }
  for (std::size_t j = 0; j <= d; ++j) {
    if (column[j] < 0) {
      throw std::invalid_argument(
          "csv header: missing column '" +
          (j == d ? s.target_name() : s.feature(j).name) + "'");
    }
  }

  DatasetBuilder builder(schema);
  std::vector<Code> x(d);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells = SplitLine(line, lineno);
    if (cells.size() != header.size()) {
      throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                  ": expected " + std::to_string(header.size()) +
                                  " cells, got " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& cell = cells[column[j]];
      int code = s.CategoryIndex(j, cell);
      if (code < 0) {
        throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                    ", column '" + s.feature(j).name +
                                    "': unknown category '" + cell + "'");
      }
      x[j] = code;
    }
    const std::string& t = cells[column[d]];
    if (t != "0" && t != "1") {
      throw std::invalid_argument("csv line " + std::to_string(lineno) +
                                  ", column '" + s.target_name() +
                                  "': target must be 0 or 1, got '" + t + "'");
    }
    builder.AddRow(x, t == "1" ? 1 : 0);
  }
  return std::move(builder).Build(std::move(party_label));
}

Dataset LoadCsv(const std::filesystem::path& path, SchemaPtr schema,
                std::optional<std::string> party_label) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("csv: cannot open " + path.string());
  return ReadCsv(in, std::move(schema), std::move(party_label));
}

void WriteCsv(std::ostream& out, const Dataset& ds) {
  const Schema& s = ds.schema();
  for (std::size_t j = 0; j < s.num_features(); ++j) {
    out << Quote(s.feature(j).name) << ',';
  }
  out << Quote(s.target_name()) << '\n';
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    auto r = ds.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) {
      out << Quote(s.feature(j).categories[r[j]]) << ',';
    }
    out << ds.target(i) << '\n';
  }
}

void WriteCsv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("csv: cannot write " + path.string());
  WriteCsv(out, ds);
}

}  // namespace synthtwin::tabular
