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

#include "synthtwin/runner/report.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/tokenizer.hpp>

namespace synthtwin::runner {
namespace {

std::string Num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string Short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string Field(const std::string& s) {
  if (s.find_first_of(",\"\n\\") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

template <typename T>
std::string Opt(const std::optional<T>& v) {
  if (!v) return "";
  if constexpr (std::is_same_v<T, int>) {
    return std::to_string(*v);
  } else {
    return Short(*v);
  }
}

nlohmann::json JsonNum(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string KeyColumns(const GroupKey& k) {
  return Field(k.scenario) + "," + Field(k.party) + "," + Field(k.arm) + "," +
         Field(k.eval_set) + "," + Opt(k.fraction) + "," + Opt(k.keep_prob) + "," +
         Opt(k.sharers);
}

nlohmann::json KeyJson(const GroupKey& k) {
  nlohmann::json j = {{"scenario", k.scenario}, {"party", k.party}, {"arm", k.arm},
                      {"eval_set", k.eval_set}};
  if (k.fraction) j["fraction"] = *k.fraction;
  if (k.keep_prob) j["keep_prob"] = *k.keep_prob;
  if (k.sharers) j["sharers"] = *k.sharers;
  return j;
}

std::ofstream OpenOut(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("report: cannot write " + path.string());
  return out;
}

const std::vector<double>* Find(
    const std::vector<std::pair<GroupKey, std::vector<double>>>& pooled, const GroupKey& key) {
  for (const auto& [k, v] : pooled) {
    if (k == key) return &v;
  }
  return nullptr;
}

PValueRow Compare(const GroupKey& a, const std::vector<double>& va, const GroupKey& b,
                  const std::vector<double>& vb, std::string comparison, eval::Sided sided) {
  PValueRow row{a, b, std::move(comparison), sided, va.size(), vb.size(), std::nullopt};
  try {
    row.result = eval::RankedWelchTest(va, vb, sided);
  } catch (const std::invalid_argument&) {
    row.result.reset();
  }
  return row;
}

std::string SettingLabel(const PValueRow& r) {
  if (r.a.sharers) return "sharers=" + std::to_string(*r.a.sharers);
  std::string s;
  if (r.a.keep_prob) s = "keep_prob=" + Short(*r.a.keep_prob);
  if (r.a.fraction && !r.a.keep_prob) s = "fraction=" + Short(*r.a.fraction);
  return s.empty() ? r.comparison : s + " " + r.comparison;
}

}  // namespace

GroupKey GroupKey::Of(const SampleGroup& g) {
  return {g.scenario, g.party, g.arm, g.eval_set, g.fraction, g.keep_prob, g.sharers};
}

std::vector<std::pair<GroupKey, std::vector<double>>> PoolRepeats(
    const std::vector<SampleGroup>& samples) {
  std::vector<std::pair<GroupKey, std::vector<double>>> out;
  for (const auto& g : samples) {
    const GroupKey key = GroupKey::Of(g);
    auto it = std::find_if(out.begin(), out.end(), [&](const auto& e) { return e.first == key; });
    if (it == out.end()) {
      out.emplace_back(key, std::vector<double>{});
      it = std::prev(out.end());
    }
    it->second.insert(it->second.end(), g.values.begin(), g.values.end());
  }
  return out;
}

std::vector<BoxRow> BoxTable(const std::vector<SampleGroup>& samples) {
  std::vector<BoxRow> rows;
  for (const auto& [key, values] : PoolRepeats(samples)) {
    rows.push_back({key, eval::SummarizeBox(values)});
  }
  return rows;
}

std::vector<PValueRow> PValueTable(const std::vector<SampleGroup>& samples) {
  const auto pooled = PoolRepeats(samples);
  std::vector<PValueRow> rows;
  for (const auto& [key, values] : pooled) {
    const bool skew = key.scenario == ToString(ScenarioKind::kSkewSweep);
    const eval::Sided sided = skew ? eval::Sided::kTwo : eval::Sided::kOneGreater;
    if (key.arm == kCombined && !key.sharers) {
      GroupKey local = key;
      local.arm = kLocal;
      if (const auto* lv = Find(pooled, local)) {
        rows.push_back(Compare(key, values, local, *lv, "combined>local", sided));
      }
    } else if (key.arm == kLocalDropFeature) {
      GroupKey local = key;
      local.arm = kLocal;
      if (const auto* lv = Find(pooled, local)) {
        rows.push_back(Compare(key, values, local, *lv, "local_drop_feature>local", sided));
      }
    } else if (key.sharers && *key.sharers > 0) {
      GroupKey prev = key;
      prev.sharers = *key.sharers - 1;
      if (const auto* pv = Find(pooled, prev)) {
        rows.push_back(Compare(key, values, prev, *pv,
                               "sharers " + std::to_string(*key.sharers) + ">" +
                                   std::to_string(*prev.sharers),
                               sided));
      }
    }
  }
  return rows;
}

void WriteSamplesCsv(const std::filesystem::path& path, const std::vector<SampleGroup>& samples) {
  auto out = OpenOut(path);
  out << "scenario,party,arm,eval_set,fraction,keep_prob,sharers,repeat,draw,value\n";
  for (const auto& g : samples) {
    const std::string key = KeyColumns(GroupKey::Of(g)) + "," + std::to_string(g.repeat) + ",";
    for (std::size_t d = 0; d < g.values.size(); ++d) {
      out << key << d << "," << Num(g.values[d]) << "\n";
    }
  }
}

std::vector<SampleGroup> ReadSamplesCsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("report: cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "scenario,party,arm,eval_set,fraction,keep_prob,sharers,repeat,draw,value") {
    throw std::runtime_error("report: unexpected header in " + path.string());
  }
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<SampleGroup> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Tokenizer tok(line, boost::escaped_list_separator<char>('\\', ',', '"'));
    std::vector<std::string> f(tok.begin(), tok.end());
    if (f.size() != 10) {
      throw std::runtime_error("report: line " + std::to_string(line_no) + " has " +
                               std::to_string(f.size()) + " fields");
    }
    SampleGroup g;
    g.scenario = f[0];
    g.party = f[1];
    g.arm = f[2];
    g.eval_set = f[3];
    if (!f[4].empty()) g.fraction = std::stod(f[4]);
    if (!f[5].empty()) g.keep_prob = std::stod(f[5]);
    if (!f[6].empty()) g.sharers = std::stoi(f[6]);
    g.repeat = std::stoi(f[7]);
    const double value = std::strtod(f[9].c_str(), nullptr);
    const bool same = !out.empty() && GroupKey::Of(out.back()) == GroupKey::Of(g) &&
                      out.back().repeat == g.repeat && std::stoul(f[8]) == out.back().values.size();
    if (!same) out.push_back(std::move(g));
    out.back().values.push_back(value);
  }
  return out;
}

void WriteSummaries(const std::filesystem::path& dir, const std::vector<SampleGroup>& samples,
                    const nlohmann::json& extra) {
  std::filesystem::create_directories(dir);
  const auto boxes = BoxTable(samples);
  const auto pvalues = PValueTable(samples);

  {
    auto out = OpenOut(dir / "box_stats.csv");
    out << "scenario,party,arm,eval_set,fraction,keep_prob,sharers,n,mean,q25,median,q75,"
           "whisker_low,whisker_high,outliers\n";
    for (const auto& b : boxes) {
      const auto& s = b.stats;
      out << KeyColumns(b.key) << "," << s.n << "," << Num(s.mean) << "," << Num(s.q25) << ","
          << Num(s.median) << "," << Num(s.q75) << "," << Num(s.whisker_low) << ","
          << Num(s.whisker_high) << "," << s.outliers << "\n";
    }
  }
  {
    auto out = OpenOut(dir / "pvalues.csv");
    out << "scenario,party,eval_set,fraction,keep_prob,sharers,comparison,sided,n_a,n_b,t,df,p\n";
    for (const auto& r : pvalues) {
      out << Field(r.a.scenario) << "," << Field(r.a.party) << "," << Field(r.a.eval_set) << ","
          << Opt(r.a.fraction) << "," << Opt(r.a.keep_prob) << "," << Opt(r.a.sharers) << ","
          << Field(r.comparison) << "," << (r.sided == eval::Sided::kTwo ? "two" : "one_greater")
          << "," << r.n_a << "," << r.n_b << ",";
      if (r.result) {
        out << Num(r.result->t) << "," << Num(r.result->df) << "," << Num(r.result->p) << "\n";
      } else {
        out << ",,\n";
      }
    }
  }
  {
    // Wide layout: one row per party, one column per setting.
    std::vector<std::string> columns;
    std::vector<std::string> row_names;
    std::map<std::pair<std::string, std::string>, std::string> cells;
    for (const auto& r : pvalues) {
      const std::string row = r.a.party + (r.a.eval_set == kSubgroupTest ? " (subgroup)" : "");
      const std::string col = SettingLabel(r);
      if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
      if (std::find(row_names.begin(), row_names.end(), row) == row_names.end()) {
        row_names.push_back(row);
      }
      cells[{row, col}] = r.result ? Short(r.result->p) : "undefined";
    }
    auto out = OpenOut(dir / "pvalue_table.csv");
    out << "party";
    for (const auto& c : columns) out << "," << Field(c);
    out << "\n";
    for (const auto& row : row_names) {
      out << Field(row);
      for (const auto& c : columns) {
        auto it = cells.find({row, c});
        out << "," << (it == cells.end() ? "" : it->second);
      }
      out << "\n";
    }
  }

  nlohmann::json summary = extra;
  nlohmann::json jb = nlohmann::json::array();
  for (const auto& b : boxes) {
    nlohmann::json e = KeyJson(b.key);
    e["box"] = b.stats.ToJson();
    jb.push_back(e);
  }
  nlohmann::json jp = nlohmann::json::array();
  for (const auto& r : pvalues) {
    nlohmann::json e = KeyJson(r.a);
    e["arm"] = nullptr;
    e["comparison"] = r.comparison;
    e["sided"] = r.sided == eval::Sided::kTwo ? "two" : "one_greater";
    e["n_a"] = r.n_a;
    e["n_b"] = r.n_b;
    if (r.result) {
      e["t"] = JsonNum(r.result->t);
      e["df"] = JsonNum(r.result->df);
      e["p"] = JsonNum(r.result->p);
    }
    jp.push_back(e);
  }
  summary["box_stats"] = jb;
  summary["pvalues"] = jp;
  auto out = OpenOut(dir / "summary.json");
  out << summary.dump(2) << "\n";
}

LedgerCheck CheckLedger(const RunRecord& record) {
  LedgerCheck c;
  for (const auto& a : record.accountants) {
    ++c.runs;
    if (a.summary.epsilon <= record.config.epsilon && !a.summary.non_private) ++c.within_budget;
    if (a.summary.dataset_size > 0 &&
        std::abs(a.summary.delta * static_cast<double>(a.summary.dataset_size) - 1.0) < 1e-12) {
      ++c.delta_matches;
    }
  }
  return c;
}

void WriteReport(const std::filesystem::path& dir, const RunRecord& record) {
  std::filesystem::create_directories(dir);
  WriteSamplesCsv(dir / "samples.csv", record.samples);
  {
    auto out = OpenOut(dir / "ledger.csv");
    out << "party,repeat,fraction,dataset_size,sampling_rate,noise_multiplier,steps,epsilon,"
           "delta,target_epsilon,within_budget,delta_is_inverse_n\n";
    for (const auto& a : record.accountants) {
      const auto& s = a.summary;
      const bool within = s.epsilon <= record.config.epsilon && !s.non_private;
      const bool delta_ok = s.dataset_size > 0 &&
                            std::abs(s.delta * static_cast<double>(s.dataset_size) - 1.0) < 1e-12;
      out << Field(a.party) << "," << a.repeat << "," << Short(a.fraction) << ","
          << s.dataset_size << "," << Num(s.sampling_rate) << "," << Num(s.noise_multiplier)
          << "," << s.steps << "," << Num(s.epsilon) << "," << Num(s.delta) << ","
          << Num(s.target_epsilon) << "," << (within ? 1 : 0) << "," << (delta_ok ? 1 : 0)
          << "\n";
    }
  }
  const LedgerCheck ledger = CheckLedger(record);
  nlohmann::json extra = {
      {"scenario", ToString(record.config.kind)},
      {"version", record.version},
      {"privacy_ledger",
       {{"training_runs", ledger.runs},
        {"within_budget", ledger.within_budget},
        {"delta_is_inverse_n", ledger.delta_matches}}},
      {"audit", {{"total_accesses", record.audit.total},
                 {"cross_party_accesses", record.audit.cross_party}}},
      {"notes", record.notes.size()}};
  WriteSummaries(dir, record.samples, extra);
  auto out = OpenOut(dir / "run_record.json");
  out << record.ToJson().dump(2) << "\n";
}

}  // namespace synthtwin::runner
