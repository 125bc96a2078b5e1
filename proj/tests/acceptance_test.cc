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


// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "synthtwin/common/random.h"
#include "synthtwin/dpvi/elbo.h"
#include "synthtwin/eval/eval.h"
#include "synthtwin/glm/poisson.h"
#include "synthtwin/pooling/pooling.h"
#include "synthtwin/privacy/accountant.h"
#include "synthtwin/runner/report.h"
#include "synthtwin/runner/scenarios.h"
#include "oracles.h"
#include "test_util.h"

namespace synthtwin {
namespace {

namespace fs = std::filesystem;
using runner::GroupKey;
using runner::RunRecord;
using runner::ScenarioConfig;
using runner::ScenarioKind;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  template <typename... Args>
  void Add(const char* fmt, Args... args) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), fmt, args...);
    if (!text_.empty()) text_ += "; ";
    text_ += buf;
  }
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// Analytic oracles.

Outcome AccountantOracle() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  Detail d;
  privacy::AccountantState s;
  s.sampling_rate = 1.0;
  s.noise_multiplier = 1.0;
  s.steps = 1;
  const double eps = privacy::TotalEpsilon(s, 1e-5);
  // Without subsampling the curve is alpha / (2 sigma^2).
  double direct = std::numeric_limits<double>::infinity();
  for (int a : privacy::DefaultAlphaGrid()) {
    direct = std::min(direct, a / 2.0 + std::log(1e5) / (a - 1));
  }
  const double sigma = privacy::CalibrateSigma({5.3026, 1e-5}, 1.0, 1);
  const double secs = Seconds(start);
  o.pass = std::abs(eps - 5.3026) <= 1e-4 && std::abs(eps - direct) <= 1e-12 &&
           std::abs(sigma - 1.0) <= 0.01 && secs < 1.0;
  d.Add("eps=%.6f", eps);
  d.Add("closed form=%.6f", direct);
  d.Add("calibrated sigma=%.5f", sigma);
  d.Add("%.2fs", secs);
  o.detail = d.str();
  return o;
}

Outcome GlmOracle() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  Detail d;
  glm::RegressionFit f = glm::FitPoisson(Eigen::MatrixXd::Ones(4, 1), Eigen::Vector4d(1, 1, 0, 0));
  const double w0 = f.coefficients(0), se = f.std_errors(0);
  o.pass = f.converged && std::abs(w0 + 0.693147) <= 1e-6 && std::abs(se - 0.707107) <= 1e-6;
  d.Add("w0=%.7f", w0);
  d.Add("se=%.7f", se);

  double worst = 0.0;
  int failed = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Engine rng(seed);
    std::normal_distribution<double> n01;
    const Eigen::Index n = 200, p = 4;
    Eigen::MatrixXd x(n, p);
    Eigen::VectorXd y(n), w(p);
    for (auto& v : w) v = 0.3 * n01(rng);
    w(0) = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      x(i, 0) = 1.0;
      for (Eigen::Index k = 1; k < p; ++k) x(i, k) = n01(rng);
      const double lambda = std::exp(x.row(i).dot(w));
      y(i) = std::bernoulli_distribution(-std::expm1(-lambda))(rng) ? 1.0 : 0.0;
    }
    glm::RegressionFit fit = glm::FitPoisson(x, y);
    const Eigen::VectorXd mu = (x * fit.coefficients).array().exp();
    const double score = (x.transpose() * (y - mu)).cwiseAbs().maxCoeff();
    worst = std::max(worst, score);
    failed += !fit.converged || !(score < 1e-8);
  }
  const double secs = Seconds(start);
  o.pass = o.pass && failed == 0 && secs < 5.0;
  d.Add("max score residual=%.2e over 100 fits", worst);
  d.Add("%.2fs", secs);
  o.detail = d.str();
  return o;
}

Outcome GradientSuite() {
  const auto start = std::chrono::steady_clock::now();
  auto schema = testing::MakeSchema({2, 3});
  genmodel::ParamLayout layout(schema, 2);
  tabular::Dataset batch = testing::RandomDataset(schema, 6, 7);
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Engine rng(DeriveSeed(seed, "posterior"));
    std::normal_distribution<double> n01;
    std::uniform_real_distribution<double> ls(-2.0, -0.3);
    dpvi::VariationalPosterior q{Eigen::VectorXd(layout.size()), Eigen::VectorXd(layout.size())};
    for (Eigen::Index k = 0; k < q.dim(); ++k) {
      q.mean(k) = n01(rng);
      q.log_std(k) = ls(rng);
    }
    Eigen::MatrixXd etas = dpvi::StandardNormalDraws(layout.size(), 2, 100 + seed);
    worst = std::max(worst, testing::MaxGradientError(layout, q, etas, batch, 40, {1.5, 1.0}));
  }
  const double secs = Seconds(start);
  Detail d;
  d.Add("max relative error=%.2e over 20 posteriors", worst);
  d.Add("%.2fs", secs);
  return {worst < 1e-4 && secs < 30.0, d.str()};
}

glm::RegressionFit MakeFit(std::vector<double> w, std::vector<double> se) {
  glm::RegressionFit f;
  f.coefficients = Eigen::Map<Eigen::VectorXd>(w.data(), w.size());
  f.std_errors = Eigen::Map<Eigen::VectorXd>(se.data(), se.size());
  f.converged = true;
  return f;
}

Outcome RubinOracle() {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  Detail d;
  std::vector<glm::RegressionFit> hand = {MakeFit({0.0}, {1.0}), MakeFit({2.0}, {1.0})};
  const double total = pooling::RubinCombine(hand).total_variance(0);
  d.Add("hand total variance=%g", total);

  glm::RegressionFit f = MakeFit({0.3, -1.25, 2.5}, {0.5, 0.125, 2.0});
  std::vector<glm::RegressionFit> same(5, f);
  pooling::PooledFit p = pooling::RubinCombine(same);
  const bool reproduces =
      p.point == f.coefficients && p.total_variance == f.std_errors.cwiseAbs2();
  d.Add("identical fits reproduced=%s", reproduces ? "yes" : "no");

  Engine rng(3);
  std::normal_distribution<double> n01;
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t K = 2 + rng() % 20;
    std::vector<glm::RegressionFit> fits;
    for (std::size_t k = 0; k < K; ++k) {
      fits.push_back(MakeFit({n01(rng), 10 * n01(rng)}, {std::abs(n01(rng)), std::abs(n01(rng))}));
    }
    pooling::PooledFit q = pooling::RubinCombine(fits);
    violations += !(q.total_variance.array() >= q.within.array()).all();
  }
  d.Add("T<W in %d/1000", violations);
  const double secs = Seconds(start);
  d.Add("%.2fs", secs);
  o.pass = total == 4.0 && reproduces && violations == 0 && secs < 5.0;
  o.detail = d.str();
  return o;
}

Outcome WelchOracle() {
  const auto start = std::chrono::steady_clock::now();
  Detail d;
  eval::WelchResult r = eval::RankedWelchTest(std::vector<double>{1, 2, 3},
                                              std::vector<double>{4, 5, 6}, eval::Sided::kTwo);
  d.Add("t=%.4f", r.t);
  d.Add("p=%.4f", r.p);
  Engine rng(2);
  std::normal_distribution<double> n01;
  int rejections = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> a(100), b(100);
    for (double& x : a) x = n01(rng);
    for (double& x : b) x = n01(rng);
    rejections += eval::RankedWelchTest(a, b, eval::Sided::kOneGreater).p < 0.05;
  }
  const double rate = rejections / 1000.0;
  const double secs = Seconds(start);
  d.Add("null rejection rate=%.3f", rate);
  d.Add("%.2fs", secs);
  const bool pass = std::abs(r.t + 3.6742) <= 1e-3 && std::abs(r.p - 0.0214) <= 1e-3 &&
                    rate >= 0.03 && rate <= 0.07 && secs < 60.0;
  return {pass, d.str()};
}

// ---------------------------------------------------------------------------
// Scenario trends on the desk population.

ScenarioConfig DeskConfig(ScenarioKind kind) {
  ScenarioConfig c = ScenarioConfig::Defaults(kind);
  c.population.preset = "desk";
  c.epsilon = 1.0;
  c.K = 20;
  c.repeats = 3;
  c.master_seed = 2026;
  if (kind != ScenarioKind::kSizeSweep && kind != ScenarioKind::kSkewSweep) c.fractions = {0.1};
  if (kind == ScenarioKind::kSizeSweep) c.fractions = {0.1, 0.5, 1.0};
  if (kind == ScenarioKind::kSequentialSharing) c.permutations = 20;
  return c;
}

using Pooled = std::vector<std::pair<GroupKey, std::vector<double>>>;

const std::vector<double>* Lookup(const Pooled& pooled,
                                  const std::function<bool(const GroupKey&)>& match) {
  for (const auto& [k, v] : pooled) {
    if (match(k)) return &v;
  }
  return nullptr;
}

double Mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

std::vector<std::string> Parties(const RunRecord& r) {
  std::vector<std::string> out;
  for (const auto& g : r.samples) {
    if (g.party == runner::kAllParties) continue;
    if (std::find(out.begin(), out.end(), g.party) == out.end()) out.push_back(g.party);
  }
  return out;
}

Outcome BaselineTrend(const RunRecord& r, double secs) {
  const Pooled pooled = runner::PoolRepeats(r.samples);
  const auto parties = Parties(r);
  int better = 0, narrower = 0;
  for (const auto& party : parties) {
    auto arm = [&](const char* a) {
      return Lookup(pooled, [&](const GroupKey& k) { return k.party == party && k.arm == a; });
    };
    const auto* local = arm(runner::kLocal);
    const auto* combined = arm(runner::kCombined);
    if (!local || !combined) continue;
    const auto test = eval::RankedWelchTest(*combined, *local, eval::Sided::kOneGreater);
    better += Mean(*combined) > Mean(*local) && test.p < 0.01;
    narrower += eval::SummarizeBox(*combined).iqr() < eval::SummarizeBox(*local).iqr();
  }
  Detail d;
  d.Add("combined better (p<0.01) for %d/%zu", better, parties.size());
  d.Add("narrower IQR for %d/%zu", narrower, parties.size());
  d.Add("%.0fs", secs);
  return {parties.size() == 8 && better >= 7 && narrower >= 7 && secs < 20 * 60, d.str()};
}

Outcome SequentialTrend(const RunRecord& r) {
  const Pooled pooled = runner::PoolRepeats(r.samples);
  const auto parties = Parties(r);
  int gained = 0;
  double monotone_share = 0.0;
  for (const auto& party : parties) {
    std::map<int, double> medians;
    for (const auto& [k, v] : pooled) {
      if (k.party == party && k.sharers) medians[*k.sharers] = eval::SummarizeBox(v).median;
    }
    if (medians.count(0) && medians.count(5) && medians[5] > medians[0]) ++gained;
    int steps = 0, up = 0;
    for (auto it = medians.begin(); std::next(it) != medians.end(); ++it) {
      ++steps;
      up += std::next(it)->second >= it->second;
    }
    monotone_share += steps ? static_cast<double>(up) / steps : 0.0;
  }
  monotone_share /= parties.size();
  Detail d;
  d.Add("median(5 sharers)>median(0) for %d/%zu", gained, parties.size());
  d.Add("nondecreasing steps %.1f%%", 100 * monotone_share);
  return {!parties.empty() && gained == static_cast<int>(parties.size()) && monotone_share >= 0.8,
          d.str()};
}

Outcome SizeTrend(const RunRecord& r) {
  const Pooled pooled = runner::PoolRepeats(r.samples);
  // Party average of a per-party statistic at one fraction.
  auto average = [&](const char* arm, double f, bool median) {
    double s = 0.0;
    int n = 0;
    for (const auto& [k, v] : pooled) {
      if (k.arm == arm && k.fraction && std::abs(*k.fraction - f) < 1e-12 &&
          k.party != runner::kAllParties) {
        s += median ? eval::SummarizeBox(v).median : Mean(v);
        ++n;
      }
    }
    return n ? s / n : std::nan("");
  };
  auto drop = [&](const char* arm, bool median) {
    return average(arm, 1.0, median) - average(arm, 0.1, median);
  };
  // A local mean of -inf (draws whose rate overflows) is a real, infinite
  // degradation. The median version is reported alongside.
  const double local_drop = drop(runner::kLocal, false);
  const double combined_drop = drop(runner::kCombined, false);
  int infinite = 0;
  for (const auto& [k, v] : pooled) {
    infinite += k.arm == runner::kLocal && std::isinf(Mean(v));
  }
  Detail d;
  d.Add("local degradation=%.4f", local_drop);
  d.Add("combined degradation=%.4f", combined_drop);
  d.Add("local groups with -inf mean=%d", infinite);
  d.Add("median-based ratio=%.2f", drop(runner::kLocal, true) / drop(runner::kCombined, true));
  return {!std::isnan(local_drop) && std::isfinite(combined_drop) && local_drop > 0.0 &&
              local_drop >= 2.0 * combined_drop,
          d.str()};
}

Outcome SkewTrend(const RunRecord& r) {
  const Pooled pooled = runner::PoolRepeats(r.samples);
  auto arm = [&](const char* a, double kp) {
    return Lookup(pooled, [&](const GroupKey& k) {
      return k.party == runner::kArtificialParty && k.arm == a && k.keep_prob &&
             std::abs(*k.keep_prob - kp) < 1e-12;
    });
  };
  Detail d;
  std::vector<double> gains;
  for (double kp : {0.1, 0.25, 0.5, 0.75}) {
    const auto* local = arm(runner::kLocal, kp);
    const auto* combined = arm(runner::kCombined, kp);
    if (!local || !combined) return {false, "missing arm"};
    gains.push_back(Mean(*combined) - Mean(*local));
    d.Add("gain(%.2f)=%.4f", kp, gains.back());
  }
  int inversions = 0;
  for (std::size_t i = 1; i < gains.size(); ++i) inversions += gains[i] > gains[i - 1];
  const auto* local = arm(runner::kLocal, 1.0);
  const auto* combined = arm(runner::kCombined, 1.0);
  if (!local || !combined) return {false, "missing arm at keep_prob 1"};
  const double gain1 = Mean(*combined) - Mean(*local);
  const double p1 = eval::RankedWelchTest(*combined, *local, eval::Sided::kTwo).p;
  d.Add("gain(1)=%.4f", gain1);
  d.Add("p(1)=%.3g", p1);
  d.Add("inversions=%d", inversions);
  return {inversions <= 1 && (gain1 < 0.0 || p1 >= 0.01), d.str()};
}

Outcome LedgerAndAudit(const std::vector<const RunRecord*>& records) {
  std::size_t runs = 0, within = 0, delta = 0, cross = 0, accesses = 0;
  for (const auto* r : records) {
    const runner::LedgerCheck c = runner::CheckLedger(*r);
    runs += c.runs;
    within += c.within_budget;
    delta += c.delta_matches;
    cross += r->audit.cross_party;
    accesses += r->audit.total;
  }
  Detail d;
  d.Add("eps within budget %zu/%zu", within, runs);
  d.Add("delta=1/N %zu/%zu", delta, runs);
  d.Add("cross-party raw reads %zu of %zu", cross, accesses);
  return {runs > 0 && within == runs && delta == runs && cross == 0, d.str()};
}

std::map<std::string, std::string> CsvBytes(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".csv") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[e.path().filename().string()] = ss.str();
  }
  return out;
}

Outcome Determinism(const RunRecord& first) {
  const RunRecord second = runner::RunBaselineSharing(DeskConfig(ScenarioKind::kBaselineSharing));
  const fs::path root = fs::temp_directory_path() / "synthtwin_acceptance";
  fs::remove_all(root);
  runner::WriteReport(root / "a", first);
  runner::WriteReport(root / "b", second);
  const auto a = CsvBytes(root / "a");
  const auto b = CsvBytes(root / "b");
  std::size_t bytes = 0;
  for (const auto& [name, content] : a) bytes += content.size();
  Detail d;
  d.Add("%zu CSV files", a.size());
  d.Add("%zu bytes", bytes);
  d.Add("identical=%s", a == b ? "yes" : "no");
  fs::remove_all(root);
  return {!a.empty() && a == b, d.str()};
}

}  // namespace
}  // namespace synthtwin

int main() {
  using namespace synthtwin;
  // Dropped non-converged fits are expected at desk scale.
  spdlog::set_level(spdlog::level::err);
  int failures = 0;
  auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("criterion %2d %-28s %s  %s\n", id, name, o.pass ? "PASS" : "FAIL",
                o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  };

  report(1, "accountant oracle", AccountantOracle());
  report(2, "glm oracle", GlmOracle());
  report(3, "gradient suite", GradientSuite());
  report(4, "rubin oracle", RubinOracle());
  report(5, "ranked welch oracle", WelchOracle());

  auto start = std::chrono::steady_clock::now();
  const RunRecord baseline = runner::RunBaselineSharing(DeskConfig(ScenarioKind::kBaselineSharing));
  report(6, "baseline sharing trend", BaselineTrend(baseline, Seconds(start)));
  const RunRecord sequential =
      runner::RunSequentialSharing(DeskConfig(ScenarioKind::kSequentialSharing));
  report(7, "sequential sharing trend", SequentialTrend(sequential));
  const RunRecord size = runner::RunSizeSweep(DeskConfig(ScenarioKind::kSizeSweep));
  report(8, "size sweep trend", SizeTrend(size));
  const RunRecord skew = runner::RunSkewSweep(DeskConfig(ScenarioKind::kSkewSweep));
  report(9, "skew sweep trend", SkewTrend(skew));
  report(10, "privacy ledger and audit", LedgerAndAudit({&baseline, &sequential, &size, &skew}));
  report(11, "determinism", Determinism(baseline));

  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
