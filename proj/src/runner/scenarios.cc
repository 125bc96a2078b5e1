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

#include "synthtwin/runner/scenarios.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <exception>
#include <map>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "synthtwin/dpvi/train.h"
#include "synthtwin/eval/eval.h"
#include "synthtwin/genmodel/model.h"
#include "synthtwin/glm/poisson.h"
#include "synthtwin/kernels/kernels.h"
#include "synthtwin/pooling/pooling.h"
#include "synthtwin/tabular/ops.h"

namespace synthtwin::runner {
namespace {

using pooling::SyntheticRelease;

std::string FractionLabel(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", f);
  return buf;
}

std::string TrainSlot(double f) { return "train@" + FractionLabel(f); }

// f(i) for every i in [0, n), possibly in parallel. Rethrows the exception of
// the lowest failing index.
template <typename F>
void ParallelFor(std::size_t n, F&& f) {
  std::vector<std::exception_ptr> errors(n);
  kernels::omp::ForEach(n, [&](std::size_t i) {
    try {
      f(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// A labelled fit ready for sampling: point estimate and per-coefficient variance.
struct Estimate {
  Eigen::VectorXd point;
  Eigen::VectorXd variance;
};

Estimate FromFit(const glm::RegressionFit& f) { return {f.coefficients, f.std_errors.cwiseAbs2()}; }
Estimate FromPooled(const pooling::PooledFit& f) { return {f.point, f.total_variance}; }

class Experiment {
 public:
  explicit Experiment(const ScenarioConfig& config)
      : cfg_(config), seeds_(config.master_seed, ToString(config.kind)), start_(Clock::now()) {
    cfg_.Validate();
    if (cfg_.threads > 0) kernels::SetThreads(cfg_.threads);
    record_.config = cfg_;
    auto population = cfg_.population.Load(DeriveSeed(cfg_.master_seed, "population"));
    if (population.size() < 2) throw std::invalid_argument("scenario: need at least two parties");
    for (auto& [name, data] : population) {
      vault_.AddParty(name);
      parties_.push_back(name);
      vault_.Put(name, "raw", std::move(data));
    }
    // Each party splits its own data.
    for (const auto& name : parties_) {
      const auto& raw = vault_.Get(name, "raw", name);
      auto [train, test] = tabular::TrainTestSplit(raw, cfg_.train_fraction,
                                                   seeds_("split", name, 0));
      vault_.Put(name, "train", std::move(train));
      vault_.Put(name, "test", std::move(test));
    }
  }

  RunRecord Finish() {
    record_.audit = vault_.Audit();
    record_.wall_seconds = std::chrono::duration<double>(Clock::now() - start_).count();
    return std::move(record_);
  }

  const std::vector<std::string>& parties() const { return parties_; }
  const ScenarioConfig& config() const { return cfg_; }
  const SeedTree& seeds() const { return seeds_; }
  PartyVault& vault() { return vault_; }
  RunRecord& record() { return record_; }
  std::string scenario() const { return std::string(ToString(cfg_.kind)); }

  void PrepareFraction(double f) {
    for (const auto& name : parties_) {
      if (vault_.Has(name, TrainSlot(f))) continue;
      const auto& train = vault_.Get(name, "train", name);
      vault_.Put(name, TrainSlot(f),
                 tabular::Subsample(train, f, seeds_("subsample", name, 0,
                                                     HashLabel(FractionLabel(f)))));
    }
  }

  // Union of every party's held-out rows, read by the evaluator.
  tabular::Dataset GlobalTest() {
    tabular::Dataset out = vault_.Get(parties_.front(), "test", kEvaluator);
    for (std::size_t m = 1; m < parties_.size(); ++m) {
      out = out.Concat(vault_.Get(parties_[m], "test", kEvaluator));
    }
    return out.WithPartyLabel(std::nullopt);
  }

  // Trains every party's generator on its own data and samples K sets.
  std::vector<SyntheticRelease> TrainReleases(double f, int repeat) {
    std::vector<std::optional<SyntheticRelease>> out(parties_.size());
    ParallelFor(parties_.size(), [&](std::size_t m) { out[m] = Release(parties_[m], f, repeat); });
    std::vector<SyntheticRelease> releases;
    for (auto& r : out) {
      record_.accountants.push_back({r->party(), repeat, f, r->accountant()});
      releases.push_back(std::move(*r));
    }
    return releases;
  }

  // K fits; a fit that throws counts as non-converged.
  std::vector<glm::RegressionFit> FitAll(const std::vector<tabular::Dataset>& sets) {
    std::vector<glm::RegressionFit> fits(sets.size());
    ParallelFor(sets.size(), [&](std::size_t k) {
      try {
        fits[k] = glm::FitPoisson(sets[k]);
      } catch (const std::exception&) {
        fits[k] = glm::RegressionFit{};
      }
    });
    return fits;
  }

  SampleGroup Draw(const Estimate& e, const glm::Patterns& test, std::uint64_t seed) const {
    SampleGroup g;
    g.scenario = scenario();
    g.values = eval::SampleLlDistribution(e.point, e.variance, test, cfg_.n_draws, seed).values;
    return g;
  }

 private:
  using Clock = std::chrono::steady_clock;

  SyntheticRelease Release(const std::string& name, double f, int repeat) {
    const auto& data = vault_.Get(name, TrainSlot(f), name);
    const std::uint64_t fh = HashLabel(FractionLabel(f));
    dpvi::DpviConfig dc = cfg_.dpvi;
    dc.epsilon = cfg_.epsilon;
    dc.delta.reset();
    dc.seed = seeds_("train", name, repeat, fh);
    const dpvi::TrainResult trained = dpvi::Train(data, dc);
    const genmodel::ParamLayout layout(data.schema_ptr(), dc.components);
    std::vector<tabular::Dataset> sets;
    sets.reserve(cfg_.K);
    for (std::size_t k = 0; k < cfg_.K; ++k) {
      const auto params =
          dpvi::DrawGenerator(layout, trained.posterior, seeds_("draw", name, repeat, fh, k));
      sets.push_back(genmodel::Sample(params, data.rows(), seeds_("sample", name, repeat, fh, k))
                         .WithPartyLabel(name));
    }
    nlohmann::json meta = {{"fraction", f},
                           {"repeat", repeat},
                           {"train_seed", dc.seed},
                           {"dpvi", dc.ToJson()},
                           {"synthetic_y", "min(Poisson(lambda), 1)"},
                           {"generator_per_set", "fresh posterior draw"}};
    return SyntheticRelease(name, std::move(sets), trained.accountant, std::move(meta));
  }

  ScenarioConfig cfg_;
  SeedTree seeds_;
  PartyVault vault_;
  std::vector<std::string> parties_;
  RunRecord record_;
  Clock::time_point start_;
};

std::optional<pooling::PooledFit> TryCombine(const std::vector<glm::RegressionFit>& fits,
                                             const std::string& what,
                                             std::vector<std::string>& notes) {
  try {
    pooling::PooledFit pooled = pooling::CombineConverged(fits);
    if (pooled.dropped > 0) {
      notes.push_back(what + ": dropped " + std::to_string(pooled.dropped) + " of " +
                      std::to_string(fits.size()) + " non-converged fits");
    }
    return pooled;
  } catch (const std::runtime_error& e) {
    notes.push_back(what + ": combined arm skipped (" + e.what() + ")");
    return std::nullopt;
  }
}

std::optional<glm::RegressionFit> TryLocalFit(const tabular::Dataset& local,
                                              const std::string& what,
                                              std::vector<std::string>& notes) {
  try {
    glm::RegressionFit fit = glm::FitPoisson(local);
    if (!fit.converged) {
      notes.push_back(what + ": local fit flagged (" +
                      (fit.separated ? "separation" : "no convergence") + ")");
    }
    return fit;
  } catch (const std::exception& e) {
    notes.push_back(what + ": local-only arm skipped (" + e.what() + ")");
    return std::nullopt;
  }
}

// Local, combined and pooled-real arms for one fraction and repeat.
void SharingRound(Experiment& ex, double f, int repeat, const glm::Patterns& test) {
  const auto& cfg = ex.config();
  const auto& parties = ex.parties();
  const std::uint64_t fh = HashLabel(FractionLabel(f));
  const std::vector<SyntheticRelease> releases = ex.TrainReleases(f, repeat);

  std::vector<std::vector<SampleGroup>> groups(parties.size());
  std::vector<std::vector<std::string>> notes(parties.size());
  ParallelFor(parties.size(), [&](std::size_t m) {
    const std::string& name = parties[m];
    const std::string what = name + " (fraction " + FractionLabel(f) + ", repeat " +
                             std::to_string(repeat) + ")";
    const auto& local = ex.vault().Get(name, TrainSlot(f), name);
    auto label = [&](SampleGroup g, const char* arm) {
      g.party = name;
      g.arm = arm;
      g.eval_set = kGlobalTest;
      g.fraction = f;
      g.repeat = repeat;
      return g;
    };
    if (auto fit = TryLocalFit(local, what, notes[m])) {
      groups[m].push_back(label(
          ex.Draw(FromFit(*fit), test, ex.seeds()("ll", name, repeat, HashLabel(kLocal), fh)),
          kLocal));
    }
    std::vector<const SyntheticRelease*> others;
    for (std::size_t o = 0; o < releases.size(); ++o) {
      if (o != m) others.push_back(&releases[o]);
    }
    const auto sets = pooling::AssembleCombinedSets(local, others, cfg.K, cfg.include_local);
    if (auto pooled = TryCombine(ex.FitAll(sets), what, notes[m])) {
      groups[m].push_back(label(ex.Draw(FromPooled(*pooled), test,
                                        ex.seeds()("ll", name, repeat, HashLabel(kCombined), fh)),
                                kCombined));
    }
  });
  for (std::size_t m = 0; m < parties.size(); ++m) {
    for (auto& g : groups[m]) ex.record().samples.push_back(std::move(g));
    for (auto& n : notes[m]) ex.record().notes.push_back(std::move(n));
  }

  // Privacy-agnostic reference: all parties' real training data pooled.
  tabular::Dataset all = ex.vault().Get(parties.front(), TrainSlot(f), kPooledRealBaseline);
  for (std::size_t m = 1; m < parties.size(); ++m) {
    all = all.Concat(ex.vault().Get(parties[m], TrainSlot(f), kPooledRealBaseline));
  }
  const glm::RegressionFit real = glm::FitPoisson(all);
  SampleGroup g = ex.Draw(FromFit(real), test,
                          ex.seeds()("ll", kAllParties, repeat, HashLabel(kPooledReal), fh));
  g.party = kAllParties;
  g.arm = kPooledReal;
  g.eval_set = kGlobalTest;
  g.fraction = f;
  g.repeat = repeat;
  ex.record().samples.push_back(std::move(g));
}

void RunSharingFractions(Experiment& ex, const std::vector<double>& fractions) {
  const glm::Patterns test = glm::CompressRows(ex.GlobalTest());
  for (double f : fractions) {
    ex.PrepareFraction(f);
    for (int r = 0; r < ex.config().repeats; ++r) SharingRound(ex, f, r, test);
  }
}

}  // namespace

nlohmann::json RunRecord::ToJson() const {
  nlohmann::json acc = nlohmann::json::array();
  for (const auto& a : accountants) {
    nlohmann::json e = a.summary.ToJson();
    e["party"] = a.party;
    e["repeat"] = a.repeat;
    e["fraction"] = a.fraction;
    acc.push_back(e);
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : samples) {
    nlohmann::json e = {{"party", g.party}, {"arm", g.arm}, {"eval_set", g.eval_set},
                        {"repeat", g.repeat}, {"n", g.values.size()}};
    if (g.fraction) e["fraction"] = *g.fraction;
    if (g.keep_prob) e["keep_prob"] = *g.keep_prob;
    if (g.sharers) e["sharers"] = *g.sharers;
    groups.push_back(e);
  }
  return {{"version", version},
          {"config", config.ToJson()},
          {"accountants", acc},
          {"audit", audit.ToJson()},
          {"notes", notes},
          {"sample_groups", groups},
          {"wall_seconds", wall_seconds}};
}

RunRecord RunBaselineSharing(const ScenarioConfig& config) {
  Experiment ex(config);
  RunSharingFractions(ex, {config.fractions.front()});
  return ex.Finish();
}

RunRecord RunSizeSweep(const ScenarioConfig& config) {
  Experiment ex(config);
  RunSharingFractions(ex, config.fractions);
  return ex.Finish();
}

RunRecord RunSequentialSharing(const ScenarioConfig& config) {
  Experiment ex(config);
  const auto& parties = ex.parties();
  const double f = config.fractions.front();
  ex.PrepareFraction(f);
  const glm::Patterns test = glm::CompressRows(ex.GlobalTest());

  std::vector<std::size_t> focal;
  if (config.focal_parties.empty()) {
    for (std::size_t m = 0; m < parties.size(); ++m) focal.push_back(m);
  } else {
    for (const auto& name : config.focal_parties) {
      auto it = std::find(parties.begin(), parties.end(), name);
      if (it == parties.end()) throw std::invalid_argument("scenario: unknown focal party '" + name + "'");
      focal.push_back(static_cast<std::size_t>(it - parties.begin()));
    }
  }
  const int others = static_cast<int>(parties.size()) - 1;
  const int max_sharers =
      config.max_sharers < 0 ? others : std::min(config.max_sharers, others);

  for (int r = 0; r < config.repeats; ++r) {
    const std::vector<SyntheticRelease> releases = ex.TrainReleases(f, r);
    std::vector<std::vector<SampleGroup>> groups(focal.size());
    std::vector<std::vector<std::string>> notes(focal.size());
    ParallelFor(focal.size(), [&](std::size_t i) {
      const std::size_t m = focal[i];
      const std::string& name = parties[m];
      const auto& local = ex.vault().Get(name, TrainSlot(f), name);
      std::vector<std::size_t> pool;
      for (std::size_t o = 0; o < parties.size(); ++o) {
        if (o != m) pool.push_back(o);
      }
      // No sharers: the local-only fit (Rubin's rules over K copies of it).
      const std::string what0 = name + " (repeat " + std::to_string(r) + ")";
      const std::optional<glm::RegressionFit> local_fit = TryLocalFit(local, what0, notes[i]);
      // Pooled fits by sharer subset (bit o set when party o shares).
      std::map<std::uint64_t, std::optional<pooling::PooledFit>> cache;
      std::vector<SampleGroup> steps(max_sharers + 1);
      for (int s = 0; s <= max_sharers; ++s) {
        steps[s].scenario = ex.scenario();
        steps[s].party = name;
        steps[s].arm = kCombined;
        steps[s].eval_set = kGlobalTest;
        steps[s].fraction = f;
        steps[s].sharers = s;
        steps[s].repeat = r;
      }
      for (int p = 0; p < config.permutations; ++p) {
        std::vector<std::size_t> order = pool;
        Engine rng(ex.seeds()("permutation", name, r, p));
        std::shuffle(order.begin(), order.end(), rng);
        std::uint64_t mask = 0;
        for (int s = 0; s <= max_sharers; ++s) {
          if (s > 0) mask |= std::uint64_t{1} << order[s - 1];
          std::optional<Estimate> est;
          if (s == 0) {
            if (local_fit) est = FromFit(*local_fit);
          } else {
            auto it = cache.find(mask);
            if (it == cache.end()) {
              std::vector<const SyntheticRelease*> sharing;
              for (std::size_t o = 0; o < parties.size(); ++o) {
                if (mask >> o & 1) sharing.push_back(&releases[o]);
              }
              const auto sets =
                  pooling::AssembleCombinedSets(local, sharing, config.K, config.include_local);
              std::vector<glm::RegressionFit> fits(sets.size());
              for (std::size_t k = 0; k < sets.size(); ++k) {
                try {
                  fits[k] = glm::FitPoisson(sets[k]);
                } catch (const std::exception&) {
                  fits[k] = glm::RegressionFit{};
                }
              }
              it = cache.emplace(mask, TryCombine(fits, what0 + " subset " + std::to_string(mask),
                                                  notes[i]))
                       .first;
            }
            if (it->second) est = FromPooled(*it->second);
          }
          if (!est) continue;
          const auto values =
              eval::SampleLlDistribution(est->point, est->variance, test, config.n_draws,
                                         ex.seeds()("ll", name, r, HashLabel("sequential"), p, s))
                  .values;
          steps[s].values.insert(steps[s].values.end(), values.begin(), values.end());
        }
      }
      for (auto& g : steps) {
        if (!g.values.empty()) groups[i].push_back(std::move(g));
      }
    });
    for (std::size_t i = 0; i < focal.size(); ++i) {
      for (auto& g : groups[i]) ex.record().samples.push_back(std::move(g));
      for (auto& n : notes[i]) ex.record().notes.push_back(std::move(n));
    }
  }
  return ex.Finish();
}

RunRecord RunSkewSweep(const ScenarioConfig& config) {
  Experiment ex(config);
  const auto& parties = ex.parties();
  const auto& skew = config.skew;
  const double f = config.fractions.front();
  ex.PrepareFraction(f);

  // Half of the held-out pool becomes a new, population-matched party; the
  // other half is reserved for evaluation.
  const tabular::Dataset pool = ex.GlobalTest();
  auto [artificial, reserved] =
      tabular::TrainTestSplit(pool, 0.5, ex.seeds()("pool-split", kArtificialParty, 0));
  ex.vault().AddParty(kArtificialParty);
  ex.vault().Put(kArtificialParty, "train", std::move(artificial));
  const tabular::Dataset subgroup = tabular::FilterCategory(reserved, skew.feature, skew.category);
  if (subgroup.empty()) throw std::runtime_error("skew: evaluation subgroup is empty");
  const glm::Patterns subgroup_test = glm::CompressRows(subgroup);
  const glm::Patterns global_test = glm::CompressRows(pool);

  // The largest original party, for the drop-feature analysis.
  std::size_t largest = 0;
  for (std::size_t m = 1; m < parties.size(); ++m) {
    if (ex.vault().Get(parties[m], TrainSlot(f), kOrchestrator).rows() >
        ex.vault().Get(parties[largest], TrainSlot(f), kOrchestrator).rows()) {
      largest = m;
    }
  }
  const std::string& big = parties[largest];

  // Skewed copies of the artificial party's data, one per keep_prob.
  std::vector<tabular::Dataset> skewed;
  std::vector<std::optional<glm::RegressionFit>> skewed_fits;
  const auto& art = ex.vault().Get(kArtificialParty, "train", kArtificialParty);
  for (double kp : skew.keep_probs) {
    skewed.push_back(tabular::InjectMarginalSkew(
        art, skew.feature, skew.category, skew.target_value, kp,
        ex.seeds()("skew", kArtificialParty, 0, HashLabel(FractionLabel(kp)))));
    skewed_fits.push_back(TryLocalFit(skewed.back(), std::string(kArtificialParty) +
                                                         " (keep_prob " + FractionLabel(kp) + ")",
                                      ex.record().notes));
  }
  std::optional<glm::RegressionFit> big_fit, big_drop_fit;
  glm::Patterns global_drop_test;
  if (skew.drop_feature_arm) {
    const auto& local = ex.vault().Get(big, TrainSlot(f), big);
    big_fit = TryLocalFit(local, big + " (large party)", ex.record().notes);
    big_drop_fit = TryLocalFit(tabular::DropFeature(local, skew.feature),
                               big + " (large party, without " + skew.feature + ")",
                               ex.record().notes);
    global_drop_test = glm::CompressRows(tabular::DropFeature(pool, skew.feature));
  }

  for (int r = 0; r < config.repeats; ++r) {
    const std::vector<SyntheticRelease> releases = ex.TrainReleases(f, r);
    const std::size_t n = skew.keep_probs.size();
    std::vector<std::vector<SampleGroup>> groups(n);
    std::vector<std::vector<std::string>> notes(n);
    ParallelFor(n, [&](std::size_t i) {
      const double kp = skew.keep_probs[i];
      const std::uint64_t kh = HashLabel(FractionLabel(kp));
      const std::string what = std::string(kArtificialParty) + " (keep_prob " +
                               FractionLabel(kp) + ", repeat " + std::to_string(r) + ")";
      auto label = [&](SampleGroup g, const char* arm) {
        g.party = kArtificialParty;
        g.arm = arm;
        g.eval_set = kSubgroupTest;
        g.fraction = f;
        g.keep_prob = kp;
        g.repeat = r;
        return g;
      };
      if (skewed_fits[i]) {
        groups[i].push_back(label(ex.Draw(FromFit(*skewed_fits[i]), subgroup_test,
                                          ex.seeds()("ll", kArtificialParty, r,
                                                     HashLabel(kLocal), kh)),
                                  kLocal));
      }
      std::vector<const SyntheticRelease*> all;
      for (const auto& rel : releases) all.push_back(&rel);
      const auto sets = pooling::AssembleCombinedSets(skewed[i], all, config.K, config.include_local);
      if (auto pooled = TryCombine(ex.FitAll(sets), what, notes[i])) {
        groups[i].push_back(label(ex.Draw(FromPooled(*pooled), subgroup_test,
                                          ex.seeds()("ll", kArtificialParty, r,
                                                     HashLabel(kCombined), kh)),
                                  kCombined));
      }
    });
    for (std::size_t i = 0; i < n; ++i) {
      for (auto& g : groups[i]) ex.record().samples.push_back(std::move(g));
      for (auto& note : notes[i]) ex.record().notes.push_back(std::move(note));
    }

    if (skew.drop_feature_arm) {
      auto label = [&](SampleGroup g, const char* arm) {
        g.party = big;
        g.arm = arm;
        g.eval_set = kGlobalTest;
        g.fraction = f;
        g.repeat = r;
        return g;
      };
      const std::uint64_t fh = HashLabel(FractionLabel(f));
      if (big_fit) {
        ex.record().samples.push_back(label(
            ex.Draw(FromFit(*big_fit), global_test, ex.seeds()("ll", big, r, HashLabel(kLocal), fh)),
            kLocal));
      }
      if (big_drop_fit) {
        ex.record().samples.push_back(
            label(ex.Draw(FromFit(*big_drop_fit), global_drop_test,
                          ex.seeds()("ll", big, r, HashLabel(kLocalDropFeature), fh)),
                  kLocalDropFeature));
      }
      const auto& local = ex.vault().Get(big, TrainSlot(f), big);
      std::vector<const SyntheticRelease*> others;
      for (std::size_t o = 0; o < releases.size(); ++o) {
        if (o != largest) others.push_back(&releases[o]);
      }
      const auto sets = pooling::AssembleCombinedSets(local, others, config.K, config.include_local);
      if (auto pooled = TryCombine(ex.FitAll(sets), big + " (large party, repeat " +
                                                        std::to_string(r) + ")",
                                   ex.record().notes)) {
        ex.record().samples.push_back(
            label(ex.Draw(FromPooled(*pooled), global_test,
                          ex.seeds()("ll", big, r, HashLabel(kCombined), fh)),
                  kCombined));
      }
    }
  }
  return ex.Finish();
}

RunRecord RunScenario(const ScenarioConfig& config) {
  switch (config.kind) {
    case ScenarioKind::kBaselineSharing:
      return RunBaselineSharing(config);
    case ScenarioKind::kSequentialSharing:
      return RunSequentialSharing(config);
    case ScenarioKind::kSizeSweep:
      return RunSizeSweep(config);
    case ScenarioKind::kSkewSweep:
      return RunSkewSweep(config);
  }
  throw std::invalid_argument("unknown scenario kind");
}

}  // namespace synthtwin::runner
