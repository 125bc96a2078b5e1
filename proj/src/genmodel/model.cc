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

#include "synthtwin/genmodel/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "synthtwin/common/random.h"
#include "synthtwin/kernels/kernels.h"
#include "synthtwin/tabular/ops.h"

namespace synthtwin::genmodel {
namespace {

void CheckCodes(const tabular::Schema& schema, std::span<const tabular::Code> x) {
  if (x.size() != schema.num_features()) {
    throw std::invalid_argument("log_density: wrong number of features");
  }
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] < 0 || x[j] >= schema.cardinality(j)) {
      throw std::invalid_argument("log_density: invalid category index for '" +
                                  schema.feature(j).name + "'");
    }
  }
}

// Inverse-CDF draw from a probability vector.
int DrawCategorical(std::span<const double> p, double u) {
  double acc = 0.0;
  for (std::size_t k = 0; k + 1 < p.size(); ++k) {
    acc += p[k];
    if (u < acc) return static_cast<int>(k);
  }
  // Zero-mass trailing categories cannot be drawn.
  for (std::size_t k = p.size(); k-- > 0;) {
    if (p[k] > 0.0) return static_cast<int>(k);
  }
  return 0;
}

template <typename ForEach>
tabular::Dataset SampleWith(const GenerativeParams& params, std::size_t n,
                            std::uint64_t seed, ForEach for_each) {
  const tabular::Schema& schema = params.schema();
  const std::size_t d = schema.num_features();
  std::vector<tabular::Code> codes(n * d);
  std::vector<std::uint8_t> targets(n);
  const double* w = params.regression_weights().data();
  for_each(n, [&](std::size_t i) {
    CounterEngine rng(seed, i);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const int r = DrawCategorical(params.mixture_weights(), unif(rng));
    std::span<tabular::Code> x(codes.data() + i * d, d);
    for (std::size_t j = 0; j < d; ++j) {
      x[j] = DrawCategorical(params.table(r, j), unif(rng));
    }
    const double lambda = std::exp(tabular::LinearPredictor(schema, w, x));
    // P(min(Poisson(lambda), 1) = 1) = 1 - exp(-lambda).
    targets[i] = unif(rng) < -std::expm1(-lambda) ? 1 : 0;
  });
  return tabular::Dataset(params.schema_ptr(), std::move(codes),
                          std::move(targets));
}

}  // namespace

double LogFeatureDensity(const GenerativeParams& params,
                         std::span<const tabular::Code> x) {
  const tabular::Schema& schema = params.schema();
  CheckCodes(schema, x);
  const int R = params.components();
  double max_term = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(R);
  for (int r = 0; r < R; ++r) {
    double t = std::log(params.mixture_weights()[r]);
    for (std::size_t j = 0; j < x.size(); ++j) t += std::log(params.table(r, j)[x[j]]);
    terms[r] = t;
    max_term = std::max(max_term, t);
  }
  if (max_term == -std::numeric_limits<double>::infinity()) return max_term;
  double sum = 0.0;
  for (double t : terms) sum += std::exp(t - max_term);
  return max_term + std::log(sum);
}

double LogDensity(const GenerativeParams& params,
                  std::span<const tabular::Code> x, int y) {
  if (y < 0) throw std::invalid_argument("log_density: negative count");
  const double feature_part = LogFeatureDensity(params, x);
  const double eta = tabular::LinearPredictor(
      params.schema(), params.regression_weights().data(), x);
  return feature_part + y * eta - std::exp(eta) - std::lgamma(y + 1.0);
}

tabular::Dataset Sample(const GenerativeParams& params, std::size_t n,
                        std::uint64_t seed) {
  return SampleWith(params, n, seed, [](std::size_t count, auto&& f) {
    kernels::omp::ForEach(count, f);
  });
}

namespace serial {
tabular::Dataset Sample(const GenerativeParams& params, std::size_t n,
                        std::uint64_t seed) {
  return SampleWith(params, n, seed, [](std::size_t count, auto&& f) {
    kernels::serial::ForEach(count, f);
  });
}
}  // namespace serial

}  // namespace synthtwin::genmodel
