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

#ifndef SYNTHTWIN_GENMODEL_MODEL_H_
#define SYNTHTWIN_GENMODEL_MODEL_H_

#include <cstdint>
#include <span>

#include "synthtwin/genmodel/params.h"
#include "synthtwin/tabular/dataset.h"

namespace synthtwin::genmodel {

// log p(x, y) = log sum_r pi_r prod_j theta_j^(r)(x_j)
//             + y w^T x~ - exp(w^T x~) - log(y!)
// y may be any count >= 0. Throws std::invalid_argument on a bad category
// index.
double LogDensity(const GenerativeParams& params,
                  std::span<const tabular::Code> x, int y);

// Log of the feature part alone.
double LogFeatureDensity(const GenerativeParams& params,
                         std::span<const tabular::Code> x);

// n independent rows. Row i uses its own counter-based stream derived from
// (seed, i), so the output does not depend on thread count. The target is
// min(Poisson(lambda), 1), i.e. Bernoulli(1 - exp(-lambda)).
tabular::Dataset Sample(const GenerativeParams& params, std::size_t n,
                        std::uint64_t seed);

namespace serial {
tabular::Dataset Sample(const GenerativeParams& params, std::size_t n,
                        std::uint64_t seed);
}  // namespace serial

}  // namespace synthtwin::genmodel

#endif  // SYNTHTWIN_GENMODEL_MODEL_H_
