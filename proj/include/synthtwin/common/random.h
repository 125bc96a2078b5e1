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

#ifndef SYNTHTWIN_COMMON_RANDOM_H_
#define SYNTHTWIN_COMMON_RANDOM_H_

#include <cstdint>
#include <limits>
#include <random>
#include <string_view>

namespace synthtwin {

// Engine used for sequential random streams.
using Engine = std::mt19937_64;

// SplitMix64 finalizer. Used both to derive child seeds and as the state
// update of CounterEngine.
constexpr std::uint64_t Mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t HashLabel(std::string_view label) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return Mix64(h);
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t child) {
  return Mix64(parent ^ Mix64(child + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t DeriveSeed(std::uint64_t parent,
                                   std::string_view label) {
  return DeriveSeed(parent, HashLabel(label));
}

template <typename... Rest>
constexpr std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t first,
                                   Rest... rest) requires(sizeof...(Rest) > 0) {
  return DeriveSeed(DeriveSeed(parent, first), rest...);
}

// A small SplitMix64 generator. Cheap to construct, so it is used for
// counter-based streams (one per row / per draw) inside parallel loops.
class CounterEngine {
 public:
  using result_type = std::uint64_t;

  explicit CounterEngine(std::uint64_t seed) : state_(seed) {}
  CounterEngine(std::uint64_t seed, std::uint64_t counter)
      : state_(DeriveSeed(seed, counter)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

}  // namespace synthtwin

#endif  // SYNTHTWIN_COMMON_RANDOM_H_
