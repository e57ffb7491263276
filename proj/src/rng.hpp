/* Copyright 2026 The memecap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef MEMECAP_RNG_HPP_
#define MEMECAP_RNG_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace memecap {

// Portable random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; the conversions below are done by hand
// because the standard distributions are implementation-defined.
//
// Algorithm version 1:
//   uniform()  = (next >> 11) * 2^-53
//   below(n)   = next mod n, rejecting the biased top range
//   shuffle    = Fisher-Yates from the back using below()
class Rng {
 public:
  static constexpr int kAlgorithmVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) {
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % bound);
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace memecap

#endif  // MEMECAP_RNG_HPP_
