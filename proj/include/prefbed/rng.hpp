// Copyright 2026 The prefbed Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PREFBED_RNG_HPP_
#define PREFBED_RNG_HPP_

#include <cstdint>
#include <random>

#include "prefbed/common.hpp"

namespace prefbed {

// splitmix64 finalizer; the basis of all seed derivation in this project.
uint64_t mix64(uint64_t x);

// Stable child-seed derivation: hash(parent, tag) and hash(parent, tag, index).
// Every consumer of randomness derives its own stream this way, so concurrent
// evaluation order and run resumption cannot change any draw.
uint64_t derive_seed(uint64_t parent, uint64_t tag);
uint64_t derive_seed(uint64_t parent, uint64_t tag, uint64_t index);

// Content hash of a vector (bit patterns of its doubles). Used to give each
// acquisition candidate a sampling stream tied to its value, not its slot.
uint64_t hash_vector(const Vector& v);

// Deterministic generator with its own distribution code. std:: distributions
// are implementation-defined, so using them would make logged runs differ
// across standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(mix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform();

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). n must be positive.
  uint64_t uniform_int(uint64_t n);

  // Standard normal via Box-Muller (pairs cached).
  double normal();

  Rng child(uint64_t tag) { return Rng(derive_seed(next_u64(), tag)); }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace prefbed

#endif  // PREFBED_RNG_HPP_
