/*
 * Copyright 2026 The dagcausal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef DAGCAUSAL_RNG_H_
#define DAGCAUSAL_RNG_H_

#include <cstdint>

namespace dagcausal {

// Counter-based generator: the n-th draw of a stream is a pure function of
// (key, n), so streams can be split and replayed without shared state.
// Normal and uniform variates are produced by in-house transforms so the
// sequence does not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  // Independent child stream; does not advance this generator.
  Rng split(std::uint64_t stream_id) const;

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

}  // namespace dagcausal

#endif  // DAGCAUSAL_RNG_H_
