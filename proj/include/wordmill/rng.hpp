/*
 * Copyright 2026 The Wordmill Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <random>

namespace wordmill {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic RNG. mt19937 output is pinned by the standard and the
/// mappings below avoid std::*_distribution, whose sequences vary between
/// standard library implementations. The same seed therefore produces the
/// same stream everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(splitmix64(seed))) {}

    std::uint32_t next_u32() { return gen_(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint32_t bounded(std::uint32_t n) {
        return static_cast<std::uint32_t>((static_cast<std::uint64_t>(next_u32()) * n) >> 32);
    }

    /// Uniform double in [0, 1).
    double real01() { return static_cast<double>(next_u32()) * 0x1p-32; }

    /// Uniform float in [lo, hi).
    float uniform(float lo, float hi) {
        return lo + static_cast<float>(real01()) * (hi - lo);
    }

private:
    std::mt19937 gen_;
};

}  // namespace wordmill
