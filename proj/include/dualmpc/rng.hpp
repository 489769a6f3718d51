/*
 Copyright 2026 The dualmpc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Splittable seeding: every random stream is keyed by (root, purpose, step)
// so results do not depend on execution order or thread count.

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace dmpc
{

  inline std::uint64_t splitmix64(std::uint64_t x)
  {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  inline std::uint64_t fnv1a(std::string_view s)
  {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s)
    {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

  inline std::uint64_t derive_seed(std::uint64_t root, std::string_view purpose, std::uint64_t step)
  {
    return splitmix64(splitmix64(splitmix64(root) ^ fnv1a(purpose)) ^ step);
  }

  /// n standard-normal draws from a generator seeded with `seed`.
  inline Eigen::VectorXd standard_normal(std::mt19937_64 &gen, Eigen::Index n)
  {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i)
      z(i) = nd(gen);
    return z;
  }

} // namespace dmpc
