// Copyright 2026 The uvrepose Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "uvr/common.hpp"

#include <iostream>
#include <utility>

namespace uvr {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng stream(std::uint64_t root_seed, std::string_view name, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return Rng(splitmix64(splitmix64(root_seed ^ h) + index));
}

namespace {

WarningSink& sink() {
  static WarningSink s = [](std::string_view m) { std::cerr << "warning: " << m << '\n'; };
  return s;
}

}  // namespace

void warn(std::string_view message) { sink()(message); }

WarningSink set_warning_sink(WarningSink s) { return std::exchange(sink(), std::move(s)); }

}  // namespace uvr
