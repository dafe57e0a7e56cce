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

#include <doctest.h>

#include <array>
#include <set>

#include "uvr/donor.hpp"

using namespace uvr;

namespace {

Mask random_mask(Rng& rng, int size, double p) {
  std::bernoulli_distribution b(p);
  Mask m(size, size);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = b(rng);
  return m;
}

TextureMap random_texture(Rng& rng, int size) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  TextureMap t{Image(size, size, 3), random_mask(rng, size, 0.7)};
  for (Eigen::Index i = 0; i < t.pixels.data().size(); ++i) t.pixels.data()[i] = u(rng);
  t.enforce_mask();
  return t;
}

// Source is the first row of a 10 x 10 grid; a candidate holding the first k
// cells of that row has IoU k / 10 with it.
Mask prefix_row(int k) {
  Mask m = Mask::Zero(10, 10);
  for (int i = 0; i < k; ++i) m(0, i) = 1;
  return m;
}

}  // namespace

TEST_CASE("iou") {
  Mask a = Mask::Zero(2, 2), b = Mask::Zero(2, 2);
  a(0, 0) = a(0, 1) = 1;
  b(0, 0) = b(1, 0) = 1;
  CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(iou(a, a) == 1.0);
  Mask c = Mask::Zero(2, 2);
  c(1, 1) = 1;
  CHECK(iou(a, c) == 0.0);
  CHECK(iou(Mask::Zero(2, 2), Mask::Zero(2, 2)) == 0.0);
  CHECK_THROWS_AS(iou(a, Mask::Zero(3, 2)), InputError);
}

TEST_CASE("pool keeps only candidates inside the closed IoU band") {
  const Mask source = prefix_row(10);
  const std::vector<Mask> cands = {prefix_row(3), prefix_row(6), prefix_row(9)};
  Rng rng(1);
  const DonorPool pool = build_donor_pool(source, cands, {}, DonorConfig{}, rng);
  REQUIRE(pool.donors.size() == 1);
  CHECK(pool.donors[0].id == "1");
  CHECK(pool.donors[0].iou == doctest::Approx(0.6));

  const std::vector<Mask> edges = {prefix_row(4), prefix_row(8)};
  const DonorPool inclusive = build_donor_pool(source, edges, {}, DonorConfig{}, rng);
  CHECK(inclusive.donors.size() == 2);

  const std::vector<Mask> none = {prefix_row(1), prefix_row(10)};
  CHECK(build_donor_pool(source, none, {}, DonorConfig{}, rng).exhausted());
}

TEST_CASE("pool size caps at ten distinct donors") {
  const Mask source = prefix_row(10);
  std::vector<Mask> cands;
  std::vector<std::string> ids;
  for (int i = 0; i < 15; ++i) {
    cands.push_back(prefix_row(4 + i % 5));  // IoUs 0.4 .. 0.8
    ids.push_back("c" + std::to_string(i));
  }
  Rng rng(2);
  const DonorPool pool = build_donor_pool(source, cands, ids, DonorConfig{}, rng, "src");
  CHECK(pool.source_id == "src");
  CHECK(pool.donors.size() == 10);
  std::set<std::string> seen;
  for (const DonorEntry& d : pool.donors) seen.insert(d.id);
  CHECK(seen.size() == 10);
}

TEST_CASE("pool entries respect the band over random trials") {
  Rng rng(3);
  const DonorConfig cfg;
  for (int trial = 0; trial < 1000; ++trial) {
    const Mask source = random_mask(rng, 8, 0.5);
    std::vector<Mask> cands;
    for (int i = 0; i < 12; ++i) cands.push_back(random_mask(rng, 8, 0.5));
    const DonorPool pool = build_donor_pool(source, cands, {}, cfg, rng);
    CHECK(pool.donors.size() <= static_cast<size_t>(cfg.pool_size));
    for (const DonorEntry& d : pool.donors) {
      CHECK(d.iou >= cfg.iou_lo);
      CHECK(d.iou <= cfg.iou_hi);
      CHECK(d.iou == iou(source, cands[std::stoul(d.id)]));
    }
  }
}

TEST_CASE("pool sampling is uniform over qualifying candidates") {
  const Mask source = prefix_row(10);
  std::vector<Mask> cands(20, prefix_row(5));
  DonorConfig cfg;
  cfg.pool_size = 5;
  Rng rng(4);
  std::array<int, 20> hits{};
  const int trials = 4000;
  for (int t = 0; t < trials; ++t)
    for (const DonorEntry& d : build_donor_pool(source, cands, {}, cfg, rng).donors) ++hits[std::stoul(d.id)];
  // Each candidate is chosen with probability 1/4.
  const double mean = trials * 0.25, sd = std::sqrt(trials * 0.25 * 0.75);
  for (int h : hits) CHECK(std::abs(h - mean) < 4.0 * sd);
}

TEST_CASE("apply_donor") {
  Rng rng(5);
  const TextureMap t = random_texture(rng, 16);
  CHECK(apply_donor(t, Mask::Ones(16, 16)) == t);
  const TextureMap z = apply_donor(t, Mask::Zero(16, 16));
  CHECK(z.mask.cast<int>().sum() == 0);
  CHECK(z.pixels.data().abs().maxCoeff() == 0.0f);
  CHECK_THROWS_AS(apply_donor(t, Mask::Ones(8, 8)), InputError);

  const Mask m = random_mask(rng, 16, 0.5);
  const TextureMap once = apply_donor(t, m);
  CHECK(apply_donor(once, m) == once);
  CHECK(((once.mask > 0) <= (t.mask > 0)).all());
  CHECK((once.mask == (t.mask * m)).all());
}

TEST_CASE("donor intersection commutes bit-exactly") {
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const TextureMap t = random_texture(rng, 16);
    const Mask a = random_mask(rng, 16, 0.6), b = random_mask(rng, 16, 0.6);
    CHECK(apply_donor(apply_donor(t, a), b) == apply_donor(apply_donor(t, b), a));
  }
}

TEST_CASE("random patch masking") {
  Rng rng(7);
  TextureMap full{Image(256, 256, 3, 0.5f), Mask::Ones(256, 256)};
  CHECK(random_patch_mask(full, rng, 0).texture == full);
  CHECK_THROWS_AS(random_patch_mask(full, rng, 6, 300), InputError);

  bool saw_six = false;
  for (int trial = 0; trial < 200; ++trial) {
    const PatchMasking pm = random_patch_mask(full, rng, 6, 64);
    CHECK(pm.requested >= 1);
    CHECK(pm.requested <= 6);
    CHECK(pm.patches.size() <= static_cast<size_t>(pm.requested));
    for (size_t i = 0; i < pm.patches.size(); ++i)
      for (size_t j = i + 1; j < pm.patches.size(); ++j) CHECK_FALSE(pm.patches[i].overlaps(pm.patches[j]));
    const long removed = 256L * 256 - pm.texture.mask.cast<long>().sum();
    CHECK(removed == static_cast<long>(pm.patches.size()) * 64 * 64);
    if (pm.patches.size() == 6) saw_six = true;
    for (int c = 0; c < 3; ++c)
      CHECK((pm.texture.pixels.plane(c) * (1 - pm.texture.mask).cast<float>()).abs().maxCoeff() == 0.0f);
  }
  CHECK(saw_six);

  // A partial mask loses exactly the patch texels it had.
  const TextureMap part = random_texture(rng, 256);
  const PatchMasking pm = random_patch_mask(part, rng, 6, 64);
  Mask inside = Mask::Zero(256, 256);
  for (const Patch& p : pm.patches) inside.block(p.y, p.x, p.size, p.size).setOnes();
  CHECK((pm.texture.mask == part.mask * (1 - inside)).all());
}

TEST_CASE("dropout branches") {
  Rng rng(8);
  DropoutProbs only_all{1.0, 0.0, 0.0, 0.0};
  for (int i = 0; i < 100; ++i) CHECK(sample_dropout(rng, only_all) == DropoutDecision::kDropAll);
  DropoutProbs too_much{0.5, 0.3, 0.3, 0.0};
  CHECK_THROWS_AS(sample_dropout(rng, too_much), ConfigError);
  CHECK(DropoutProbs{}.keep_all() == doctest::Approx(0.25));

  Rng a(9), b(9);
  for (int i = 0; i < 1000; ++i) CHECK(sample_dropout(a) == sample_dropout(b));

  const int n = 100000;
  std::array<int, kDropoutBranches> hits{};
  Rng r(10);
  for (int i = 0; i < n; ++i) ++hits[static_cast<int>(sample_dropout(r))];
  const std::array<double, kDropoutBranches> p = {0.05, 0.3, 0.3, 0.1, 0.25};
  for (int k = 0; k < kDropoutBranches; ++k)
    CHECK(std::abs(hits[k] - n * p[k]) <= 3.0 * std::sqrt(n * p[k] * (1.0 - p[k])));
}
