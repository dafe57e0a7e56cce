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

#include <algorithm>
#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "uvr/idgraph.hpp"

using namespace uvr;
namespace fs = std::filesystem;

namespace {

EmbeddingRecord rec(std::string id, Eigen::VectorXd v, std::string group = "g", double yaw = 0, double pitch = 0) {
  return {std::move(id), v.normalized(), std::move(group), yaw, pitch};
}

// Unit vector at angle acos(s) from e0 in the (e0, e1) plane.
Eigen::VectorXd at_cos(double s, int dim = 4) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  v[0] = s;
  v[1] = std::sqrt(1.0 - s * s);
  return v;
}

Eigen::VectorXd axis(int i, int dim = 4) { return Eigen::VectorXd::Unit(dim, i); }

}  // namespace

TEST_CASE("pose filter") {
  std::vector<EmbeddingRecord> rs = {rec("a", axis(0), "g", 44.9, 0), rec("b", axis(0), "g", 46, 0),
                                     rec("c", axis(0), "g", 0, -45), rec("d", axis(0), "g", -10, 45.1)};
  const auto kept = filter_poses(rs);
  REQUIRE(kept.size() == 2);
  CHECK(kept[0].id == "a");
  CHECK(kept[1].id == "c");
  CHECK(filter_poses(std::span<const EmbeddingRecord>{}).empty());
}

TEST_CASE("cosine similarity") {
  const Eigen::Vector3d a(1, 0, 0);
  CHECK(cosine_sim(a, a) == 1.0);
  CHECK(cosine_sim(a, -a) == -1.0);
  CHECK(cosine_sim(a, Eigen::Vector3d(0, 1, 0)) == 0.0);
  CHECK_THROWS_AS(cosine_sim(a, Eigen::Vector3d::Zero()), InputError);
  CHECK_THROWS_AS(cosine_sim(a, Eigen::VectorXd::Ones(2)), InputError);
}

TEST_CASE("edge rules") {
  // Similarities to the first node: 0.7 (visual), 0.5 same group
  // (structural), 0.5 other group (none), 0.3 same group (none).
  std::vector<EmbeddingRecord> rs = {rec("q", axis(0), "g"), rec("v", at_cos(0.7), "h"), rec("s", at_cos(0.5), "g"),
                                     rec("o", at_cos(0.5), "h"), rec("w", at_cos(0.3), "g")};
  // Keep the partners far from each other so only edges to "q" matter.
  rs[2].vector = (0.5 * axis(0) + std::sqrt(0.75) * axis(2)).normalized();
  rs[3].vector = (0.5 * axis(0) + std::sqrt(0.75) * axis(3)).normalized();
  rs[4].vector = (0.3 * axis(0) - std::sqrt(1 - 0.09) * axis(1)).normalized();
  const IdentityGraph g = build_graph(rs);
  CHECK(g.has_edge(0, 1));
  CHECK(g.has_edge(2, 0));
  CHECK_FALSE(g.has_edge(0, 3));
  CHECK_FALSE(g.has_edge(0, 4));
  for (const GraphEdge& e : g.edges) {
    CHECK(e.a < e.b);
    if (e.a == 0 && e.b == 1) CHECK((e.visual && !e.structural));
    if (e.a == 0 && e.b == 2) CHECK((!e.visual && e.structural));
  }

  // Strict thresholds: a similarity equal to the threshold is not an edge.
  const std::vector<EmbeddingRecord> pair = {rec("a", axis(0), "x"), rec("b", axis(1), "y")};
  CHECK(build_graph(pair, 0.0, 0.0).edges.empty());
  CHECK(build_graph(pair, -0.01, 0.0).edges.size() == 1);

  std::vector<EmbeddingRecord> swapped(rs.rbegin(), rs.rend());
  const IdentityGraph h = build_graph(swapped);
  CHECK(h.edges.size() == g.edges.size());
  for (const GraphEdge& e : g.edges) CHECK(h.has_edge(4 - e.a, 4 - e.b));
  CHECK(build_graph(std::span<const EmbeddingRecord>{}).nodes.empty());
}

TEST_CASE("connected components") {
  std::vector<EmbeddingRecord> iso = {rec("c", axis(0)), rec("a", axis(1)), rec("b", axis(2))};
  const auto single = connected_components(build_graph(iso));
  REQUIRE(single.size() == 3);
  CHECK(single[0] == Cluster{"a"});
  CHECK(single[2] == Cluster{"c"});

  // Chain a-b-c-d where only neighbours clear the visual threshold.
  std::vector<EmbeddingRecord> chain;
  for (int i = 0; i < 4; ++i) {
    const double th = i * 0.6;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(4);
    v[0] = std::cos(th);
    v[1] = std::sin(th);
    chain.push_back(rec(std::string(1, static_cast<char>('a' + i)), v, "g" + std::to_string(i)));
  }
  const IdentityGraph cg = build_graph(chain, 0.7, 0.9);
  CHECK(cg.edges.size() == 3);
  const auto one = connected_components(cg);
  REQUIRE(one.size() == 1);
  CHECK(one[0] == Cluster{"a", "b", "c", "d"});

  Rng rng(1);
  auto planted = oracle::planted_partition(4, 6, 0.8, 0.2, rng);
  std::shuffle(planted.begin(), planted.end(), rng);
  const auto comps = connected_components(build_graph(planted));
  REQUIRE(comps.size() == 4);
  for (const Cluster& c : comps) {
    CHECK(c.size() == 6);
    for (const std::string& id : c) CHECK(id.substr(0, 3) == c.front().substr(0, 3));
  }
}

TEST_CASE("similarity report") {
  Rng rng(2);
  std::vector<EmbeddingRecord> refs;
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    Eigen::VectorXd v(8);
    for (int d = 0; d < 8; ++d) v[d] = n(rng);
    refs.push_back(rec("r" + std::to_string(i), v));
  }
  // Queries drawn from the references have maximum similarity 1.
  const std::vector<EmbeddingRecord> subset(refs.begin(), refs.begin() + 5);
  const SimilarityReport self = similarity_report(subset, refs);
  for (double m : self.maxima) CHECK(m == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.fraction_above(0.99) == 1.0);

  const std::vector<EmbeddingRecord> orth_q = {rec("q", axis(0, 2))};
  const std::vector<EmbeddingRecord> orth_r = {rec("r", axis(1, 2))};
  CHECK(similarity_report(orth_q, orth_r).maxima[0] == 0.0);
  CHECK_THROWS_AS(similarity_report(orth_q, std::span<const EmbeddingRecord>{}), InputError);

  std::vector<EmbeddingRecord> queries;
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd v(8);
    for (int d = 0; d < 8; ++d) v[d] = n(rng);
    queries.push_back(rec("q" + std::to_string(i), v));
  }
  const SimilarityReport rep = similarity_report(queries, refs);
  long total = 0;
  for (long h : rep.histogram) total += h;
  CHECK(total == 50);
  CHECK(rep.box.min <= rep.box.q1);
  CHECK(rep.box.q1 <= rep.box.median);
  CHECK(rep.box.median <= rep.box.q3);
  CHECK(rep.box.q3 <= rep.box.max);
  for (double t : {-0.2, 0.1, 0.3, 0.5, 0.7, rep.maxima[3]}) {
    long above = 0;
    for (const auto& q : queries) {
      double best = -1;
      for (const auto& r : refs) best = std::max(best, q.vector.dot(r.vector));
      above += best > t;
    }
    CHECK(rep.fraction_above(t) == doctest::Approx(above / 50.0).epsilon(1e-12));
  }

  std::vector<EmbeddingRecord> shuffled = queries;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  const SimilarityReport rep2 = similarity_report(shuffled, refs);
  CHECK(rep2.cdf_values == rep.cdf_values);
  CHECK(rep2.histogram == rep.histogram);
}

TEST_CASE("embedding csv round trip") {
  Rng rng(3);
  const auto rs = oracle::planted_partition(2, 3, 0.8, 0.2, rng);
  const fs::path p = fs::temp_directory_path() / "uvr_test_embeddings.csv";
  write_embeddings_csv(p, rs);
  const auto back = read_embeddings_csv(p);
  REQUIRE(back.size() == rs.size());
  for (size_t i = 0; i < rs.size(); ++i) {
    CHECK(back[i].id == rs[i].id);
    CHECK(back[i].group == rs[i].group);
    CHECK((back[i].vector.array() == rs[i].vector.array()).all());
  }
  fs::remove(p);
  CHECK_THROWS_AS(read_embeddings_csv(fs::temp_directory_path() / "uvr_no_such.csv"), IoError);
}

TEST_CASE("proxy embedding") {
  Rng rng(4);
  Image img(32, 32, 3, 0.0f);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (Eigen::Index i = 0; i < img.data().size(); ++i) img.data()[i] = u(rng);
  const Eigen::VectorXd e = proxy_embedding(img);
  CHECK(e.size() == 256);
  CHECK(e.norm() == doctest::Approx(1.0));
  Image brighter = img;
  brighter.data() *= 0.5f;
  CHECK(cosine_sim(e, proxy_embedding(brighter)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(proxy_embedding(Image(16, 16, 3, 0.0f)), InputError);
}
