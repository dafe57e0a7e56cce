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
#include "uvr/idgraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "uvr/metrics.hpp"

namespace uvr {

void EmbeddingRecord::validate() const {
  const double n = vector.norm();
  if (!(n >= 1.0 - 1e-4 && n <= 1.0 + 1e-4)) {
    throw InputError("embedding '" + id + "' has norm " + std::to_string(n) + ", expected unit norm");
  }
}

std::vector<EmbeddingRecord> filter_poses(std::span<const EmbeddingRecord> records, double max_angle) {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : records)
    if (std::abs(r.yaw) <= max_angle && std::abs(r.pitch) <= max_angle) out.push_back(r);
  return out;
}

bool IdentityGraph::has_edge(int a, int b) const {
  if (a > b) std::swap(a, b);
  return std::any_of(edges.begin(), edges.end(), [&](const GraphEdge& e) { return e.a == a && e.b == b; });
}

IdentityGraph build_graph(std::span<const EmbeddingRecord> records, double visual_thresh, double struct_thresh) {
  IdentityGraph g;
  const size_t n = records.size();
  for (const auto& r : records) g.nodes.push_back(r.id);
  if (n == 0) return g;
  const Eigen::Index dim = records[0].vector.size();
  Eigen::MatrixXd e(dim, static_cast<Eigen::Index>(n));
  for (size_t i = 0; i < n; ++i) {
    if (records[i].vector.size() != dim) throw InputError("embedding '" + records[i].id + "' has a different dimension");
    const double norm = records[i].vector.norm();
    if (norm == 0.0) throw InputError("embedding '" + records[i].id + "' is zero");
    e.col(static_cast<Eigen::Index>(i)) = records[i].vector / norm;
  }
  const Eigen::MatrixXd sim = e.transpose() * e;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const double s = std::clamp(sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), -1.0, 1.0);
      const bool visual = s > visual_thresh;
      const bool structural = records[i].group == records[j].group && s > struct_thresh;
      if (visual || structural) g.edges.push_back({static_cast<int>(i), static_cast<int>(j), s, visual, structural});
    }
  }
  return g;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

std::vector<Cluster> connected_components(const IdentityGraph& graph) {
  UnionFind uf(graph.nodes.size());
  for (const auto& e : graph.edges) uf.unite(e.a, e.b);
  std::map<int, Cluster> groups;
  for (size_t i = 0; i < graph.nodes.size(); ++i) groups[uf.find(static_cast<int>(i))].push_back(graph.nodes[i]);
  std::vector<Cluster> out;
  for (auto& [root, members] : groups) {
    std::sort(members.begin(), members.end());
    out.push_back(std::move(members));
  }
  std::sort(out.begin(), out.end(), [](const Cluster& a, const Cluster& b) { return a.front() < b.front(); });
  return out;
}

double SimilarityReport::fraction_above(double threshold) const {
  if (cdf_values.empty()) return 0.0;
  // Last sorted value <= threshold; everything after it exceeds the threshold.
  const auto it = std::upper_bound(cdf_values.begin(), cdf_values.end(), threshold);
  if (it == cdf_values.begin()) return 1.0;
  return 1.0 - cdf[static_cast<size_t>(it - cdf_values.begin()) - 1];
}

namespace {

double quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

SimilarityReport similarity_report(std::span<const EmbeddingRecord> queries,
                                   std::span<const EmbeddingRecord> references) {
  if (references.empty()) throw InputError("similarity_report: empty reference set");
  SimilarityReport rep;
  for (const auto& q : queries) {
    double best = -1.0;
    for (const auto& r : references) best = std::max(best, cosine_sim(q.vector, r.vector));
    rep.query_ids.push_back(q.id);
    rep.maxima.push_back(best);
  }
  const int bins = static_cast<int>(std::lround(2.0 / rep.bin_width));
  rep.histogram.assign(static_cast<size_t>(bins), 0);
  for (int b = 0; b < bins; ++b) rep.bin_lo.push_back(-1.0 + b * rep.bin_width);
  for (double m : rep.maxima) {
    const int b = std::clamp(static_cast<int>(std::floor((m + 1.0) / rep.bin_width)), 0, bins - 1);
    ++rep.histogram[static_cast<size_t>(b)];
  }
  rep.cdf_values = rep.maxima;
  std::sort(rep.cdf_values.begin(), rep.cdf_values.end());
  const size_t n = rep.cdf_values.size();
  for (size_t i = 0; i < n; ++i) {
    // Ties share the fraction at their last occurrence.
    size_t last = i;
    while (last + 1 < n && rep.cdf_values[last + 1] == rep.cdf_values[i]) ++last;
    rep.cdf.push_back(static_cast<double>(last + 1) / static_cast<double>(n));
  }
  if (n > 0) {
    rep.box = {rep.cdf_values.front(), quantile(rep.cdf_values, 0.25), quantile(rep.cdf_values, 0.5),
               quantile(rep.cdf_values, 0.75), rep.cdf_values.back()};
  }
  return rep;
}

Eigen::VectorXd proxy_embedding(const Image& face_crop) {
  if (face_crop.empty()) throw InputError("proxy_embedding: empty face crop");
  const Image small = resize_area(face_crop, 16, 16);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(256);
  for (int c = 0; c < small.channels(); ++c)
    v += Eigen::Map<const Eigen::VectorXf>(small.plane(c).data(), 256).cast<double>();
  v /= small.channels();
  const double n = v.norm();
  if (n == 0.0) throw InputError("proxy_embedding: face crop is black");
  return v / n;
}

std::vector<EmbeddingRecord> read_embeddings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 5 || header[0] != "id" || header[1] != "group" || header[2] != "yaw" || header[3] != "pitch") {
    throw InputError(path.string() + ": header must be id,group,yaw,pitch,e0..");
  }
  const size_t dim = header.size() - 4;
  std::vector<EmbeddingRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != header.size()) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(header.size()) +
                       " fields");
    }
    EmbeddingRecord r;
    r.id = cells[0];
    r.group = cells[1];
    try {
      r.yaw = std::stod(cells[2]);
      r.pitch = std::stod(cells[3]);
      r.vector.resize(static_cast<Eigen::Index>(dim));
      for (size_t d = 0; d < dim; ++d) r.vector[static_cast<Eigen::Index>(d)] = std::stod(cells[4 + d]);
    } catch (const std::logic_error&) {
      throw InputError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
    r.validate();
    out.push_back(std::move(r));
  }
  return out;
}

void write_embeddings_csv(const std::filesystem::path& path, std::span<const EmbeddingRecord> records) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  const Eigen::Index dim = records.empty() ? 0 : records[0].vector.size();
  out << "id,group,yaw,pitch";
  for (Eigen::Index d = 0; d < dim; ++d) out << ",e" << d;
  out << '\n';
  for (const auto& r : records) {
    out << r.id << ',' << r.group << ',' << format_metric(r.yaw) << ',' << format_metric(r.pitch);
    for (Eigen::Index d = 0; d < r.vector.size(); ++d) out << ',' << format_metric(r.vector[d]);
    out << '\n';
  }
}

void write_clusters_json(const std::filesystem::path& path, const IdentityGraph& graph,
                         const std::vector<Cluster>& clusters) {
  nlohmann::ordered_json j;
  j["nodes"] = graph.nodes.size();
  long visual = 0, structural = 0;
  for (const auto& e : graph.edges) {
    visual += e.visual;
    structural += e.structural;
  }
  j["edges"] = graph.edges.size();
  j["visual_edges"] = visual;
  j["structural_edges"] = structural;
  j["components"] = clusters.size();
  j["clusters"] = clusters;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_report(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                  const SimilarityReport& r) {
  nlohmann::ordered_json j;
  j["queries"] = r.maxima.size();
  j["bin_width"] = r.bin_width;
  j["box"] = {{"min", r.box.min}, {"q1", r.box.q1}, {"median", r.box.median}, {"q3", r.box.q3}, {"max", r.box.max}};
  for (double t : {0.3, 0.4, 0.5, 0.6}) j["fraction_above"][format_metric(t)] = r.fraction_above(t);
  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << j.dump(2) << '\n';

  std::ofstream cs(csv_path);
  if (!cs) throw IoError("cannot write " + csv_path.string());
  cs << "kind,x,y\n";
  for (size_t b = 0; b < r.histogram.size(); ++b) cs << "hist," << format_metric(r.bin_lo[b]) << ',' << r.histogram[b] << '\n';
  for (size_t i = 0; i < r.cdf.size(); ++i) cs << "cdf," << format_metric(r.cdf_values[i]) << ',' << format_metric(r.cdf[i]) << '\n';
}

}  // namespace uvr
