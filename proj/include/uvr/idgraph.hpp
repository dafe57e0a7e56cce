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
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "uvr/image.hpp"

namespace uvr {

struct EmbeddingRecord {
  std::string id;
  Eigen::VectorXd vector;  // unit norm
  std::string group;
  double yaw = 0.0;    // degrees
  double pitch = 0.0;  // degrees

  void validate() const;
};

/// Keeps records with |yaw| <= max_angle and |pitch| <= max_angle.
std::vector<EmbeddingRecord> filter_poses(std::span<const EmbeddingRecord> records, double max_angle = 45.0);

template <typename DerivedA, typename DerivedB>
double cosine_sim(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw InputError("cosine_sim: dimension mismatch");
  const double na = a.template cast<double>().norm();
  const double nb = b.template cast<double>().norm();
  if (na == 0.0 || nb == 0.0) throw InputError("cosine_sim: zero vector");
  const double s = a.template cast<double>().dot(b.template cast<double>()) / (na * nb);
  return std::clamp(s, -1.0, 1.0);
}

struct GraphEdge {
  int a = 0;
  int b = 0;
  double similarity = 0.0;
  bool visual = false;
  bool structural = false;
};

struct IdentityGraph {
  std::vector<std::string> nodes;
  std::vector<GraphEdge> edges;  // a < b

  bool has_edge(int a, int b) const;
};

/// Visual edge iff similarity > visual_thresh; structural edge iff same group
/// and similarity > struct_thresh. Thresholds are strict.
IdentityGraph build_graph(std::span<const EmbeddingRecord> records, double visual_thresh = 0.6,
                          double struct_thresh = 0.4);

using Cluster = std::vector<std::string>;

/// Maximal connected node sets via union-find; members sorted, clusters ordered
/// by smallest member id.
std::vector<Cluster> connected_components(const IdentityGraph& graph);

struct FiveNumber {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

struct SimilarityReport {
  std::vector<std::string> query_ids;
  std::vector<double> maxima;  // per query, max cosine similarity over references
  double bin_width = 0.02;
  std::vector<double> bin_lo;
  std::vector<long> histogram;
  FiveNumber box;
  std::vector<double> cdf_values;  // sorted maxima
  std::vector<double> cdf;         // fraction of queries <= value

  /// Fraction of queries whose maximum exceeds `threshold`, read off the CDF.
  double fraction_above(double threshold) const;
};

SimilarityReport similarity_report(std::span<const EmbeddingRecord> queries,
                                   std::span<const EmbeddingRecord> references);

/// Proxy identity embedding: unit-normalised 16 x 16 grayscale downsample.
Eigen::VectorXd proxy_embedding(const Image& face_crop);

// CSV header: id,group,yaw,pitch,e0..e{D-1}
std::vector<EmbeddingRecord> read_embeddings_csv(const std::filesystem::path& path);
void write_embeddings_csv(const std::filesystem::path& path, std::span<const EmbeddingRecord> records);

void write_clusters_json(const std::filesystem::path& path, const IdentityGraph& graph,
                         const std::vector<Cluster>& clusters);
void write_report(const std::filesystem::path& json_path, const std::filesystem::path& csv_path,
                  const SimilarityReport& report);

}  // namespace uvr
