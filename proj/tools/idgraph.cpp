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

// idgraph: identity clustering and similarity reports over embedding CSVs.
#include <iostream>

#include <CLI11.hpp>

#include "uvr/idgraph.hpp"

using namespace uvr;

int main(int argc, char** argv) {
  CLI::App app{"identity graph clustering and similarity reports"};
  app.require_subcommand(1);

  std::string embeddings, out_dir = ".";
  double visual = 0.6, structural = 0.4, max_angle = 45.0;
  auto* cluster = app.add_subcommand("cluster", "connected components of the dual-threshold graph");
  cluster->add_option("--embeddings", embeddings)->required()->check(CLI::ExistingFile);
  cluster->add_option("--visual-thresh", visual)->capture_default_str();
  cluster->add_option("--struct-thresh", structural)->capture_default_str();
  cluster->add_option("--max-angle", max_angle)->capture_default_str();
  cluster->add_option("--out", out_dir)->capture_default_str();

  std::string queries, references;
  std::vector<double> thresholds;
  auto* report = app.add_subcommand("report", "max similarity of each query over the references");
  report->add_option("--queries", queries)->required()->check(CLI::ExistingFile);
  report->add_option("--references", references)->required()->check(CLI::ExistingFile);
  report->add_option("--threshold", thresholds, "print the fraction of queries above these values");
  report->add_option("--out", out_dir)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::filesystem::path out = out_dir;
    std::filesystem::create_directories(out);
    if (*cluster) {
      const auto records = filter_poses(read_embeddings_csv(embeddings), max_angle);
      const IdentityGraph g = build_graph(records, visual, structural);
      const auto clusters = connected_components(g);
      write_clusters_json(out / "clusters.json", g, clusters);
      long nv = 0, ns = 0;
      for (const GraphEdge& e : g.edges) {
        nv += e.visual;
        ns += e.structural;
      }
      std::cout << records.size() << " nodes, " << nv << " visual and " << ns << " structural edges, "
                << clusters.size() << " clusters\n";
    } else {
      const SimilarityReport r = similarity_report(read_embeddings_csv(queries), read_embeddings_csv(references));
      write_report(out / "report.json", out / "report.csv", r);
      std::cout << "median max similarity " << r.box.median << ", max " << r.box.max << '\n';
      for (double t : thresholds) std::cout << "above " << t << ": " << r.fraction_above(t) << '\n';
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
