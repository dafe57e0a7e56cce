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

// uvrepose: dataset synthesis, training, sampling, personalization,
// evaluation, the leakage probe, the masking ablation and identity clustering.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "uvr/experiment.hpp"
#include "uvr/idgraph.hpp"

namespace fs = std::filesystem;
using namespace uvr;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "run";
  std::string data;

  ExperimentConfig experiment() const {
    ExperimentConfig c = config.empty() ? ExperimentConfig{} : load_experiment_config(config);
    if (seed) c.seed = *seed;
    return c;
  }
  fs::path data_dir() const { return data.empty() ? fs::path(out) / "data" : fs::path(data); }
  fs::path checkpoint(const std::string& given) const {
    return given.empty() ? fs::path(out) / "ckpt" / "model.uvfm" : fs::path(given);
  }
};

// Network shape comes from the checkpoint, everything else from the config.
ExperimentConfig with_net(ExperimentConfig c, const ConvNetConfig& net) {
  c.resolution = net.resolution;
  c.width = net.width;
  return c;
}

void print_report(const MetricReport& r) {
  for (const std::string& col : r.columns()) {
    const auto s = r.summary(col);
    std::cout << col << " mean " << format_metric(s.mean) << " over " << s.finite << " samples";
    if (s.infinite) std::cout << " (" << s.infinite << " infinite)";
    std::cout << '\n';
  }
}

Json probe_json(const ProbeResult& r) {
  return {{"accuracy", r.accuracy}, {"chance", r.chance},    {"sigma", r.sigma},
          {"train", r.train_size},  {"test", r.test_size},   {"buckets", r.buckets}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UV-space human reposing at toy scale"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "root seed, overrides the config");
  app.add_option("--out", g.out, "run directory")->capture_default_str();
  app.add_option("--data", g.data, "dataset directory (default <out>/data)");

  auto* gen = app.add_subcommand("gen-data", "synthesize identities, renders, masks and donor pools");

  auto* train = app.add_subcommand("train", "train, checkpoint and evaluate one configuration");

  std::string ckpt, adapter_path;
  auto* sample_cmd = app.add_subcommand("sample", "generate every held-out pose");
  sample_cmd->add_option("--checkpoint", ckpt, "model checkpoint (default <out>/ckpt/model.uvfm)");
  sample_cmd->add_option("--adapter", adapter_path, "personalization adapter");

  std::string identity;
  int ft_iters = 5000, ft_batch = 4, ft_rank = 4;
  bool regularize = false;
  auto* ft = app.add_subcommand("finetune", "fit a low-rank adapter to one identity's face region");
  ft->add_option("--checkpoint", ckpt, "base model checkpoint");
  ft->add_option("--identity", identity, "paired identity to personalize")->required();
  ft->add_option("--iters", ft_iters)->capture_default_str();
  ft->add_option("--batch", ft_batch)->capture_default_str();
  ft->add_option("--rank", ft_rank)->capture_default_str();
  ft->add_flag("--regularize", regularize, "mix other identities' paired samples into one batch slot");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on the held-out poses");
  eval->add_option("--checkpoint", ckpt, "model checkpoint");
  eval->add_option("--adapter", adapter_path, "personalization adapter");

  std::string arm = "all";
  bool shuffle = false;
  auto* probe = app.add_subcommand("probe", "pose-bucket probe on visibility masks");
  probe->add_option("--arm", arm, "raw, donor, patch or all")->capture_default_str();
  probe->add_flag("--shuffle", shuffle, "shuffled-label control");

  auto* ablate = app.add_subcommand("ablate", "donor masking versus random patch masking");

  std::string embeddings;
  double visual = 0.6, structural = 0.4, max_angle = 45.0;
  auto* cluster = app.add_subcommand("cluster", "identity clustering over face embeddings");
  cluster->add_option("--embeddings", embeddings, "embedding CSV (default: proxy embeddings of the dataset)");
  cluster->add_option("--visual-thresh", visual)->capture_default_str();
  cluster->add_option("--struct-thresh", structural)->capture_default_str();
  cluster->add_option("--max-angle", max_angle)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out = g.out;
    const fs::path reports = out / "reports";

    if (*gen) {
      const ExperimentConfig c = g.experiment();
      const Dataset ds = gen_dataset(c.data, c.seed, g.data_dir());
      std::cout << "wrote " << ds.training_samples().size() << " training and " << ds.eval.samples.size()
                << " held-out samples to " << g.data_dir().string() << '\n';
    } else if (*train) {
      const ExperimentResult r = run_experiment(g.experiment(), out, g.data.empty() ? fs::path{} : g.data_dir());
      std::cout << "checkpoint " << r.checkpoint.string() << '\n';
      print_report(r.report);
    } else if (*sample_cmd || *eval) {
      const LoadedModel m = load_model(g.checkpoint(ckpt));
      const ExperimentConfig c = with_net(g.experiment(), m.net.config());
      const Dataset ds = load_dataset(g.data_dir());
      std::optional<AdapterParams<float>> ad;
      if (!adapter_path.empty()) ad = load_adapter(adapter_path, m.net);
      std::map<std::string, Image> images;
      const MetricReport r = evaluate(m.net, c, ds, ad ? &*ad : nullptr, &images);
      if (*sample_cmd) {
        fs::create_directories(out / "samples");
        for (const auto& [id, img] : images) write_png(out / "samples" / (id + ".png"), img);
        std::cout << "wrote " << images.size() << " samples to " << (out / "samples").string() << '\n';
      } else {
        fs::create_directories(reports);
        r.write_csv(reports / "metrics.csv");
        r.write_json(reports / "summary.json");
        print_report(r);
      }
    } else if (*ft) {
      const LoadedModel m = load_model(g.checkpoint(ckpt));
      const ExperimentConfig c = with_net(g.experiment(), m.net.config());
      const Dataset ds = load_dataset(g.data_dir());
      const PreparedSubject subject =
          prepare_subject(subject_from_dataset(ds, identity), c.resolution, c.data.raster);
      std::vector<RegularizationSample> reg;
      if (regularize) {
        const Mesh rest = build_body();
        for (const SampleRecord& s : ds.paired.samples) {
          if (s.identity == identity) continue;
          const PreparedView ref = prepare_view(load_sample(ds, s), rest, c.resolution, c.data.raster);
          const PreparedView tgt =
              prepare_view(load_sample(ds, *ds.paired.find(*s.partner)), rest, c.resolution, c.data.raster);
          ConditionSet cs;
          cs.texture = ref.texture;
          cs.pose_render = tgt.pose_render;
          cs.face_crop = ref.face_crop;
          reg.push_back({encode_condition(cs, c.resolution), tgt.target});
        }
      }
      FinetuneConfig fc;
      fc.iters = ft_iters;
      fc.batch = ft_batch;
      fc.optimizer = c.optimizer;
      fc.adapter.rank = ft_rank;
      fc.adapter.alpha = ft_rank;
      Rng rng = stream(c.seed, "finetune");
      const FinetuneResult res = finetune(m.net, subject, fc, rng, reg);
      fs::create_directories(out / "ckpt");
      fs::create_directories(reports);
      const fs::path path = out / "ckpt" / (identity + ".uvla");
      save_adapter(path, res.adapter, m.net.config());
      std::ofstream log(reports / ("finetune_" + identity + ".csv"), std::ios::binary);
      log << "iter,loss\n";
      for (size_t i = 0; i < res.losses.size(); ++i) log << i << ',' << format_metric(res.losses[i]) << '\n';
      std::cout << "adapter " << path.string() << '\n';
    } else if (*probe) {
      const ExperimentConfig c = g.experiment();
      const Dataset ds = load_dataset(g.data_dir());
      ProbeConfig pc;
      pc.shuffle_labels = shuffle;
      std::vector<ProbeArm> arms;
      if (arm == "all") arms = {ProbeArm::kRaw, ProbeArm::kDonor, ProbeArm::kPatch};
      else if (arm == "raw") arms = {ProbeArm::kRaw};
      else if (arm == "donor") arms = {ProbeArm::kDonor};
      else if (arm == "patch") arms = {ProbeArm::kPatch};
      else throw ConfigError("unknown probe arm '" + arm + "'");
      Json j;
      for (ProbeArm a : arms) {
        const ProbeResult r = leakage_probe(ds, a, c.seed, pc, c.patch);
        j[std::string(probe_arm_name(a))] = probe_json(r);
        std::cout << probe_arm_name(a) << " accuracy " << format_metric(r.accuracy) << " (chance "
                  << format_metric(r.chance) << ", sd " << format_metric(r.sigma) << ", " << r.test_size
                  << " held out)\n";
      }
      fs::create_directories(reports);
      write_json(reports / (shuffle ? "probe_shuffled.json" : "probe.json"), j);
    } else if (*ablate) {
      const AblationResult r =
          ablation_patch_vs_donor(g.experiment(), out, g.data.empty() ? fs::path{} : g.data_dir());
      std::cout << "donor arm\n";
      print_report(r.donor.report);
      std::cout << "patch arm\n";
      print_report(r.patch.report);
      std::cout << "probe accuracy donor " << format_metric(r.donor_probe.accuracy) << " patch "
                << format_metric(r.patch_probe.accuracy) << '\n';
    } else if (*cluster) {
      std::vector<EmbeddingRecord> records;
      if (!embeddings.empty()) {
        records = read_embeddings_csv(embeddings);
      } else {
        const Dataset ds = load_dataset(g.data_dir());
        const Mesh rest = build_body();
        std::vector<SampleRecord> all = ds.training_samples();
        all.insert(all.end(), ds.eval.samples.begin(), ds.eval.samples.end());
        for (const SampleRecord& s : all) {
          const LoadedSample l = load_sample(ds, s);
          const Mesh posed = pose_body(rest, l.pose);
          const Image crop = crop_face(l.image, face_box(posed, l.camera), 64);
          records.push_back({s.id, proxy_embedding(crop), s.identity, l.pose.rotation.y() * 180.0 / 3.141592653589793,
                             l.pose.rotation.x() * 180.0 / 3.141592653589793});
        }
        fs::create_directories(reports);
        write_embeddings_csv(reports / "embeddings.csv", records);
      }
      const std::vector<EmbeddingRecord> kept = filter_poses(records, max_angle);
      const IdentityGraph graph = build_graph(kept, visual, structural);
      const std::vector<Cluster> clusters = connected_components(graph);
      fs::create_directories(reports);
      write_clusters_json(reports / "clusters.json", graph, clusters);
      std::cout << kept.size() << " of " << records.size() << " embeddings kept, " << graph.edges.size()
                << " edges, " << clusters.size() << " clusters\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
