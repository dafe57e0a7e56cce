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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uvr/condition.hpp"
#include "uvr/dataset.hpp"
#include "uvr/metrics.hpp"
#include "uvr/personalize.hpp"

namespace uvr {

enum class DataMix { kUnpairedOnly, kPairedOnly, kHybrid };
DataMix data_mix_from_name(std::string_view name);
std::string_view data_mix_name(DataMix m);

enum class Masking { kDonor, kPatch };
Masking masking_from_name(std::string_view name);
std::string_view masking_name(Masking m);

struct PatchConfig {
  int max_patches = 6;
  int patch_size = 64;  // texels of the UV atlas
};

struct SamplerConfig {
  int steps = 50;
  Scheme scheme = Scheme::kEuler;
};

struct ExperimentConfig {
  DataMix mix = DataMix::kHybrid;
  std::optional<double> paired_ratio;  // share of paired steps; unset = proportional to manifest sizes
  int steps = 1000;
  int batch = 8;
  int resolution = 64;
  int width = 16;
  Masking masking = Masking::kDonor;
  PatchConfig patch;
  DropoutProbs dropout;
  SamplerConfig sampler;
  AdamWConfig optimizer;
  DataConfig data;  // also holds the raster and donor settings
  int checkpoint_every = 0;  // 0 = final checkpoint only
  std::uint64_t seed = 0;

  void validate() const;
  ConvNetConfig net_config() const;
};

/// Strict parse: unknown keys anywhere are ConfigErrors. Missing keys keep
/// their defaults.
ExperimentConfig experiment_config_from_json(const Json& j);
Json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// ---- training ------------------------------------------------------------------

/// One training or reference view with everything the branches need.
struct PreparedView {
  std::string id;
  std::string identity;
  int bucket = 0;
  Mesh posed;
  Camera camera;
  TextureMap texture;  // T_p at the raster texture size
  Image pose_render;   // at R
  Image face_crop;     // at R
  Eigen::VectorXf target;  // image at R, flattened
  DonorPool pool;
};

PreparedView prepare_view(const LoadedSample& s, const Mesh& rest, int resolution, const RasterConfig& raster);

enum class Branch { kPaired, kSingle };
std::string_view branch_name(Branch b);

struct LogRow {
  long step = 0;
  Branch branch = Branch::kSingle;
  DropoutDecision dropout = DropoutDecision::kKeepAll;
  double loss = 0.0;
  int face_crops = 0;  // face-crop conditions fed to the network this step
};

void write_training_log(const std::filesystem::path& path, const std::vector<LogRow>& log);

/// Paired steps of step k under share rho follow floor((k+1) rho) > floor(k rho).
bool paired_step(long step, double rho);

struct TrainedModel {
  ConvVelocityNet<float> net;
  AdamW<float> optimizer;
  std::vector<LogRow> log;
};

/// Trains a fresh network on `ds`. Checkpoints go to `ckpt_dir` when it is
/// non-empty. A NumericError names the step and the last good checkpoint.
TrainedModel train_model(const ExperimentConfig& config, const Dataset& ds, const std::filesystem::path& ckpt_dir = {});

// ---- evaluation ----------------------------------------------------------------

/// Generates every held-out pose from its reference view and scores psnr,
/// ssim, their foreground-masked variants and the proxy face similarity.
/// Generated images are kept in `generated` when it is given.
MetricReport evaluate(const ConvVelocityNet<float>& net, const ExperimentConfig& config, const Dataset& ds,
                      const AdapterParams<float>* adapter = nullptr,
                      std::map<std::string, Image>* generated = nullptr);

struct ExperimentResult {
  MetricReport report;
  std::vector<LogRow> log;
  std::filesystem::path checkpoint;
};

/// Trains, checkpoints and evaluates. Writes reports/metrics.csv,
/// reports/summary.json, reports/train_log.csv and ckpt/model.uvfm under
/// run_dir; generates the dataset into run_dir/data unless data_dir already
/// holds one.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                std::filesystem::path data_dir = {});

// ---- pose leakage probe ------------------------------------------------------

enum class ProbeArm { kRaw, kDonor, kPatch };
std::string_view probe_arm_name(ProbeArm a);

struct ProbeResult {
  double accuracy = 0.0;
  double chance = 0.0;  // sum_k p_train(k) p_test(k)
  double sigma = 0.0;   // binomial sd of accuracy at chance
  int train_size = 0;
  int test_size = 0;
  int buckets = 0;
};

struct ProbeConfig {
  int feature_size = 32;
  double test_fraction = 0.3;
  int epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  bool shuffle_labels = false;
};

/// Linear softmax classifier predicting the pose bucket from the downsampled
/// visibility mask of each training sample: raw, intersected with a donor mask
/// from the sample's pool, or patch-masked.
ProbeResult leakage_probe(const Dataset& ds, ProbeArm arm, std::uint64_t seed, const ProbeConfig& config = {},
                          const PatchConfig& patch = {});
ProbeResult leakage_probe(const std::vector<Mask>& masks, const std::vector<int>& labels, std::uint64_t seed,
                          const ProbeConfig& config = {});

// ---- ablation ------------------------------------------------------------------

struct AblationResult {
  ExperimentResult donor;
  ExperimentResult patch;
  ProbeResult donor_probe;
  ProbeResult patch_probe;
};

/// Runs the experiment under donor and under patch masking with identical
/// seed and data, and writes reports/ablation.csv with both arms side by side.
AblationResult ablation_patch_vs_donor(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                       std::filesystem::path data_dir = {});

// ---- personalization -----------------------------------------------------------

/// Every training and held-out view of one identity as a subject set.
SubjectSet subject_from_dataset(const Dataset& ds, const std::string& identity, bool include_heldout = false);

}  // namespace uvr
