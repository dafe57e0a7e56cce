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
#include "uvr/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace uvr {

DataMix data_mix_from_name(std::string_view name) {
  if (name == "unpaired_only") return DataMix::kUnpairedOnly;
  if (name == "paired_only") return DataMix::kPairedOnly;
  if (name == "hybrid") return DataMix::kHybrid;
  throw ConfigError("unknown data mix '" + std::string(name) + "'");
}

std::string_view data_mix_name(DataMix m) {
  switch (m) {
    case DataMix::kUnpairedOnly: return "unpaired_only";
    case DataMix::kPairedOnly: return "paired_only";
    case DataMix::kHybrid: return "hybrid";
  }
  return "hybrid";
}

Masking masking_from_name(std::string_view name) {
  if (name == "donor") return Masking::kDonor;
  if (name == "patch") return Masking::kPatch;
  throw ConfigError("unknown masking strategy '" + std::string(name) + "'");
}

std::string_view masking_name(Masking m) { return m == Masking::kDonor ? "donor" : "patch"; }

std::string_view branch_name(Branch b) { return b == Branch::kPaired ? "paired" : "single"; }

std::string_view probe_arm_name(ProbeArm a) {
  switch (a) {
    case ProbeArm::kRaw: return "raw";
    case ProbeArm::kDonor: return "donor";
    case ProbeArm::kPatch: return "patch";
  }
  return "raw";
}

void ExperimentConfig::validate() const {
  if (steps < 0) throw ConfigError("steps must be non-negative");
  if (batch < 1) throw ConfigError("batch must be positive");
  if (paired_ratio && !(*paired_ratio >= 0.0 && *paired_ratio <= 1.0)) {
    throw ConfigError("paired_ratio must lie in [0, 1]");
  }
  if (patch.max_patches < 0 || patch.patch_size < 1 || patch.patch_size > data.raster.texture_size) {
    throw ConfigError("patch masking needs 0 <= max_patches and 1 <= patch_size <= texture size");
  }
  if (sampler.steps < 1) throw ConfigError("sampler steps must be at least 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be non-negative");
  net_config().validate();
  dropout.validate();
  optimizer.validate();
  data.validate();
  if (mix != DataMix::kUnpairedOnly && data.paired_identities == 0) {
    throw ConfigError("a paired or hybrid mix needs paired identities");
  }
  if (mix != DataMix::kPairedOnly && data.paired_identities + data.unpaired_identities == 0) {
    throw ConfigError("a single-image mix needs at least one identity");
  }
}

ConvNetConfig ExperimentConfig::net_config() const {
  ConvNetConfig c;
  c.resolution = resolution;
  c.width = width;
  return c;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    StrictObject o(j, "config");
    if (o.has("mix")) c.mix = data_mix_from_name(o.at("mix").get<std::string>());
    if (o.has("paired_ratio")) {
      const Json& r = o.at("paired_ratio");
      if (!r.is_null()) c.paired_ratio = r.get<double>();
    }
    o.get("steps", c.steps);
    o.get("batch", c.batch);
    o.get("resolution", c.resolution);
    o.get("width", c.width);
    if (o.has("masking")) c.masking = masking_from_name(o.at("masking").get<std::string>());
    {
      StrictObject p = o.child("patch");
      p.get("max_patches", c.patch.max_patches);
      p.get("patch_size", c.patch.patch_size);
      p.finish();
    }
    {
      StrictObject d = o.child("dropout");
      d.get("p_all", c.dropout.p_all);
      d.get("p_tex", c.dropout.p_tex);
      d.get("p_face", c.dropout.p_face);
      d.get("p_pose", c.dropout.p_pose);
      d.finish();
    }
    {
      StrictObject s = o.child("sampler");
      s.get("steps", c.sampler.steps);
      if (s.has("scheme")) c.sampler.scheme = scheme_from_name(s.at("scheme").get<std::string>());
      s.finish();
    }
    {
      StrictObject a = o.child("optimizer");
      a.get("lr", c.optimizer.lr);
      a.get("beta1", c.optimizer.beta1);
      a.get("beta2", c.optimizer.beta2);
      a.get("eps", c.optimizer.eps);
      a.get("weight_decay", c.optimizer.weight_decay);
      a.finish();
    }
    {
      StrictObject r = o.child("raster");
      r.get("tau_dist", c.data.raster.tau_dist);
      r.get("eps_z", c.data.raster.eps_z);
      r.get("cull_backfaces", c.data.raster.cull_backfaces);
      r.get("texture_size", c.data.raster.texture_size);
      r.finish();
    }
    {
      StrictObject d = o.child("donor");
      d.get("iou_lo", c.data.donor.iou_lo);
      d.get("iou_hi", c.data.donor.iou_hi);
      d.get("pool_size", c.data.donor.pool_size);
      d.finish();
    }
    {
      StrictObject d = o.child("data");
      d.get("paired_identities", c.data.paired_identities);
      d.get("poses_per_identity", c.data.poses_per_identity);
      d.get("heldout_poses", c.data.heldout_poses);
      d.get("unpaired_identities", c.data.unpaired_identities);
      d.get("image_size", c.data.image_size);
      d.get("joint_jitter_deg", c.data.joint_jitter_deg);
      d.get("yaw_range_deg", c.data.yaw_range_deg);
      d.finish();
    }
    o.get("checkpoint_every", c.checkpoint_every);
    o.get("seed", c.seed);
    o.finish();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

Json experiment_config_to_json(const ExperimentConfig& c) {
  Json j;
  j["mix"] = data_mix_name(c.mix);
  j["paired_ratio"] = c.paired_ratio ? Json(*c.paired_ratio) : Json(nullptr);
  j["steps"] = c.steps;
  j["batch"] = c.batch;
  j["resolution"] = c.resolution;
  j["width"] = c.width;
  j["masking"] = masking_name(c.masking);
  j["patch"] = {{"max_patches", c.patch.max_patches}, {"patch_size", c.patch.patch_size}};
  j["dropout"] = {{"p_all", c.dropout.p_all}, {"p_tex", c.dropout.p_tex}, {"p_face", c.dropout.p_face},
                  {"p_pose", c.dropout.p_pose}};
  j["sampler"] = {{"steps", c.sampler.steps}, {"scheme", scheme_name(c.sampler.scheme)}};
  j["optimizer"] = {{"lr", c.optimizer.lr}, {"beta1", c.optimizer.beta1}, {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps}, {"weight_decay", c.optimizer.weight_decay}};
  j["raster"] = {{"tau_dist", c.data.raster.tau_dist}, {"eps_z", c.data.raster.eps_z},
                 {"cull_backfaces", c.data.raster.cull_backfaces}, {"texture_size", c.data.raster.texture_size}};
  j["donor"] = {{"iou_lo", c.data.donor.iou_lo}, {"iou_hi", c.data.donor.iou_hi},
                {"pool_size", c.data.donor.pool_size}};
  j["data"] = {{"paired_identities", c.data.paired_identities}, {"poses_per_identity", c.data.poses_per_identity},
               {"heldout_poses", c.data.heldout_poses}, {"unpaired_identities", c.data.unpaired_identities},
               {"image_size", c.data.image_size}, {"joint_jitter_deg", c.data.joint_jitter_deg},
               {"yaw_range_deg", c.data.yaw_range_deg}};
  j["checkpoint_every"] = c.checkpoint_every;
  j["seed"] = c.seed;
  return j;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return experiment_config_from_json(read_json(path));
}

// ---- training ------------------------------------------------------------------

PreparedView prepare_view(const LoadedSample& s, const Mesh& rest, int resolution, const RasterConfig& raster) {
  PreparedView v;
  v.id = s.record.id;
  v.identity = s.record.identity;
  v.bucket = s.record.bucket;
  v.posed = pose_body(rest, s.pose);
  v.camera = s.camera;
  v.texture = rasterize_uv(v.posed, v.camera, s.image, raster);
  v.pose_render = resize_area(render_pose_image(v.posed, v.camera), resolution, resolution);
  v.face_crop = crop_face(s.image, face_box(v.posed, v.camera), resolution);
  v.target = flatten(resize_area(s.image, resolution, resolution));
  v.pool = s.pool;
  return v;
}

void write_training_log(const std::filesystem::path& path, const std::vector<LogRow>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,branch,dropout_decision,loss,face\n";
  for (const LogRow& r : log) {
    out << r.step << ',' << branch_name(r.branch) << ',' << dropout_name(r.dropout) << ',' << format_metric(r.loss)
        << ',' << r.face_crops << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

bool paired_step(long step, double rho) {
  return std::floor(static_cast<double>(step + 1) * rho) > std::floor(static_cast<double>(step) * rho);
}

namespace {

struct ViewSet {
  std::vector<PreparedView> views;
  std::map<std::string, size_t> index;

  const PreparedView& at(const std::string& id) const {
    const auto it = index.find(id);
    if (it == index.end()) throw InputError("no prepared view for sample " + id);
    return views[it->second];
  }
};

ViewSet prepare_views(const Dataset& ds, const std::vector<SampleRecord>& records, int resolution,
                      const RasterConfig& raster) {
  const Mesh rest = build_body();
  ViewSet out;
  for (const SampleRecord& r : records) {
    if (out.index.count(r.id)) continue;
    out.index[r.id] = out.views.size();
    out.views.push_back(prepare_view(load_sample(ds, r), rest, resolution, raster));
  }
  return out;
}

std::map<std::string, Mask> load_visibility(const Dataset& ds) {
  std::map<std::string, Mask> out;
  for (const SampleRecord& r : ds.training_samples()) out[r.id] = read_mask_png(ds.root / r.mask);
  return out;
}

// Single-image texture condition: the sample's own partial texture under a
// donor mask from its pool, or random patches when the pool is empty or patch
// masking is configured.
TextureMap masked_texture(const PreparedView& v, const ExperimentConfig& config,
                          const std::map<std::string, Mask>& visibility, Rng& rng) {
  if (config.masking == Masking::kDonor && !v.pool.exhausted()) {
    const auto& donors = v.pool.donors;
    const auto& d = donors[std::uniform_int_distribution<size_t>(0, donors.size() - 1)(rng)];
    return apply_donor(v.texture, visibility.at(d.id));
  }
  return random_patch_mask(v.texture, rng, config.patch.max_patches, config.patch.patch_size).texture;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, long step) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%06ld.uvfm", step);
  return dir / buf;
}

}  // namespace

TrainedModel train_model(const ExperimentConfig& config, const Dataset& ds, const std::filesystem::path& ckpt_dir) {
  config.validate();
  const int R = config.resolution;
  const ConvNetConfig nc = config.net_config();

  std::vector<SampleRecord> records;
  if (config.mix != DataMix::kUnpairedOnly) {
    if (ds.paired.samples.empty()) throw InputError("paired training needs a non-empty paired manifest");
    records.insert(records.end(), ds.paired.samples.begin(), ds.paired.samples.end());
  }
  if (config.mix != DataMix::kPairedOnly) {
    if (ds.unpaired.samples.empty()) throw InputError("single-image training needs a non-empty unpaired manifest");
    records.insert(records.end(), ds.unpaired.samples.begin(), ds.unpaired.samples.end());
  }
  const ViewSet views = prepare_views(ds, records, R, config.data.raster);
  const std::map<std::string, Mask> visibility =
      config.mix != DataMix::kPairedOnly ? load_visibility(ds) : std::map<std::string, Mask>{};

  double rho = 0.0;
  if (config.mix == DataMix::kPairedOnly) rho = 1.0;
  if (config.mix == DataMix::kHybrid) {
    rho = config.paired_ratio.value_or(static_cast<double>(ds.paired.samples.size()) /
                                       static_cast<double>(ds.paired.samples.size() + ds.unpaired.samples.size()));
  }

  Rng init_rng = stream(config.seed, "init");
  Rng train_rng = stream(config.seed, "training");
  Rng dropout_rng = stream(config.seed, "dropout");
  Rng mask_rng = stream(config.seed, "masking");
  TrainedModel out{ConvVelocityNet<float>(nc, init_rng), AdamW<float>(config.optimizer, 0), {}};
  out.optimizer = AdamW<float>(config.optimizer, out.net.param_count());
  if (!ckpt_dir.empty()) std::filesystem::create_directories(ckpt_dir);
  std::string last_good = "none";

  const auto& paired = ds.paired.samples;
  const auto& single = ds.unpaired.samples;
  for (long step = 0; step < config.steps; ++step) {
    LogRow row;
    row.step = step;
    row.branch = paired_step(step, rho) ? Branch::kPaired : Branch::kSingle;
    row.dropout = sample_dropout(dropout_rng, config.dropout);
    Eigen::MatrixXf x0(nc.data_size(), config.batch);
    std::vector<EncodedCondition<float>> conds;
    for (int b = 0; b < config.batch; ++b) {
      ConditionSet c;
      if (row.branch == Branch::kPaired) {
        const SampleRecord& r = paired[std::uniform_int_distribution<size_t>(0, paired.size() - 1)(train_rng)];
        const PreparedView& ref = views.at(r.id);
        const PreparedView& tgt = views.at(*r.partner);
        c.texture = ref.texture;
        c.pose_render = tgt.pose_render;
        c.face_crop = ref.face_crop;
        x0.col(b) = tgt.target;
      } else {
        const SampleRecord& r = single[std::uniform_int_distribution<size_t>(0, single.size() - 1)(train_rng)];
        const PreparedView& v = views.at(r.id);
        c.texture = masked_texture(v, config, visibility, mask_rng);
        c.pose_render = v.pose_render;
        x0.col(b) = v.target;
      }
      c = apply_dropout(std::move(c), row.dropout);
      row.face_crops += c.has_face() ? 1 : 0;
      conds.push_back(encode_condition(c, R));
    }
    try {
      const FlowBatch<float> batch = FlowBatch<float>::sample(std::move(x0), train_rng);
      row.loss = train_step<float>(out.net, out.optimizer, batch, conds);
    } catch (const NumericError& e) {
      throw NumericError("training failed at step " + std::to_string(step) + " (" + e.what() +
                         "); last good checkpoint: " + last_good);
    }
    out.log.push_back(row);
    if (!ckpt_dir.empty() && config.checkpoint_every > 0 && (step + 1) % config.checkpoint_every == 0) {
      const auto path = checkpoint_path(ckpt_dir, step + 1);
      save_model(path, out.net, out.optimizer);
      last_good = path.string();
    }
  }
  return out;
}

// ---- evaluation ----------------------------------------------------------------

MetricReport evaluate(const ConvVelocityNet<float>& net, const ExperimentConfig& config, const Dataset& ds,
                      const AdapterParams<float>* adapter, std::map<std::string, Image>* generated) {
  const int R = config.resolution;
  if (net.config().resolution != R) throw ConfigError("network resolution differs from the experiment");
  std::vector<SampleRecord> records = ds.eval.samples;
  for (const SampleRecord& e : ds.eval.samples) {
    const SampleRecord* ref = ds.paired.find(*e.partner);
    if (!ref) throw InputError("evaluation reference " + *e.partner + " is not in the paired manifest");
    records.push_back(*ref);
  }
  const ViewSet views = prepare_views(ds, records, R, config.data.raster);
  const bool use_face = config.mix != DataMix::kUnpairedOnly;

  MetricReport report;
  for (size_t i = 0; i < ds.eval.samples.size(); ++i) {
    const SampleRecord& e = ds.eval.samples[i];
    const PreparedView& tgt = views.at(e.id);
    const PreparedView& ref = views.at(*e.partner);
    ConditionSet c;
    c.texture = ref.texture;
    c.pose_render = tgt.pose_render;
    if (use_face) c.face_crop = ref.face_crop;
    const std::vector<EncodedCondition<float>> conds{encode_condition(c, R)};

    Rng noise = stream(config.seed, "eval", i);
    std::normal_distribution<float> n01;
    Eigen::MatrixXf x1(net.config().data_size(), 1);
    for (Eigen::Index k = 0; k < x1.size(); ++k) x1(k) = n01(noise);
    const Eigen::MatrixXf x0 = sample<float>(NetView<float>(net, adapter), x1, conds, config.sampler.steps,
                                             config.sampler.scheme);
    const Image gen = unflatten(x0.col(0).cwiseMax(0.0f).cwiseMin(1.0f), R, R, 3);
    const Image gt = unflatten(tgt.target, R, R, 3);
    if (generated) (*generated)[e.id] = gen;

    // Foreground: pixels at least half covered by the body.
    const Image pose_full = render_pose_image(tgt.posed, tgt.camera);
    Mask fg_full(pose_full.height(), pose_full.width());
    for (int y = 0; y < pose_full.height(); ++y)
      for (int x = 0; x < pose_full.width(); ++x)
        fg_full(y, x) = pose_full.at(0, y, x) + pose_full.at(1, y, x) + pose_full.at(2, y, x) > 0.0f;
    const Image fg_r = resize_area(mask_to_image(fg_full), R, R);
    Mask fg(R, R);
    for (int y = 0; y < R; ++y)
      for (int x = 0; x < R; ++x) fg(y, x) = fg_r.at(0, y, x) >= 0.5f;

    FaceBox box = face_box(tgt.posed, tgt.camera);
    const double s = static_cast<double>(R) / tgt.camera.width;
    box.cx *= s;
    box.cy *= s;
    box.half *= s;
    const Eigen::VectorXd eg = proxy_embedding(crop_face(gen, box, 16));
    const Eigen::VectorXd et = proxy_embedding(crop_face(gt, box, 16));
    double fs = 0.0;
    if (eg.norm() > 0.0 && et.norm() > 0.0) fs = face_sim(eg, et);

    report.add(e.id, {{"psnr", psnr(gen, gt)},
                      {"ssim", ssim(gen, gt)},
                      {"m_psnr", psnr(gen, gt, &fg)},
                      {"m_ssim", ssim(gen, gt, &fg)},
                      {"face_sim", fs}});
  }
  return report;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                std::filesystem::path data_dir) {
  config.validate();
  if (data_dir.empty()) data_dir = run_dir / "data";
  const Dataset ds = std::filesystem::exists(data_dir / "paired.json") ? load_dataset(data_dir)
                                                                         : gen_dataset(config.data, config.seed, data_dir);
  const auto ckpt = run_dir / "ckpt";
  const auto reports = run_dir / "reports";
  std::filesystem::create_directories(reports);
  write_json(run_dir / "config.json", experiment_config_to_json(config));

  TrainedModel m = train_model(config, ds, ckpt);
  ExperimentResult res;
  res.checkpoint = ckpt / "model.uvfm";
  save_model(res.checkpoint, m.net, m.optimizer);
  write_training_log(reports / "train_log.csv", m.log);
  res.log = std::move(m.log);
  res.report = evaluate(m.net, config, ds);
  res.report.write_csv(reports / "metrics.csv");
  res.report.write_json(reports / "summary.json");
  return res;
}

// ---- pose leakage probe ------------------------------------------------------

ProbeResult leakage_probe(const std::vector<Mask>& masks, const std::vector<int>& labels, std::uint64_t seed,
                          const ProbeConfig& config) {
  if (masks.size() != labels.size()) throw InputError("probe: one label per mask");
  std::vector<int> classes(labels);
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  const int k = static_cast<int>(classes.size());
  if (k < 2) throw InputError("probe needs at least two pose buckets");
  const int n = static_cast<int>(masks.size());
  const int n_test = static_cast<int>(std::lround(config.test_fraction * n));
  if (n_test < 1 || n - n_test < 1) throw InputError("probe needs samples on both sides of the split");

  const int f = config.feature_size;
  Eigen::MatrixXd x(f * f, n);
  std::vector<int> y(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Image small = resize_area(mask_to_image(masks[static_cast<size_t>(i)]), f, f);
    for (int p = 0; p < f * f; ++p) x(p, i) = small.at(0, p / f, p % f);
    y[static_cast<size_t>(i)] = static_cast<int>(
        std::lower_bound(classes.begin(), classes.end(), labels[static_cast<size_t>(i)]) - classes.begin());
  }
  if (config.shuffle_labels) {
    Rng r = stream(seed, "probe", 1);
    std::shuffle(y.begin(), y.end(), r);
  }
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng split = stream(seed, "probe", 0);
  std::shuffle(order.begin(), order.end(), split);
  const int n_train = n - n_test;

  Eigen::MatrixXd xtr(f * f, n_train), xte(f * f, n_test);
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(k, n_train);
  std::vector<int> ytr, yte;
  for (int i = 0; i < n; ++i) {
    const int s = order[static_cast<size_t>(i)];
    if (i < n_train) {
      xtr.col(i) = x.col(s);
      onehot(y[static_cast<size_t>(s)], i) = 1.0;
      ytr.push_back(y[static_cast<size_t>(s)]);
    } else {
      xte.col(i - n_train) = x.col(s);
      yte.push_back(y[static_cast<size_t>(s)]);
    }
  }
  const Eigen::VectorXd mean = xtr.rowwise().mean();
  xtr.colwise() -= mean;
  xte.colwise() -= mean;

  // Softmax regression by full-batch gradient descent.
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(k, f * f);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Eigen::MatrixXd z = (w * xtr).colwise() + b;
    Eigen::MatrixXd p = (z.rowwise() - z.colwise().maxCoeff()).array().exp().matrix();
    p.array().rowwise() /= p.colwise().sum().array();
    const Eigen::MatrixXd g = (p - onehot) / n_train;
    w -= config.learning_rate * (g * xtr.transpose() + config.l2 * w);
    b -= config.learning_rate * g.rowwise().sum();
  }
  const Eigen::MatrixXd zt = (w * xte).colwise() + b;
  int correct = 0;
  for (int i = 0; i < n_test; ++i) {
    Eigen::Index arg;
    zt.col(i).maxCoeff(&arg);
    correct += arg == yte[static_cast<size_t>(i)];
  }

  ProbeResult res;
  res.accuracy = static_cast<double>(correct) / n_test;
  std::vector<double> ptr(static_cast<size_t>(k)), pte(static_cast<size_t>(k));
  for (int c : ytr) ptr[static_cast<size_t>(c)] += 1.0 / n_train;
  for (int c : yte) pte[static_cast<size_t>(c)] += 1.0 / n_test;
  for (int c = 0; c < k; ++c) res.chance += ptr[static_cast<size_t>(c)] * pte[static_cast<size_t>(c)];
  res.sigma = std::sqrt(res.chance * (1.0 - res.chance) / n_test);
  res.train_size = n_train;
  res.test_size = n_test;
  res.buckets = k;
  return res;
}

ProbeResult leakage_probe(const Dataset& ds, ProbeArm arm, std::uint64_t seed, const ProbeConfig& config,
                          const PatchConfig& patch) {
  const std::vector<SampleRecord> samples = ds.training_samples();
  const std::map<std::string, Mask> visibility = load_visibility(ds);
  std::vector<Mask> masks;
  std::vector<int> labels;
  for (size_t i = 0; i < samples.size(); ++i) {
    const SampleRecord& r = samples[i];
    Mask m = visibility.at(r.id);
    Rng rng = stream(seed, "probe_masks", i);
    const DonorPool pool = donor_pool_from_json(read_json(ds.root / r.donors));
    if (arm == ProbeArm::kDonor && !pool.exhausted()) {
      const auto& d = pool.donors[std::uniform_int_distribution<size_t>(0, pool.donors.size() - 1)(rng)];
      m = m * visibility.at(d.id);
    } else if (arm != ProbeArm::kRaw) {
      TextureMap t{Image(static_cast<int>(m.cols()), static_cast<int>(m.rows()), 1), m};
      m = random_patch_mask(t, rng, patch.max_patches, patch.patch_size).texture.mask;
    }
    masks.push_back(std::move(m));
    labels.push_back(r.bucket);
  }
  return leakage_probe(masks, labels, seed, config);
}

// ---- ablation ------------------------------------------------------------------

AblationResult ablation_patch_vs_donor(const ExperimentConfig& config, const std::filesystem::path& run_dir,
                                       std::filesystem::path data_dir) {
  if (data_dir.empty()) data_dir = run_dir / "data";
  if (!std::filesystem::exists(data_dir / "paired.json")) gen_dataset(config.data, config.seed, data_dir);
  ExperimentConfig donor_cfg = config;
  donor_cfg.masking = Masking::kDonor;
  ExperimentConfig patch_cfg = config;
  patch_cfg.masking = Masking::kPatch;

  AblationResult res;
  res.donor = run_experiment(donor_cfg, run_dir / "donor", data_dir);
  res.patch = run_experiment(patch_cfg, run_dir / "patch", data_dir);
  const Dataset ds = load_dataset(data_dir);
  res.donor_probe = leakage_probe(ds, ProbeArm::kDonor, config.seed, {}, config.patch);
  res.patch_probe = leakage_probe(ds, ProbeArm::kPatch, config.seed, {}, config.patch);

  std::filesystem::create_directories(run_dir / "reports");
  const auto path = run_dir / "reports" / "ablation.csv";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "metric,donor,patch\n";
  for (const std::string& col : res.donor.report.columns()) {
    out << col << ',' << format_metric(res.donor.report.summary(col).mean) << ','
        << format_metric(res.patch.report.summary(col).mean) << '\n';
  }
  out << "probe_accuracy," << format_metric(res.donor_probe.accuracy) << ','
      << format_metric(res.patch_probe.accuracy) << '\n';
  out << "probe_chance," << format_metric(res.donor_probe.chance) << ',' << format_metric(res.patch_probe.chance)
      << '\n';
  out << "probe_sigma," << format_metric(res.donor_probe.sigma) << ',' << format_metric(res.patch_probe.sigma)
      << '\n';
  if (!out) throw IoError("failed writing " + path.string());
  return res;
}

// ---- personalization -----------------------------------------------------------

SubjectSet subject_from_dataset(const Dataset& ds, const std::string& identity, bool include_heldout) {
  SubjectSet s;
  s.rest = build_body();
  auto add = [&](const DatasetManifest& m) {
    for (const SampleRecord& r : m.samples) {
      if (r.identity != identity) continue;
      const LoadedSample l = load_sample(ds, r);
      s.images.push_back({l.image, l.pose, l.camera});
    }
  };
  add(ds.paired);
  if (include_heldout) add(ds.eval);
  if (s.images.size() < 2) throw InputError("identity " + identity + " has fewer than two paired images");
  return s;
}

}  // namespace uvr
