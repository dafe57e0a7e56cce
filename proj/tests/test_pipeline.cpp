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

#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "uvr/experiment.hpp"

using namespace uvr;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("uvr_pipeline_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.data.paired_identities = 2;
  c.data.poses_per_identity = 2;
  c.data.heldout_poses = 1;
  c.data.unpaired_identities = 2;
  c.data.image_size = 64;
  c.steps = 6;
  c.batch = 2;
  c.resolution = 16;
  c.width = 4;
  c.sampler.steps = 3;
  c.seed = 5;
  return c;
}

// Shared dataset generated once for the tests that only read it.
const Dataset& tiny_dataset() {
  static const Dataset ds = gen_dataset(tiny_config().data, 5, scratch_dir("shared"));
  return ds;
}

}  // namespace

TEST_CASE("dataset generation is deterministic") {
  const ExperimentConfig c = tiny_config();
  const fs::path a = scratch_dir("det_a"), b = scratch_dir("det_b");
  gen_dataset(c.data, 9, a);
  gen_dataset(c.data, 9, b);
  std::set<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(a))
    if (e.is_regular_file()) files.insert(fs::relative(e.path(), a));
  CHECK(files.size() > 10);
  for (const fs::path& f : files) {
    REQUIRE(fs::exists(b / f));
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f.string());
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("manifests are closed and pairs are well formed") {
  const Dataset& ds = tiny_dataset();
  const Dataset back = load_dataset(ds.root);
  CHECK(back.paired.samples.size() == 4);
  // One single-image sample per identity, paired identities included.
  CHECK(back.unpaired.samples.size() == 4);
  std::set<std::string> single_ids;
  for (const SampleRecord& s : back.unpaired.samples) single_ids.insert(s.identity);
  CHECK(single_ids.size() == 4);
  CHECK(back.eval.samples.size() == 2);

  std::set<std::string> training;
  for (const SampleRecord& s : ds.training_samples()) training.insert(s.id);
  for (const SampleRecord& s : ds.paired.samples) {
    const SampleRecord* p = ds.paired.find(*s.partner);
    REQUIRE(p);
    CHECK(p->identity == s.identity);
    CHECK(p->id != s.id);
    const LoadedSample a = load_sample(ds, s), b = load_sample(ds, *p);
    CHECK_FALSE(a.pose == b.pose);
  }
  const DonorConfig dc;
  for (const SampleRecord& s : ds.training_samples()) {
    const LoadedSample l = load_sample(ds, s);
    CHECK(l.pool.donors.size() <= static_cast<size_t>(dc.pool_size));
    for (const DonorEntry& d : l.pool.donors) {
      CHECK(training.count(d.id) == 1);
      CHECK(d.iou >= dc.iou_lo);
      CHECK(d.iou <= dc.iou_hi);
    }
  }
  // Evaluation targets are held out from training.
  for (const SampleRecord& e : ds.eval.samples) CHECK(training.count(e.id) == 0);
}

TEST_CASE("tampered manifests are rejected") {
  const fs::path dir = scratch_dir("tamper");
  gen_dataset(tiny_config().data, 3, dir);
  Json j = read_json(dir / "paired.json");
  j["samples"][0]["partner"] = j["samples"][3]["id"];
  write_json(dir / "paired.json", j);
  CHECK_THROWS_AS(load_dataset(dir), InputError);
  fs::remove_all(dir);
}

TEST_CASE("experiment config parsing is strict") {
  const Json good = experiment_config_to_json(tiny_config());
  const ExperimentConfig back = experiment_config_from_json(good);
  CHECK(back.steps == 6);
  CHECK(back.resolution == 16);
  CHECK(experiment_config_to_json(back) == good);

  Json extra = good;
  extra["stpes"] = 3;
  CHECK_THROWS_AS(experiment_config_from_json(extra), ConfigError);
  Json nested = good;
  nested["optimizer"]["momentum"] = 0.9;
  CHECK_THROWS_AS(experiment_config_from_json(nested), ConfigError);
  Json mix = good;
  mix["mix"] = "both";
  CHECK_THROWS_AS(experiment_config_from_json(mix), ConfigError);
  Json bad = good;
  bad["batch"] = 0;
  CHECK_THROWS_AS(experiment_config_from_json(bad), ConfigError);
  CHECK(experiment_config_from_json(Json::object()).steps == ExperimentConfig{}.steps);
}

TEST_CASE("paired step schedule") {
  for (double rho : {0.0, 0.25, 0.5, 1.0 / 3.0, 1.0}) {
    for (long n : {1L, 7L, 100L}) {
      long count = 0;
      for (long k = 0; k < n; ++k) count += paired_step(k, rho);
      CHECK(count == static_cast<long>(std::floor(n * rho)));
    }
  }
}

TEST_CASE("branches follow the data mix") {
  const Dataset& ds = tiny_dataset();
  ExperimentConfig c = tiny_config();
  c.dropout = {0.0, 0.0, 0.0, 0.0};  // keep every condition

  c.mix = DataMix::kPairedOnly;
  for (const LogRow& r : train_model(c, ds).log) {
    CHECK(r.branch == Branch::kPaired);
    CHECK(r.face_crops == c.batch);
  }
  c.mix = DataMix::kUnpairedOnly;
  for (const LogRow& r : train_model(c, ds).log) {
    CHECK(r.branch == Branch::kSingle);
    CHECK(r.face_crops == 0);
  }
  c.mix = DataMix::kHybrid;
  c.paired_ratio = 0.5;
  const auto log = train_model(c, ds).log;
  long paired = 0;
  for (const LogRow& r : log) {
    paired += r.branch == Branch::kPaired;
    if (r.branch == Branch::kSingle) CHECK(r.face_crops == 0);
  }
  CHECK(paired == 3);
}

TEST_CASE("training is deterministic and checkpoints reload") {
  const Dataset& ds = tiny_dataset();
  const ExperimentConfig c = tiny_config();
  const fs::path ck = scratch_dir("ckpt");
  const TrainedModel a = train_model(c, ds), b = train_model(c, ds, ck);
  CHECK((a.net.params().array() == b.net.params().array()).all());
  REQUIRE(a.log.size() == b.log.size());
  for (size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);
  fs::remove_all(ck);
}

TEST_CASE("run_experiment is reproducible") {
  const ExperimentConfig c = tiny_config();
  const fs::path a = scratch_dir("run_a"), b = scratch_dir("run_b");
  const ExperimentResult ra = run_experiment(c, a);
  run_experiment(c, b, a / "data");
  CHECK(ra.report.sample_count() == 2);
  for (const char* f : {"reports/metrics.csv", "reports/summary.json", "reports/train_log.csv"})
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  const LoadedModel m = load_model(ra.checkpoint);
  CHECK(m.net.config() == c.net_config());
  for (const std::string& col : {"psnr", "ssim", "m_psnr", "m_ssim", "face_sim"})
    CHECK(std::find(ra.report.columns().begin(), ra.report.columns().end(), col) != ra.report.columns().end());
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("subject sets come from one identity") {
  const Dataset& ds = tiny_dataset();
  const std::string id = ds.paired.samples.front().identity;
  CHECK(subject_from_dataset(ds, id).images.size() == 2);
  CHECK(subject_from_dataset(ds, id, true).images.size() == 3);
  CHECK_THROWS_AS(subject_from_dataset(ds, "nobody"), InputError);
}
