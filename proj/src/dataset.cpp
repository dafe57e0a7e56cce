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
#include "uvr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace uvr {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Degrees: L shoulder, L elbow, R shoulder, R elbow, L hip, L knee, R hip, R knee, neck.
constexpr std::array<std::array<double, 9>, kPoseBuckets> kBuckets = {{
    {0, 0, 0, 0, 0, 0, 0, 0, 0},
    {-90, 0, -90, 0, 0, 0, 0, 0, 0},
    {-170, 0, -170, 0, 0, 90, 0, 90, -50},
    {-90, -80, -90, 80, 0, 0, 0, 0, 0},
    {40, 0, 40, 0, -90, 90, -90, 90, 70},
    {-120, 0, 45, 0, -100, 20, 40, 120, -75},
    {-90, 90, 0, 0, -30, 0, -30, 0, 0},
    {0, -60, 0, 60, -90, 0, 0, 90, 40},
}};

}  // namespace

PoseParams bucket_pose(int bucket) {
  if (bucket < 0 || bucket >= kPoseBuckets) throw InputError("pose bucket out of range: " + std::to_string(bucket));
  const auto& b = kBuckets[static_cast<size_t>(bucket)];
  PoseParams p;
  p.angle(Joint::kLeftShoulder) = b[0] * kDeg;
  p.angle(Joint::kLeftElbow) = b[1] * kDeg;
  p.angle(Joint::kRightShoulder) = b[2] * kDeg;
  p.angle(Joint::kRightElbow) = b[3] * kDeg;
  p.angle(Joint::kLeftHip) = b[4] * kDeg;
  p.angle(Joint::kLeftKnee) = b[5] * kDeg;
  p.angle(Joint::kRightHip) = b[6] * kDeg;
  p.angle(Joint::kRightKnee) = b[7] * kDeg;
  p.angle(Joint::kNeck) = b[8] * kDeg;
  return p;
}

PoseParams jittered_pose(int bucket, Rng& rng, double jitter_deg, double yaw_deg, const BodyConfig& body) {
  PoseParams p = bucket_pose(bucket);
  std::uniform_real_distribution<double> j(-jitter_deg, jitter_deg);
  for (double& a : p.angles) a += j(rng) * kDeg;
  p.rotation.y() = std::uniform_real_distribution<double>(-yaw_deg, yaw_deg)(rng) * kDeg;
  return clamp_pose(p, body.limits);
}

IdentityStyle make_identity(Rng& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  IdentityStyle s;
  s.tint = Eigen::Vector3f(0.15f + 0.7f * u(rng), 0.15f + 0.7f * u(rng), 0.15f + 0.7f * u(rng));
  const float tone = 0.45f + 0.45f * u(rng);
  s.skin = Eigen::Vector3f(tone, 0.8f * tone, 0.65f * tone);
  s.hair = Eigen::Vector3f(0.4f * u(rng), 0.3f * u(rng), 0.25f * u(rng));
  s.face_seed = std::uniform_int_distribution<std::uint64_t>()(rng);
  return s;
}

namespace {

void fill_box(Image& img, const Eigen::AlignedBox2d& box, const Eigen::Vector3f& color, int pad) {
  const int n = img.width();
  const int x0 = std::max(0, static_cast<int>(std::floor(box.min().x() * n)) - pad);
  const int y0 = std::max(0, static_cast<int>(std::floor(box.min().y() * n)) - pad);
  const int x1 = std::min(n, static_cast<int>(std::ceil(box.max().x() * n)) + pad);
  const int y1 = std::min(n, static_cast<int>(std::ceil(box.max().y() * n)) + pad);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x)
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = color[c];
}

struct Blob {
  double u, v, sigma;
  Eigen::Vector3f color;
  float weight;
};

}  // namespace

TextureMap identity_texture(const IdentityStyle& s, int size, const BodyConfig& body) {
  Image img(size, size, 3);
  for (int p = 0; p < kPartCount; ++p) {
    const BodyPart part = static_cast<BodyPart>(p);
    const Eigen::Vector3f base = part == BodyPart::kHead ? s.skin : s.tint;
    const PartCharts charts = atlas_charts(part);
    fill_box(img, charts.side, base, 1);
    for (const auto& cap : charts.caps) fill_box(img, cap, part == BodyPart::kHead ? s.hair : base, 1);
  }

  // Hair band over the top of the head chart.
  const Eigen::AlignedBox2d head = atlas_charts(BodyPart::kHead).side;
  const Eigen::AlignedBox2d& face = body.face_region;
  {
    const int x0 = static_cast<int>(std::floor(head.min().x() * size)) - 1;
    const int x1 = static_cast<int>(std::ceil(head.max().x() * size)) + 1;
    const int y0 = std::max(0, static_cast<int>(std::floor(head.min().y() * size)) - 1);
    const int y1 = static_cast<int>(std::floor((head.min().y() + 0.2 * head.sizes().y()) * size));
    for (int y = y0; y < y1; ++y)
      for (int x = std::max(0, x0); x < std::min(size, x1); ++x)
        for (int c = 0; c < 3; ++c) img.at(c, y, x) = s.hair[c];
  }

  // Face: two eyes and a mouth at fixed places plus identity-specific blobs,
  // all in face-region coordinates (u, v) in [0, 1]^2.
  Rng rng(splitmix64(s.face_seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Blob> blobs;
  const Eigen::Vector3f eye(0.08f + 0.2f * static_cast<float>(u(rng)), 0.08f + 0.15f * static_cast<float>(u(rng)),
                            0.1f + 0.3f * static_cast<float>(u(rng)));
  const double eye_dx = 0.16 + 0.08 * u(rng);
  const double eye_v = 0.35 + 0.1 * u(rng);
  blobs.push_back({0.5 - eye_dx, eye_v, 0.06, eye, 1.0f});
  blobs.push_back({0.5 + eye_dx, eye_v, 0.06, eye, 1.0f});
  const Eigen::Vector3f lips(0.5f + 0.4f * static_cast<float>(u(rng)), 0.15f + 0.25f * static_cast<float>(u(rng)),
                             0.2f + 0.3f * static_cast<float>(u(rng)));
  blobs.push_back({0.5, 0.72 + 0.06 * u(rng), 0.07 + 0.04 * u(rng), lips, 1.0f});
  for (int k = 0; k < 4; ++k) {
    const Eigen::Vector3f col(static_cast<float>(u(rng)), static_cast<float>(u(rng)), static_cast<float>(u(rng)));
    blobs.push_back({0.15 + 0.7 * u(rng), 0.15 + 0.7 * u(rng), 0.06 + 0.1 * u(rng), col, 0.7f});
  }
  const int fx0 = static_cast<int>(std::floor(face.min().x() * size));
  const int fx1 = static_cast<int>(std::ceil(face.max().x() * size));
  const int fy0 = static_cast<int>(std::floor(face.min().y() * size));
  const int fy1 = static_cast<int>(std::ceil(face.max().y() * size));
  for (int y = fy0; y < fy1; ++y) {
    for (int x = fx0; x < fx1; ++x) {
      const double fu = ((x + 0.5) / size - face.min().x()) / face.sizes().x();
      const double fv = ((y + 0.5) / size - face.min().y()) / face.sizes().y();
      Eigen::Vector3f c(img.at(0, y, x), img.at(1, y, x), img.at(2, y, x));
      for (const Blob& b : blobs) {
        const double d2 = (fu - b.u) * (fu - b.u) + (fv - b.v) * (fv - b.v);
        const float w = b.weight * static_cast<float>(std::exp(-0.5 * d2 / (b.sigma * b.sigma)));
        c = (1.0f - w) * c + w * b.color;
      }
      for (int k = 0; k < 3; ++k) img.at(k, y, x) = std::clamp(c[k], 0.0f, 1.0f);
    }
  }
  return {std::move(img), Mask::Ones(size, size)};
}

Image render_identity(const Mesh& posed, const Camera& camera, const TextureMap& texture) {
  return render_textured(posed, camera, texture).image;
}

// ---- datasets ----------------------------------------------------------------

void DataConfig::validate() const {
  if (paired_identities < 0 || unpaired_identities < 0) throw ConfigError("identity counts must be non-negative");
  if (paired_identities > 0 && poses_per_identity < 2) throw ConfigError("paired identities need at least 2 poses");
  if (heldout_poses < 0) throw ConfigError("held-out pose count must be non-negative");
  if (poses_per_identity + heldout_poses > kPoseBuckets) {
    throw ConfigError("training plus held-out poses per identity cannot exceed the 8 pose buckets");
  }
  if (image_size < 16) throw ConfigError("image size must be at least 16");
  if (joint_jitter_deg < 0.0 || yaw_range_deg < 0.0) throw ConfigError("pose jitter must be non-negative");
  raster.validate();
  donor.validate();
}

std::string_view manifest_kind_name(ManifestKind k) {
  switch (k) {
    case ManifestKind::kPaired: return "paired";
    case ManifestKind::kUnpaired: return "unpaired";
    case ManifestKind::kEval: return "eval";
  }
  return "paired";
}

const SampleRecord* DatasetManifest::find(const std::string& id) const {
  for (const auto& s : samples)
    if (s.id == id) return &s;
  return nullptr;
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  Json j;
  j["kind"] = manifest_kind_name(m.kind);
  Json arr = Json::array();
  for (const auto& s : m.samples) {
    Json e;
    e["id"] = s.id;
    e["identity"] = s.identity;
    e["bucket"] = s.bucket;
    e["image"] = s.image;
    e["pose"] = s.pose;
    e["camera"] = s.camera;
    e["mask"] = s.mask;
    e["donors"] = s.donors;
    if (s.partner) e["partner"] = *s.partner;
    arr.push_back(e);
  }
  j["samples"] = arr;
  write_json(path, j);
}

DatasetManifest read_manifest(const std::filesystem::path& path, const std::filesystem::path& root) {
  const Json j = read_json(path);
  DatasetManifest m;
  try {
    StrictObject o(j, path.filename().string());
    const std::string kind = o.at("kind").get<std::string>();
    if (kind == "paired") m.kind = ManifestKind::kPaired;
    else if (kind == "unpaired") m.kind = ManifestKind::kUnpaired;
    else if (kind == "eval") m.kind = ManifestKind::kEval;
    else throw InputError(path.string() + ": unknown manifest kind '" + kind + "'");
    for (const Json& e : o.at("samples")) {
      StrictObject s(e, "sample");
      SampleRecord r;
      r.id = s.at("id").get<std::string>();
      r.identity = s.at("identity").get<std::string>();
      r.bucket = s.at("bucket").get<int>();
      r.image = s.at("image").get<std::string>();
      r.pose = s.at("pose").get<std::string>();
      r.camera = s.at("camera").get<std::string>();
      r.mask = s.at("mask").get<std::string>();
      r.donors = s.at("donors").get<std::string>();
      if (s.has("partner")) r.partner = s.at("partner").get<std::string>();
      s.finish();
      for (const std::string* f : {&r.image, &r.pose, &r.camera, &r.mask, &r.donors}) {
        if (!std::filesystem::exists(root / *f)) {
          throw IoError(path.string() + ": sample " + r.id + " references missing file " + *f);
        }
      }
      m.samples.push_back(std::move(r));
    }
    o.finish();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  }
  return m;
}

std::vector<SampleRecord> Dataset::training_samples() const {
  std::vector<SampleRecord> out = paired.samples;
  for (const auto& s : unpaired.samples)
    if (!paired.find(s.id)) out.push_back(s);
  std::sort(out.begin(), out.end(), [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
  return out;
}

namespace {

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02d", i);
  return buf;
}

struct Pending {
  SampleRecord record;
  PoseParams pose;
  Mask visibility;
  bool training = true;
};

}  // namespace

Dataset gen_dataset(const DataConfig& config, std::uint64_t seed, const std::filesystem::path& root) {
  config.validate();
  namespace fs = std::filesystem;
  for (const char* d : {"images", "masks", "poses", "cameras", "donors", "textures"}) fs::create_directories(root / d);
  const BodyConfig body;
  const Mesh rest = build_body(body);
  write_obj(root / "body.obj", rest);
  const Camera camera = Camera::default_camera(config.image_size, config.image_size);

  std::vector<Pending> samples;
  auto render_sample = [&](const std::string& id, const std::string& identity, const TextureMap& tex, int bucket,
                           Rng& pose_rng, bool training) {
    Pending p;
    p.pose = jittered_pose(bucket, pose_rng, config.joint_jitter_deg, config.yaw_range_deg, body);
    p.training = training;
    const Mesh posed = pose_body(rest, p.pose);
    p.visibility = visibility_mask(posed, camera, config.raster);
    SampleRecord& r = p.record;
    r.id = id;
    r.identity = identity;
    r.bucket = bucket;
    r.image = "images/" + id + ".png";
    r.pose = "poses/" + id + ".json";
    r.camera = "cameras/" + id + ".json";
    r.mask = "masks/" + id + ".png";
    r.donors = "donors/" + id + ".json";
    write_png(root / r.image, render_identity(posed, camera, tex));
    write_png(root / r.mask, p.visibility);
    Json pj = pose_to_json(p.pose);
    pj["bucket"] = bucket;
    write_json(root / r.pose, pj);
    write_json(root / r.camera, camera_to_json(camera));
    samples.push_back(std::move(p));
  };

  for (int k = 0; k < config.paired_identities; ++k) {
    const std::string identity = "p" + two_digits(k);
    Rng id_rng = stream(seed, "identities", static_cast<std::uint64_t>(k));
    const TextureMap tex = identity_texture(make_identity(id_rng), 256, body);
    write_png(root / "textures" / (identity + ".png"), tex.pixels);
    Rng pose_rng = stream(seed, "poses", static_cast<std::uint64_t>(k));
    std::vector<int> buckets(kPoseBuckets);
    std::iota(buckets.begin(), buckets.end(), 0);
    std::shuffle(buckets.begin(), buckets.end(), pose_rng);
    for (int i = 0; i < config.poses_per_identity; ++i) {
      render_sample(identity + "_a" + std::to_string(i), identity, tex, buckets[static_cast<size_t>(i)], pose_rng, true);
    }
    for (int h = 0; h < config.heldout_poses; ++h) {
      render_sample(identity + "_h" + std::to_string(h), identity, tex,
                    buckets[static_cast<size_t>(config.poses_per_identity + h)], pose_rng, false);
    }
  }
  for (int k = 0; k < config.unpaired_identities; ++k) {
    const std::string identity = "u" + two_digits(k);
    Rng id_rng = stream(seed, "identities", 1000000u + static_cast<std::uint64_t>(k));
    const TextureMap tex = identity_texture(make_identity(id_rng), 256, body);
    write_png(root / "textures" / (identity + ".png"), tex.pixels);
    Rng pose_rng = stream(seed, "poses", 1000000u + static_cast<std::uint64_t>(k));
    const int bucket = std::uniform_int_distribution<int>(0, kPoseBuckets - 1)(pose_rng);
    render_sample(identity + "_s0", identity, tex, bucket, pose_rng, true);
  }

  // Donor pools over every training sample, excluding the sample itself.
  std::vector<size_t> train_idx;
  for (size_t i = 0; i < samples.size(); ++i)
    if (samples[i].training) train_idx.push_back(i);
  for (size_t i = 0; i < samples.size(); ++i) {
    std::vector<Mask> cands;
    std::vector<std::string> ids;
    for (size_t j : train_idx) {
      if (j == i) continue;
      cands.push_back(samples[j].visibility);
      ids.push_back(samples[j].record.id);
    }
    DonorPool pool;
    pool.source_id = samples[i].record.id;
    if (samples[i].training) {
      Rng drng = stream(seed, "donors", i);
      pool = build_donor_pool(samples[i].visibility, cands, ids, config.donor, drng, samples[i].record.id);
      if (pool.exhausted()) warn("sample " + samples[i].record.id + ": no donor in the IoU band; patch masking will be used");
    }
    write_json(root / samples[i].record.donors, donor_pool_to_json(pool));
  }

  Dataset ds;
  ds.root = root;
  ds.paired.kind = ManifestKind::kPaired;
  ds.unpaired.kind = ManifestKind::kUnpaired;
  ds.eval.kind = ManifestKind::kEval;
  std::map<std::string, std::vector<size_t>> by_identity;
  for (size_t i = 0; i < samples.size(); ++i)
    if (samples[i].training) by_identity[samples[i].record.identity].push_back(i);
  for (const auto& [identity, idx] : by_identity) {
    if (identity[0] == 'p') {
      for (size_t k = 0; k < idx.size(); ++k) {
        SampleRecord r = samples[idx[k]].record;
        r.partner = samples[idx[(k + 1) % idx.size()]].record.id;
        ds.paired.samples.push_back(r);
      }
    }
    ds.unpaired.samples.push_back(samples[idx[0]].record);
  }
  for (const auto& p : samples) {
    if (p.training) continue;
    SampleRecord r = p.record;
    r.partner = r.identity + "_a0";
    ds.eval.samples.push_back(r);
  }
  write_manifest(root / "paired.json", ds.paired);
  write_manifest(root / "unpaired.json", ds.unpaired);
  write_manifest(root / "eval.json", ds.eval);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& root) {
  Dataset ds;
  ds.root = root;
  ds.paired = read_manifest(root / "paired.json", root);
  ds.unpaired = read_manifest(root / "unpaired.json", root);
  ds.eval = read_manifest(root / "eval.json", root);
  std::set<std::string> train_ids;
  for (const auto& s : ds.training_samples()) train_ids.insert(s.id);
  auto check_partner = [&](const SampleRecord& s, const DatasetManifest& partners) {
    if (!s.partner) throw InputError("sample " + s.id + " has no partner");
    const SampleRecord* p = partners.find(*s.partner);
    if (!p) throw InputError("sample " + s.id + " names unknown partner " + *s.partner);
    if (p->identity != s.identity) throw InputError("sample " + s.id + " is paired across identities");
    if (p->id == s.id) throw InputError("sample " + s.id + " is paired with itself");
    const PoseParams a = pose_from_json(read_json(root / s.pose));
    const PoseParams b = pose_from_json(read_json(root / p->pose));
    if (a == b) throw InputError("sample " + s.id + " shares pose parameters with its partner");
  };
  for (const auto& s : ds.paired.samples) check_partner(s, ds.paired);
  for (const auto& s : ds.eval.samples) {
    check_partner(s, ds.paired);
    if (train_ids.count(s.id)) throw InputError("evaluation sample " + s.id + " appears in a training manifest");
  }
  for (const auto& s : ds.training_samples()) {
    const DonorPool pool = donor_pool_from_json(read_json(root / s.donors));
    for (const auto& d : pool.donors)
      if (!train_ids.count(d.id)) throw InputError("sample " + s.id + " names unknown donor " + d.id);
  }
  return ds;
}

LoadedSample load_sample(const Dataset& ds, const SampleRecord& r) {
  LoadedSample s;
  s.record = r;
  s.image = read_png(ds.root / r.image);
  s.pose = pose_from_json(read_json(ds.root / r.pose));
  s.camera = camera_from_json(read_json(ds.root / r.camera));
  s.visibility = read_mask_png(ds.root / r.mask);
  s.pool = donor_pool_from_json(read_json(ds.root / r.donors));
  return s;
}

}  // namespace uvr
