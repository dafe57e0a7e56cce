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
#include "uvr/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace uvr {

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

StrictObject::StrictObject(const Json& j, std::string where) : j_(&j), where_(std::move(where)) {
  if (!j.is_object()) throw ConfigError(where_ + " must be a JSON object");
}

bool StrictObject::has(const std::string& key) const { return j_->contains(key); }

const Json& StrictObject::at(const std::string& key) {
  if (!has(key)) throw ConfigError(where_ + ": missing key '" + key + "'");
  seen_.insert(key);
  return j_->at(key);
}

StrictObject StrictObject::child(const std::string& key) {
  static const Json empty = Json::object();
  if (!has(key)) return StrictObject(empty, where_ + "." + key);
  return StrictObject(at(key), where_ + "." + key);
}

void StrictObject::finish() const {
  for (const auto& [key, value] : j_->items()) {
    if (!seen_.count(key)) throw ConfigError(where_ + ": unknown key '" + key + "'");
  }
}

void write_obj(const std::filesystem::path& path, const Mesh& mesh) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "# uvrepose body mesh\n";
  char buf[128];
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", mesh.vertices(0, v), mesh.vertices(1, v), mesh.vertices(2, v));
    out << buf;
  }
  for (Eigen::Index v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(buf, sizeof buf, "vt %.9g %.9g\n", mesh.uv(0, v), 1.0 - mesh.uv(1, v));
    out << buf;
  }
  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const int a = mesh.faces(0, f) + 1, b = mesh.faces(1, f) + 1, c = mesh.faces(2, f) + 1;
    out << "f " << a << '/' << a << ' ' << b << '/' << b << ' ' << c << '/' << c << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Json pose_to_json(const PoseParams& pose) {
  Json j;
  Json angles = Json::object();
  for (int k = 0; k < kJointCount; ++k) angles[std::string(joint_name(static_cast<Joint>(k)))] = pose.angles[k];
  j["angles"] = angles;
  j["rotation"] = {pose.rotation.x(), pose.rotation.y(), pose.rotation.z()};
  j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  return j;
}

namespace {

Eigen::Vector3d vec3(const Json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) throw InputError(what + " must be an array of 3 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

}  // namespace

PoseParams pose_from_json(const Json& j) {
  PoseParams p;
  try {
    StrictObject o(j, "pose");
    StrictObject a = o.child("angles");
    for (int k = 0; k < kJointCount; ++k) {
      const std::string name(joint_name(static_cast<Joint>(k)));
      if (a.has(name)) p.angles[k] = a.at(name).get<double>();
    }
    a.finish();
    if (o.has("rotation")) p.rotation = vec3(o.at("rotation"), "pose.rotation");
    if (o.has("translation")) p.translation = vec3(o.at("translation"), "pose.translation");
    if (o.has("bucket")) o.at("bucket");
    o.finish();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("pose: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  }
  return p;
}

Json camera_to_json(const Camera& c) {
  Json j;
  j["focal"] = c.focal;
  j["principal"] = {c.principal.x(), c.principal.y()};
  j["width"] = c.width;
  j["height"] = c.height;
  Json rows = Json::array();
  for (int r = 0; r < 3; ++r) {
    Json row = Json::array();
    for (int k = 0; k < 4; ++k) row.push_back(c.cam_to_world.matrix()(r, k));
    rows.push_back(row);
  }
  j["cam_to_world"] = rows;
  return j;
}

Camera camera_from_json(const Json& j) {
  Camera c;
  try {
    StrictObject o(j, "camera");
    c.focal = o.at("focal").get<double>();
    const Json& pp = o.at("principal");
    if (!pp.is_array() || pp.size() != 2) throw InputError("camera.principal must have 2 entries");
    c.principal = {pp[0].get<double>(), pp[1].get<double>()};
    c.width = o.at("width").get<int>();
    c.height = o.at("height").get<int>();
    const Json& m = o.at("cam_to_world");
    if (!m.is_array() || m.size() != 3) throw InputError("camera.cam_to_world must be 3 rows of 4");
    for (int r = 0; r < 3; ++r) {
      if (!m[r].is_array() || m[r].size() != 4) throw InputError("camera.cam_to_world must be 3 rows of 4");
      for (int k = 0; k < 4; ++k) c.cam_to_world.matrix()(r, k) = m[r][k].get<double>();
    }
    o.finish();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("camera: ") + e.what());
  } catch (const ConfigError& e) {
    throw InputError(e.what());
  }
  c.validate();
  return c;
}

Json donor_pool_to_json(const DonorPool& pool) {
  Json j;
  j["source"] = pool.source_id;
  Json donors = Json::array();
  for (const auto& d : pool.donors) donors.push_back({{"id", d.id}, {"iou", d.iou}});
  j["donors"] = donors;
  return j;
}

DonorPool donor_pool_from_json(const Json& j) {
  DonorPool pool;
  try {
    pool.source_id = j.at("source").get<std::string>();
    for (const auto& d : j.at("donors")) pool.donors.push_back({d.at("id").get<std::string>(), d.at("iou").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("donor pool: ") + e.what());
  }
  return pool;
}

// ---- checkpoints ------------------------------------------------------------

namespace {

void put_u32(std::ostream& out, std::uint32_t v) {
  const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                     static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw IoError(path + ": truncated tensor file");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const char* magic, const nn::TensorTable& table,
                   const Eigen::VectorXf& flat) {
  if (flat.size() != table.total()) throw InputError("tensor table and parameter vector differ in size");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(magic, 4);
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<std::uint32_t>(table.specs().size()));
  for (const auto& s : table.specs()) {
    put_u32(out, static_cast<std::uint32_t>(s.name.size()));
    out.write(s.name.data(), static_cast<std::streamsize>(s.name.size()));
    put_u32(out, static_cast<std::uint32_t>(s.dims.size()));
    for (auto d : s.dims) put_u32(out, d);
    put_u32(out, 0);  // f32
  }
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(table.specs().size()); ++i) {
    const auto m = table.map(flat, i);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(m(r, c)));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<StoredTensor> read_tensors(const std::filesystem::path& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  const std::string p = path.string();
  if (!in) throw IoError("cannot open " + p);
  char m[4];
  if (!in.read(m, 4)) throw IoError(p + ": truncated tensor file");
  if (std::memcmp(m, magic, 4) != 0) throw InputError(p + ": expected magic " + std::string(magic, 4));
  const std::uint32_t version = get_u32(in, p);
  if (version != kCheckpointVersion) throw InputError(p + ": unsupported version " + std::to_string(version));
  const std::uint32_t count = get_u32(in, p);
  std::vector<StoredTensor> out(count);
  for (auto& t : out) {
    const std::uint32_t len = get_u32(in, p);
    if (len > 4096) throw InputError(p + ": implausible tensor name length");
    t.name.resize(len);
    if (!in.read(t.name.data(), len)) throw IoError(p + ": truncated tensor file");
    const std::uint32_t rank = get_u32(in, p);
    if (rank > 8) throw InputError(p + ": implausible tensor rank");
    t.dims.resize(rank);
    for (auto& d : t.dims) d = get_u32(in, p);
    if (get_u32(in, p) != 0) throw InputError(p + ": tensor " + t.name + " is not f32");
  }
  for (auto& t : out) {
    size_t n = 1;
    for (auto d : t.dims) n *= d;
    t.data.resize(n);
    for (auto& v : t.data) v = std::bit_cast<float>(get_u32(in, p));
  }
  return out;
}

void load_tensors(const std::filesystem::path& path, const char* magic, const nn::TensorTable& table,
                  Eigen::VectorXf& flat) {
  const auto stored = read_tensors(path, magic);
  if (stored.size() != table.specs().size()) {
    throw ConfigError(path.string() + ": holds " + std::to_string(stored.size()) + " tensors, expected " +
                      std::to_string(table.specs().size()));
  }
  flat.resize(table.total());
  for (size_t i = 0; i < stored.size(); ++i) {
    const auto& s = table.specs()[i];
    if (stored[i].name != s.name || stored[i].dims != s.dims) {
      throw ConfigError(path.string() + ": tensor " + std::to_string(i) + " is '" + stored[i].name +
                        "' with a different shape than expected '" + s.name + "'");
    }
    auto m = table.map(flat, static_cast<Eigen::Index>(i));
    size_t k = 0;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = stored[i].data[k++];
  }
}

Json net_config_to_json(const ConvNetConfig& c) {
  return {{"resolution", c.resolution},
          {"width", c.width},
          {"data_channels", c.data_channels},
          {"cond_channels", c.cond_channels},
          {"presence_channels", c.presence_channels},
          {"time_frequencies", c.time_frequencies}};
}

ConvNetConfig net_config_from_json(const Json& j) {
  ConvNetConfig c;
  StrictObject o(j, "network");
  o.get("resolution", c.resolution);
  o.get("width", c.width);
  o.get("data_channels", c.data_channels);
  o.get("cond_channels", c.cond_channels);
  o.get("presence_channels", c.presence_channels);
  o.get("time_frequencies", c.time_frequencies);
  o.finish();
  c.validate();
  return c;
}

namespace {

Json vec_to_json(const Eigen::VectorXf& v) { return std::vector<float>(v.data(), v.data() + v.size()); }

Eigen::VectorXf vec_from_json(const Json& j) {
  const auto v = j.get<std::vector<float>>();
  return Eigen::Map<const Eigen::VectorXf>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::filesystem::path sidecar(const std::filesystem::path& path) { return path.string() + ".json"; }

}  // namespace

void save_model(const std::filesystem::path& path, const ConvVelocityNet<float>& net, const AdamW<float>& opt) {
  write_tensors(path, kModelMagic, net.table(), net.params());
  Json j;
  j["format"] = "UVFM";
  j["version"] = kCheckpointVersion;
  j["network"] = net_config_to_json(net.config());
  j["step"] = opt.step();
  const AdamWConfig& c = opt.config();
  j["optimizer"] = {{"lr", c.lr},
                    {"beta1", c.beta1},
                    {"beta2", c.beta2},
                    {"eps", c.eps},
                    {"weight_decay", c.weight_decay},
                    {"m", vec_to_json(opt.first_moment())},
                    {"v", vec_to_json(opt.second_moment())}};
  write_json(sidecar(path), j);
}

LoadedModel load_model(const std::filesystem::path& path) {
  const Json j = read_json(sidecar(path));
  try {
    ConvVelocityNet<float> net(net_config_from_json(j.at("network")));
    load_tensors(path, kModelMagic, net.table(), net.params());
    const Json& o = j.at("optimizer");
    AdamWConfig c{o.at("lr").get<double>(), o.at("beta1").get<double>(), o.at("beta2").get<double>(),
                  o.at("eps").get<double>(), o.at("weight_decay").get<double>()};
    AdamW<float> opt(c, net.param_count());
    opt.restore(j.at("step").get<long>(), vec_from_json(o.at("m")), vec_from_json(o.at("v")));
    return {std::move(net), std::move(opt)};
  } catch (const nlohmann::json::exception& e) {
    throw InputError(sidecar(path).string() + ": " + e.what());
  }
}

void save_adapter(const std::filesystem::path& path, const AdapterParams<float>& adapter, const ConvNetConfig& net) {
  write_tensors(path, kAdapterMagic, adapter.table, adapter.values);
  Json j;
  j["format"] = "UVLA";
  j["version"] = kCheckpointVersion;
  j["network"] = net_config_to_json(net);
  j["rank"] = adapter.config.rank;
  j["alpha"] = adapter.config.alpha;
  write_json(sidecar(path), j);
}

AdapterParams<float> load_adapter(const std::filesystem::path& path, const ConvVelocityNet<float>& net) {
  const Json j = read_json(sidecar(path));
  AdapterConfig ac;
  try {
    if (net_config_from_json(j.at("network")) != net.config()) {
      throw ConfigError(path.string() + ": adapter was trained for a different network");
    }
    ac.rank = j.at("rank").get<int>();
    ac.alpha = j.at("alpha").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(sidecar(path).string() + ": " + e.what());
  }
  AdapterParams<float> ad = net.make_adapter(ac);
  load_tensors(path, kAdapterMagic, ad.table, ad.values);
  return ad;
}

}  // namespace uvr
