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
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "uvr/body.hpp"
#include "uvr/donor.hpp"
#include "uvr/flow.hpp"

namespace uvr {

using Json = nlohmann::ordered_json;

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Reads fields of a JSON object and rejects keys nobody asked for.
class StrictObject {
 public:
  StrictObject(const Json& j, std::string where);

  bool has(const std::string& key) const;
  const Json& at(const std::string& key);
  template <typename T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where_ + "." + key + ": " + e.what());
    }
  }
  StrictObject child(const std::string& key);
  /// Throws ConfigError naming the first key that was never read.
  void finish() const;

 private:
  const Json* j_;
  std::string where_;
  std::set<std::string> seen_;
};

// ---- geometry files ---------------------------------------------------------

void write_obj(const std::filesystem::path& path, const Mesh& mesh);

Json pose_to_json(const PoseParams& pose);
PoseParams pose_from_json(const Json& j);
Json camera_to_json(const Camera& camera);
Camera camera_from_json(const Json& j);

Json donor_pool_to_json(const DonorPool& pool);
DonorPool donor_pool_from_json(const Json& j);

// ---- checkpoints ------------------------------------------------------------

inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr char kModelMagic[] = "UVFM";
inline constexpr char kAdapterMagic[] = "UVLA";

struct StoredTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;  // row-major
};

/// Binary tensor file: magic, u32 version, u32 count, per tensor (u32 name
/// length, name, u32 rank, u32 dims, u32 dtype = 0 for f32), then the
/// row-major little-endian payloads in table order.
void write_tensors(const std::filesystem::path& path, const char* magic, const nn::TensorTable& table,
                   const Eigen::VectorXf& flat);
std::vector<StoredTensor> read_tensors(const std::filesystem::path& path, const char* magic);
/// Reads a tensor file into `flat`, requiring names and shapes to match `table`.
void load_tensors(const std::filesystem::path& path, const char* magic, const nn::TensorTable& table,
                  Eigen::VectorXf& flat);

Json net_config_to_json(const ConvNetConfig& c);
ConvNetConfig net_config_from_json(const Json& j);

/// Model checkpoint: <path> binary plus <path>.json sidecar holding the
/// network config, step count and optimizer state.
void save_model(const std::filesystem::path& path, const ConvVelocityNet<float>& net, const AdamW<float>& opt);
struct LoadedModel {
  ConvVelocityNet<float> net;
  AdamW<float> optimizer;
};
LoadedModel load_model(const std::filesystem::path& path);

void save_adapter(const std::filesystem::path& path, const AdapterParams<float>& adapter, const ConvNetConfig& net);
AdapterParams<float> load_adapter(const std::filesystem::path& path, const ConvVelocityNet<float>& net);

}  // namespace uvr
