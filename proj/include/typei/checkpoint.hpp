#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "typei/style_generator.hpp"
#include "typei/vae.hpp"

// Single-file versioned checkpoints.
//
// Layout (little-endian):
//   magic "TYPEICKP" | u32 format version | u64 header length | header JSON
//   | u32 array count | per array: u32 name length, name, u64 rows, u64 cols,
//   rows*cols f64 (column-major) | u64 FNV-1a digest of everything before it.
//
// The JSON header holds the model kind and every architecture hyperparameter,
// so a checkpoint can be loaded without out-of-band knowledge.
namespace typei {

inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind { vae, style_generator };

std::string to_string(ModelKind kind);

struct NamedArray {
  std::string name;
  Matrix value;
};

struct CheckpointContents {
  nlohmann::json header;
  std::vector<NamedArray> arrays;
};

void write_checkpoint_file(const std::filesystem::path& path, const nlohmann::json& header,
                           const std::vector<NamedArray>& arrays);
CheckpointContents read_checkpoint_file(const std::filesystem::path& path);

void save_checkpoint(const VaeModel& model, const std::filesystem::path& path);
void save_checkpoint(const StyleGenerator& generator, const std::filesystem::path& path);

using Model = std::variant<VaeModel, StyleGenerator>;

Model load_checkpoint(const std::filesystem::path& path);
VaeModel load_vae(const std::filesystem::path& path);
StyleGenerator load_style_generator(const std::filesystem::path& path);
// Reads and validates the whole file, returns the model kind only.
ModelKind checkpoint_kind(const std::filesystem::path& path);

nlohmann::json to_json(const VaeConfig& config);
VaeConfig vae_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StyleGeneratorConfig& config);
StyleGeneratorConfig style_config_from_json(const nlohmann::json& j);

}  // namespace typei
