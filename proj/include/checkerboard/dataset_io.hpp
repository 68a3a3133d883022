#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkerboard/core.hpp"
#include "checkerboard/poison.hpp"
#include "checkerboard/trigger.hpp"

namespace checkerboard {

namespace fs = std::filesystem;

// TensorFile layout, little-endian throughout:
//   "F32T" | ndim : u32 | dims : ndim x u32 | payload : prod(dims) x f32
struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t element_count() const;
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
void save_tensor(const Tensor& t, const fs::path& path);
Tensor load_tensor(const fs::path& path);

Tensor to_tensor(const LuminanceTemplate& g);    // H x W
Tensor to_tensor(const TriggerPattern& p);       // H x W x C
Tensor to_tensor(const ImageTensor& x);          // H x W x C
LuminanceTemplate template_from_tensor(const Tensor& t);
ImageTensor image_from_tensor(const Tensor& t);

Tensor images_tensor(const LabeledDataset& d);   // N x H x W x C
Tensor labels_tensor(const LabeledDataset& d);   // N

/// Byte intensity to the unit interval. Values are rounded to the nearest
/// float so that TensorFile export / import reproduces them exactly.
double unit_from_byte(std::uint8_t b);
std::uint8_t byte_from_unit(double v);

/// "sha256:<hex>" over encode_tensor(images) followed by encode_tensor(labels).
std::string dataset_fingerprint(const LabeledDataset& d);

// ---------------------------------------------------------------------------
// CIFAR-10 binary batches: per record 1 label byte + 3 x 1024 plane bytes.

inline constexpr std::size_t kCifarSide = 32;
inline constexpr std::size_t kCifarRecordBytes = 1 + 3 * kCifarSide * kCifarSide;

LabeledDataset load_cifar10(std::span<const fs::path> paths);
void save_cifar10(const LabeledDataset& d, const fs::path& path);

// ---------------------------------------------------------------------------
// PNG class directories: root/<class>/<file>.png

ImageTensor read_png(const fs::path& path);
void write_png(const ImageTensor& x, const fs::path& path);

LabeledDataset load_image_dir(const fs::path& root);
/// Writes root/class_NNN/NNNNNNN.png so lexicographic order restores labels.
void export_image_dir(const LabeledDataset& d, const fs::path& root);

// ---------------------------------------------------------------------------
// Dataset bundles: images.f32t, labels.f32t, meta.json

struct BundleMeta {
  std::string source = "unknown";
  std::string created_by = "checkerboard";
  std::optional<std::string> manifest;  // path relative to the bundle
};

struct Bundle {
  LabeledDataset dataset;
  BundleMeta meta;
};

void save_bundle(const LabeledDataset& d, const BundleMeta& meta, const fs::path& dir);
Bundle load_bundle(const fs::path& dir);

/// Loads a bundle directory, CIFAR-10 batch file(s) or a PNG class tree,
/// dispatching on what `paths` point at.
LabeledDataset load_any_dataset(std::span<const fs::path> paths);

// ---------------------------------------------------------------------------
// JSON documents

nlohmann::json trigger_to_json(const TriggerSpec& spec);
TriggerSpec trigger_from_json(const nlohmann::json& j, const std::string& where = "/trigger");

nlohmann::json manifest_to_json(const PoisonManifest& m);
/// Strict: unknown or missing fields and violated invariants raise
/// FormatError naming the JSON path.
PoisonManifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const PoisonManifest& m, const fs::path& path);
PoisonManifest read_manifest(const fs::path& path);

nlohmann::json read_json(const fs::path& path);
void write_json(const nlohmann::json& j, const fs::path& path);

}  // namespace checkerboard
