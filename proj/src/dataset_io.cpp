#include "checkerboard/dataset_io.hpp"

#include <openssl/evp.h>
#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <set>
#include <sstream>

namespace checkerboard {

namespace {

constexpr char kMagic[4] = {'F', '3', '2', 'T'};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(bytes[at + k]) << (8 * k);
  return v;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

std::uint32_t checked_dim(std::size_t v) {
  if (v == 0 || v > 0xFFFFFFFFu) throw InvalidInput("tensor dimension out of range");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t Tensor::element_count() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  if (t.dims.empty()) throw InvalidInput("encode_tensor: tensor has no dimensions");
  for (auto d : t.dims) {
    if (d == 0) throw InvalidInput("encode_tensor: zero dimension");
  }
  if (t.element_count() != t.data.size()) {
    throw InvalidInput("encode_tensor: dims do not match data length");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.reserve(8 + 4 * t.dims.size() + 4 * t.data.size());
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (auto d : t.dims) put_u32(out, d);
  for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("TensorFile: truncated header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("TensorFile: bad magic");
  const std::uint32_t ndim = get_u32(bytes, 4);
  if (ndim == 0) throw FormatError("TensorFile: ndim is 0");
  const std::size_t header = 8 + 4 * static_cast<std::size_t>(ndim);
  if (bytes.size() < header) throw FormatError("TensorFile: truncated dims");
  Tensor t;
  std::size_t count = 1;
  for (std::uint32_t k = 0; k < ndim; ++k) {
    const std::uint32_t d = get_u32(bytes, 8 + 4 * k);
    if (d == 0) throw FormatError("TensorFile: zero dimension");
    t.dims.push_back(d);
    count *= d;
    if (count > bytes.size()) throw FormatError("TensorFile: dims exceed payload");
  }
  if (bytes.size() - header != count * 4) {
    throw FormatError("TensorFile: payload is " + std::to_string(bytes.size() - header) +
                      " bytes, dims declare " + std::to_string(count * 4));
  }
  t.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    t.data[i] = std::bit_cast<float>(get_u32(bytes, header + 4 * i));
  }
  return t;
}

void save_tensor(const Tensor& t, const fs::path& path) {
  write_file(path, encode_tensor(t));
}

Tensor load_tensor(const fs::path& path) {
  try {
    return decode_tensor(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Tensor to_tensor(const LuminanceTemplate& g) {
  Tensor t{{checked_dim(g.height), checked_dim(g.width)}, {}};
  t.data.assign(g.values.begin(), g.values.end());
  return t;
}

Tensor to_tensor(const TriggerPattern& p) {
  Tensor t{{checked_dim(p.height), checked_dim(p.width), checked_dim(p.channels)}, {}};
  t.data.assign(p.values.begin(), p.values.end());
  return t;
}

Tensor to_tensor(const ImageTensor& x) {
  Tensor t{{checked_dim(x.height), checked_dim(x.width), checked_dim(x.channels)}, {}};
  t.data.assign(x.data.begin(), x.data.end());
  return t;
}

LuminanceTemplate template_from_tensor(const Tensor& t) {
  if (t.dims.size() != 2) throw FormatError("template tensor must be 2-D (H x W)");
  LuminanceTemplate g{t.dims[0], t.dims[1], {t.data.begin(), t.data.end()}};
  for (double v : g.values) {
    if (!(v >= -1.0 && v <= 1.0)) throw FormatError("template value outside [-1, 1]");
  }
  return g;
}

ImageTensor image_from_tensor(const Tensor& t) {
  if (t.dims.size() != 3) throw FormatError("image tensor must be 3-D (H x W x C)");
  return ImageTensor(t.dims[0], t.dims[1], t.dims[2], {t.data.begin(), t.data.end()});
}

Tensor images_tensor(const LabeledDataset& d) {
  if (d.images.empty()) throw InvalidInput("images_tensor: empty dataset");
  const auto& first = d.images.front();
  Tensor t{{checked_dim(d.size()), checked_dim(first.height), checked_dim(first.width),
            checked_dim(first.channels)},
           {}};
  t.data.reserve(t.element_count());
  for (const auto& img : d.images) {
    if (!img.same_shape(first)) throw InvalidInput("images_tensor: mixed image shapes");
    t.data.insert(t.data.end(), img.data.begin(), img.data.end());
  }
  return t;
}

Tensor labels_tensor(const LabeledDataset& d) {
  Tensor t{{checked_dim(d.size())}, {}};
  for (auto l : d.labels) t.data.push_back(static_cast<float>(l));
  return t;
}

double unit_from_byte(std::uint8_t b) {
  return static_cast<double>(static_cast<float>(static_cast<double>(b) / 255.0));
}

std::uint8_t byte_from_unit(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::string dataset_fingerprint(const LabeledDataset& d) {
  const auto images = encode_tensor(images_tensor(d));
  const auto labels = encode_tensor(labels_tensor(d));
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), images.data(), images.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), labels.data(), labels.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error("sha256 digest failed");
  }
  std::ostringstream hex;
  hex << "sha256:";
  for (unsigned i = 0; i < len; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

// --- CIFAR-10 -------------------------------------------------------------

LabeledDataset load_cifar10(std::span<const fs::path> paths) {
  if (paths.empty()) throw InvalidInput("load_cifar10: no batch files given");
  LabeledDataset d;
  d.class_count = 10;
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  for (const auto& path : paths) {
    const auto bytes = read_file(path);
    if (bytes.empty() || bytes.size() % kCifarRecordBytes != 0) {
      throw FormatError(path.string() + ": size " + std::to_string(bytes.size()) +
                        " is not a positive multiple of " +
                        std::to_string(kCifarRecordBytes));
    }
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    for (std::size_t r = 0; r < records; ++r) {
      const std::uint8_t* rec = bytes.data() + r * kCifarRecordBytes;
      if (rec[0] > 9) {
        throw FormatError(path.string() + ": record " + std::to_string(r) + " has label " +
                          std::to_string(rec[0]));
      }
      ImageTensor img(kCifarSide, kCifarSide, 3);
      for (std::size_t p = 0; p < plane; ++p)
        for (std::size_t c = 0; c < 3; ++c)
          img.data[p * 3 + c] = unit_from_byte(rec[1 + c * plane + p]);
      d.images.push_back(std::move(img));
      d.labels.push_back(rec[0]);
    }
  }
  return d;
}

void save_cifar10(const LabeledDataset& d, const fs::path& path) {
  d.validate();
  constexpr std::size_t plane = kCifarSide * kCifarSide;
  std::vector<std::uint8_t> bytes;
  bytes.reserve(d.size() * kCifarRecordBytes);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& img = d.images[i];
    if (img.height != kCifarSide || img.width != kCifarSide || img.channels != 3) {
      throw InvalidInput("save_cifar10: images must be 32x32x3");
    }
    if (d.labels[i] > 9) throw InvalidInput("save_cifar10: label exceeds 9");
    bytes.push_back(static_cast<std::uint8_t>(d.labels[i]));
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t p = 0; p < plane; ++p)
        bytes.push_back(byte_from_unit(img.data[p * 3 + c]));
  }
  write_file(path, bytes);
}

// --- PNG ------------------------------------------------------------------

ImageTensor read_png(const fs::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&image, path.c_str()) == 0) {
    throw FormatError(path.string() + ": not a decodable PNG (" + image.message + ")");
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr) == 0) {
    std::string msg = image.message;
    png_image_free(&image);
    throw FormatError(path.string() + ": PNG decode failed (" + msg + ")");
  }
  const std::size_t channels = color ? 3 : 1;
  ImageTensor x(image.height, image.width, channels);
  for (std::size_t k = 0; k < x.data.size(); ++k) x.data[k] = unit_from_byte(buffer[k]);
  return x;
}

void write_png(const ImageTensor& x, const fs::path& path) {
  if (x.channels != 1 && x.channels != 3) {
    throw InvalidInput("write_png: channels must be 1 or 3");
  }
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(x.width);
  image.height = static_cast<png_uint_32>(x.height);
  image.format = x.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<png_byte> buffer(x.data.size());
  for (std::size_t k = 0; k < x.data.size(); ++k) buffer[k] = byte_from_unit(x.data[k]);
  if (png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr) == 0) {
    throw FormatError(path.string() + ": PNG encode failed (" + image.message + ")");
  }
}

LabeledDataset load_image_dir(const fs::path& root) {
  if (!fs::is_directory(root)) throw FormatError(root.string() + ": not a directory");
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) class_dirs.push_back(e.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty()) throw FormatError(root.string() + ": no class subdirectories");
  LabeledDataset d;
  d.class_count = class_dirs.size();
  for (std::size_t c = 0; c < class_dirs.size(); ++c) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(class_dirs[c])) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      ImageTensor img = read_png(f);
      if (!d.images.empty() && !img.same_shape(d.images.front())) {
        throw FormatError(f.string() + ": dimensions differ from " +
                          std::to_string(d.images.front().height) + "x" +
                          std::to_string(d.images.front().width) + "x" +
                          std::to_string(d.images.front().channels));
      }
      d.images.push_back(std::move(img));
      d.labels.push_back(c);
    }
  }
  if (d.images.empty()) throw FormatError(root.string() + ": no images found");
  return d;
}

void export_image_dir(const LabeledDataset& d, const fs::path& root) {
  d.validate();
  for (std::size_t c = 0; c < d.class_count; ++c) {
    std::ostringstream name;
    name << "class_" << std::setw(3) << std::setfill('0') << c;
    fs::create_directories(root / name.str());
  }
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::ostringstream cls;
    cls << "class_" << std::setw(3) << std::setfill('0') << d.labels[i];
    std::ostringstream file;
    file << std::setw(7) << std::setfill('0') << i << ".png";
    write_png(d.images[i], root / cls.str() / file.str());
  }
}

// --- Bundles --------------------------------------------------------------

void save_bundle(const LabeledDataset& d, const BundleMeta& meta, const fs::path& dir) {
  d.validate();
  fs::create_directories(dir);
  save_tensor(images_tensor(d), dir / "images.f32t");
  save_tensor(labels_tensor(d), dir / "labels.f32t");
  nlohmann::json j = {{"class_count", d.class_count},
                      {"source", meta.source},
                      {"created_by", meta.created_by}};
  if (meta.manifest) j["manifest"] = *meta.manifest;
  write_json(j, dir / "meta.json");
}

Bundle load_bundle(const fs::path& dir) {
  const nlohmann::json meta_json = read_json(dir / "meta.json");
  Bundle b;
  try {
    if (!meta_json.is_object()) throw FormatError("meta.json: expected an object");
    static const std::set<std::string> allowed = {"class_count", "source", "created_by",
                                                  "manifest"};
    for (const auto& [key, value] : meta_json.items()) {
      if (!allowed.contains(key)) throw FormatError("meta.json: unknown field /" + key);
    }
    if (!meta_json.contains("class_count") ||
        !meta_json["class_count"].is_number_integer() ||
        meta_json["class_count"].get<std::int64_t>() < 0) {
      throw FormatError("meta.json: /class_count must be a non-negative integer");
    }
    b.dataset.class_count = meta_json["class_count"].get<std::size_t>();
    b.meta.source = meta_json.value("source", "unknown");
    b.meta.created_by = meta_json.value("created_by", "unknown");
    if (meta_json.contains("manifest")) b.meta.manifest = meta_json["manifest"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("meta.json: ") + e.what());
  }

  const Tensor images = load_tensor(dir / "images.f32t");
  const Tensor labels = load_tensor(dir / "labels.f32t");
  if (images.dims.size() != 4) throw FormatError("images.f32t must be N x H x W x C");
  if (labels.dims.size() != 1) throw FormatError("labels.f32t must be 1-D");
  if (labels.dims[0] != images.dims[0]) {
    throw FormatError("bundle: " + std::to_string(images.dims[0]) + " images but " +
                      std::to_string(labels.dims[0]) + " labels");
  }
  const std::size_t n = images.dims[0];
  const std::size_t per = static_cast<std::size_t>(images.dims[1]) * images.dims[2] * images.dims[3];
  for (std::size_t i = 0; i < n; ++i) {
    const float l = labels.data[i];
    if (!(l >= 0.0f) || l != std::floor(l) ||
        static_cast<std::size_t>(l) >= b.dataset.class_count) {
      throw FormatError("labels.f32t: entry " + std::to_string(i) + " = " +
                        std::to_string(l) + " is not a class index");
    }
    b.dataset.labels.push_back(static_cast<std::size_t>(l));
    b.dataset.images.emplace_back(
        images.dims[1], images.dims[2], images.dims[3],
        std::vector<double>(images.data.begin() + static_cast<std::ptrdiff_t>(i * per),
                            images.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * per)));
  }
  return b;
}

LabeledDataset load_any_dataset(std::span<const fs::path> paths) {
  if (paths.empty()) throw InvalidInput("no dataset path given");
  if (paths.size() == 1 && fs::is_directory(paths[0])) {
    if (fs::exists(paths[0] / "meta.json")) return load_bundle(paths[0]).dataset;
    return load_image_dir(paths[0]);
  }
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) throw FormatError(p.string() + ": not a dataset file");
  }
  return load_cifar10(paths);
}

// --- JSON -----------------------------------------------------------------

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const nlohmann::json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw FormatError(where + "/" + key + ": unknown field");
  }
}

bool is_whole_nonnegative(const nlohmann::json& v) {
  if (v.is_number_unsigned()) return true;
  return v.is_number_integer() && v.get<std::int64_t>() >= 0;
}

const nlohmann::json& require(const nlohmann::json& j, const std::string& key,
                              const std::string& where) {
  if (!j.contains(key)) throw FormatError(where + "/" + key + ": missing field");
  return j.at(key);
}

std::uint64_t require_unsigned(const nlohmann::json& j, const std::string& key,
                               const std::string& where) {
  const auto& v = require(j, key, where);
  if (!is_whole_nonnegative(v)) {
    throw FormatError(where + "/" + key + ": expected a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

double require_number(const nlohmann::json& j, const std::string& key,
                      const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_number()) throw FormatError(where + "/" + key + ": expected a number");
  return v.get<double>();
}

std::string require_string(const nlohmann::json& j, const std::string& key,
                           const std::string& where) {
  const auto& v = require(j, key, where);
  if (!v.is_string()) throw FormatError(where + "/" + key + ": expected a string");
  return v.get<std::string>();
}

}  // namespace

nlohmann::json trigger_to_json(const TriggerSpec& spec) {
  nlohmann::json j = {{"kind", std::string(to_string(spec.kind))},
                      {"block_size", spec.block_size},
                      {"phase", spec.phase}};
  if (spec.seed) j["seed"] = *spec.seed;
  return j;
}

TriggerSpec trigger_from_json(const nlohmann::json& j, const std::string& where) {
  reject_unknown(j, {"kind", "block_size", "phase", "seed"}, where);
  TriggerSpec spec;
  try {
    spec.kind = parse_trigger_kind(require_string(j, "kind", where));
  } catch (const InvalidInput& e) {
    throw FormatError(where + "/kind: " + e.what());
  }
  spec.block_size = require_unsigned(j, "block_size", where);
  const auto& phase = require(j, "phase", where);
  if (!phase.is_number_integer()) throw FormatError(where + "/phase: expected +1 or -1");
  spec.phase = phase.get<int>();
  if (j.contains("seed")) spec.seed = require_unsigned(j, "seed", where);
  try {
    spec.validate();
  } catch (const InvalidInput& e) {
    throw FormatError(where + ": " + e.what());
  }
  return spec;
}

nlohmann::json manifest_to_json(const PoisonManifest& m) {
  return {{"target_class", m.target_class},
          {"alpha", m.alpha},
          {"gamma", m.gamma},
          {"trigger", trigger_to_json(m.trigger)},
          {"selection", std::string(to_string(m.selection))},
          {"seed", m.seed},
          {"poisoned_indices", m.poisoned_indices},
          {"dataset_fingerprint", m.dataset_fingerprint}};
}

PoisonManifest manifest_from_json(const nlohmann::json& j) {
  const std::string root;
  reject_unknown(j,
                 {"target_class", "alpha", "gamma", "trigger", "selection", "seed",
                  "poisoned_indices", "dataset_fingerprint"},
                 root);
  PoisonManifest m;
  m.target_class = require_unsigned(j, "target_class", root);
  m.alpha = require_number(j, "alpha", root);
  if (!(m.alpha > 0.0 && m.alpha <= 1.0)) throw FormatError("/alpha: must lie in (0, 1]");
  m.gamma = require_number(j, "gamma", root);
  if (!(m.gamma >= 1.0)) throw FormatError("/gamma: must be >= 1");
  if (m.gamma * m.alpha > 1.0) throw FormatError("/gamma: gamma * alpha exceeds 1");
  m.trigger = trigger_from_json(require(j, "trigger", root), "/trigger");
  try {
    m.selection = parse_selection(require_string(j, "selection", root));
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("/selection: ") + e.what());
  }
  m.seed = require_unsigned(j, "seed", root);
  const auto& indices = require(j, "poisoned_indices", root);
  if (!indices.is_array()) throw FormatError("/poisoned_indices: expected an array");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (!is_whole_nonnegative(indices[k])) {
      throw FormatError("/poisoned_indices/" + std::to_string(k) +
                        ": expected a non-negative integer");
    }
    const auto v = indices[k].get<std::size_t>();
    if (k > 0 && v <= m.poisoned_indices.back()) {
      throw FormatError("/poisoned_indices/" + std::to_string(k) +
                        ": indices must be strictly ascending");
    }
    m.poisoned_indices.push_back(v);
  }
  m.dataset_fingerprint = require_string(j, "dataset_fingerprint", root);
  return m;
}

void write_manifest(const PoisonManifest& m, const fs::path& path) {
  m.validate();
  write_json(manifest_to_json(m), path);
}

PoisonManifest read_manifest(const fs::path& path) {
  try {
    return manifest_from_json(read_json(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace checkerboard
