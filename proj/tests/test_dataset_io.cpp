#include <doctest.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <unistd.h>

#include "checkerboard/dataset_io.hpp"
#include "checkerboard/reports.hpp"
#include "test_util.hpp"

using namespace checkerboard;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("checkerboard_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Dataset whose pixels are exact byte intensities.
LabeledDataset byte_dataset(std::mt19937_64& rng, std::size_t n, std::size_t h, std::size_t w,
                            std::size_t c, std::size_t classes) {
  LabeledDataset d;
  d.class_count = classes;
  for (std::size_t i = 0; i < n; ++i) {
    ImageTensor x(h, w, c);
    for (double& v : x.data) v = unit_from_byte(static_cast<std::uint8_t>(rng() & 0xFF));
    d.images.push_back(std::move(x));
    d.labels.push_back(i % classes);
  }
  return d;
}

PoisonManifest sample_manifest() {
  PoisonManifest m;
  m.target_class = 0;
  m.alpha = 10.0 / 255.0;
  m.gamma = 2.0;
  m.trigger = {TriggerKind::kCheckerboard, 1, 1, std::nullopt};
  m.selection = SelectionStrategy::kRandom;
  m.seed = 18446744073709551557ull;
  m.poisoned_indices = {3, 10, 29};
  m.dataset_fingerprint = "sha256:00";
  return m;
}

}  // namespace

TEST_CASE("TensorFile codec") {
  const Tensor t = to_tensor(checkerboard_template(2, 2));
  const auto bytes = encode_tensor(t);
  // Header: magic, ndim = 2, dims 2 and 2; then four floats.
  CHECK(bytes.size() == 4 + 4 + 8 + 16);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "F32T");
  CHECK(bytes[4] == 2);
  CHECK(bytes[8] == 2);
  // +1.0f little-endian is 00 00 80 3f.
  CHECK(bytes[16] == 0x00);
  CHECK(bytes[18] == 0x80);
  CHECK(bytes[19] == 0x3f);
  CHECK(decode_tensor(bytes) == t);
  CHECK(template_from_tensor(decode_tensor(bytes)) == checkerboard_template(2, 2));

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(decode_tensor(bad), FormatError);
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_tensor(truncated), FormatError);
  auto lying = bytes;
  lying[8] = 3;  // claims 3 x 2
  CHECK_THROWS_AS(decode_tensor(lying), FormatError);
  CHECK_THROWS_AS(encode_tensor(Tensor{{2, 0}, {}}), InvalidInput);
}

TEST_CASE("TensorFile round trip is bit-identical for arbitrary floats") {
  std::mt19937_64 rng(40);
  TempDir tmp;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor t;
    const std::size_t nd = 1 + rng() % 4;
    for (std::size_t k = 0; k < nd; ++k) t.dims.push_back(1 + static_cast<std::uint32_t>(rng() % 5));
    t.data.resize(t.element_count());
    for (float& f : t.data) f = std::bit_cast<float>(static_cast<std::uint32_t>(rng() & 0x7f7fffff));
    const auto path = tmp.path / ("t" + std::to_string(trial) + ".f32t");
    save_tensor(t, path);
    const auto back = load_tensor(path);
    CHECK(back.dims == t.dims);
    CHECK(std::memcmp(back.data.data(), t.data.data(), 4 * t.data.size()) == 0);
  }
  CHECK_THROWS_AS(load_tensor(tmp.path / "missing.f32t"), FormatError);
}

TEST_CASE("CIFAR-10 batches") {
  std::mt19937_64 rng(41);
  TempDir tmp;
  auto d = byte_dataset(rng, 25, 32, 32, 3, 10);
  const auto path = tmp.path / "batch.bin";
  save_cifar10(d, path);
  CHECK(fs::file_size(path) == 25 * 3073);

  const std::vector<fs::path> paths = {path};
  const auto back = load_cifar10(paths);
  CHECK(back.labels == d.labels);
  CHECK(back.class_count == 10);
  CHECK(back == d);

  // Channel planes: the first pixel byte of the record is red of pixel 0.
  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> rec(3073);
  in.read(reinterpret_cast<char*>(rec.data()), 3073);
  CHECK(unit_from_byte(rec[1]) == d.images[0].at(0, 0, 0));
  CHECK(unit_from_byte(rec[1 + 1024]) == d.images[0].at(0, 0, 1));
  CHECK(unit_from_byte(rec[1 + 2048 + 33]) == d.images[0].at(1, 1, 2));

  SUBCASE("a full batch is 10000 records") {
    CHECK(10000 * kCifarRecordBytes == 30730000);
  }
  SUBCASE("truncated file") {
    fs::resize_file(path, 3073 * 2 + 100);
    CHECK_THROWS_AS(load_cifar10(paths), FormatError);
  }
  SUBCASE("label out of range") {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.put(static_cast<char>(10));
    f.close();
    CHECK_THROWS_AS(load_cifar10(paths), FormatError);
  }
  SUBCASE("export quantizes within half a byte step") {
    auto noisy = d;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& img : noisy.images)
      for (double& v : img.data) v = u(rng);
    save_cifar10(noisy, path);
    const auto q = load_cifar10(paths);
    CHECK(q.labels == noisy.labels);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t k = 0; k < q.images[i].size(); ++k)
        CHECK(std::abs(q.images[i].data[k] - noisy.images[i].data[k]) <= 1.0 / 510.0 + 1e-7);
  }
}

TEST_CASE("PNG class directories") {
  std::mt19937_64 rng(42);
  TempDir tmp;
  SUBCASE("ordering and round trip") {
    for (auto [name, count] : {std::pair{"a", 2}, std::pair{"b", 3}}) {
      fs::create_directories(tmp.path / name);
      for (int k = 0; k < count; ++k) {
        ImageTensor x(5, 4, 3, unit_from_byte(static_cast<std::uint8_t>(40 * k)));
        write_png(x, tmp.path / name / ("img" + std::to_string(k) + ".png"));
      }
    }
    const auto d = load_image_dir(tmp.path);
    CHECK(d.labels == std::vector<std::size_t>{0, 0, 1, 1, 1});
    CHECK(d.class_count == 2);
    CHECK(d.images[4].at(0, 0, 0) == unit_from_byte(80));
  }
  SUBCASE("export / import preserves labels and bytes") {
    // Class directories group samples by label, so use a label-sorted dataset.
    auto d = byte_dataset(rng, 12, 6, 7, 3, 3);
    std::sort(d.labels.begin(), d.labels.end());
    export_image_dir(d, tmp.path / "out");
    const auto back = load_image_dir(tmp.path / "out");
    CHECK(back == d);
  }
  SUBCASE("grayscale images stay single-channel") {
    auto d = byte_dataset(rng, 4, 3, 3, 1, 2);
    std::sort(d.labels.begin(), d.labels.end());
    export_image_dir(d, tmp.path / "gray");
    CHECK(load_image_dir(tmp.path / "gray") == d);
  }
  SUBCASE("empty root") {
    CHECK_THROWS_AS(load_image_dir(tmp.path), FormatError);
  }
  SUBCASE("non-image file is named") {
    fs::create_directories(tmp.path / "a");
    write_png(ImageTensor(2, 2, 3), tmp.path / "a" / "ok.png");
    std::ofstream(tmp.path / "a" / "notes.txt") << "hello";
    try {
      load_image_dir(tmp.path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("notes.txt") != std::string::npos);
    }
  }
  SUBCASE("mixed dimensions") {
    fs::create_directories(tmp.path / "a");
    write_png(ImageTensor(2, 2, 3), tmp.path / "a" / "0.png");
    write_png(ImageTensor(3, 2, 3), tmp.path / "a" / "1.png");
    CHECK_THROWS_AS(load_image_dir(tmp.path), FormatError);
  }
}

TEST_CASE("dataset bundles") {
  std::mt19937_64 rng(43);
  TempDir tmp;
  auto d = byte_dataset(rng, 9, 4, 4, 3, 3);
  // Arbitrary doubles are stored as float; byte intensities survive exactly.
  save_bundle(d, {"synthetic", "test", "manifest.json"}, tmp.path / "b");
  const auto b = load_bundle(tmp.path / "b");
  CHECK(b.dataset == d);
  CHECK(b.meta.source == "synthetic");
  CHECK(b.meta.manifest == std::optional<std::string>("manifest.json"));

  const auto meta = read_json(tmp.path / "b" / "meta.json");
  CHECK(meta["class_count"] == 3);

  SUBCASE("label outside class_count") {
    auto j = meta;
    j["class_count"] = 2;
    write_json(j, tmp.path / "b" / "meta.json");
    CHECK_THROWS_AS(load_bundle(tmp.path / "b"), FormatError);
  }
  SUBCASE("unknown meta field") {
    auto j = meta;
    j["extra"] = 1;
    write_json(j, tmp.path / "b" / "meta.json");
    CHECK_THROWS_AS(load_bundle(tmp.path / "b"), FormatError);
  }
  SUBCASE("N mismatch") {
    save_tensor(Tensor{{2}, {0.0f, 1.0f}}, tmp.path / "b" / "labels.f32t");
    CHECK_THROWS_AS(load_bundle(tmp.path / "b"), FormatError);
  }
  SUBCASE("fractional label") {
    auto labels = labels_tensor(d);
    labels.data[0] = 0.5f;
    save_tensor(labels, tmp.path / "b" / "labels.f32t");
    CHECK_THROWS_AS(load_bundle(tmp.path / "b"), FormatError);
  }
  SUBCASE("load_any_dataset dispatch") {
    const std::vector<fs::path> one = {tmp.path / "b"};
    CHECK(load_any_dataset(one) == d);
  }
}

TEST_CASE("dataset_fingerprint") {
  std::mt19937_64 rng(44);
  auto d = byte_dataset(rng, 5, 3, 3, 3, 2);
  const auto f = dataset_fingerprint(d);
  CHECK(f.rfind("sha256:", 0) == 0);
  CHECK(f.size() == 7 + 64);
  CHECK(dataset_fingerprint(d) == f);
  d.labels[0] = 1;
  CHECK(dataset_fingerprint(d) != f);
}

TEST_CASE("manifest JSON") {
  TempDir tmp;
  const auto m = sample_manifest();
  write_manifest(m, tmp.path / "m.json");
  CHECK(read_manifest(tmp.path / "m.json") == m);

  auto noise = m;
  noise.trigger = {TriggerKind::kSaltPepper, 2, -1, 77};
  CHECK(manifest_from_json(manifest_to_json(noise)) == noise);

  auto expect_error = [](nlohmann::json j, const std::string& path_fragment) {
    try {
      manifest_from_json(j);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find(path_fragment) != std::string::npos);
    }
  };
  auto j = manifest_to_json(m);
  SUBCASE("negative alpha") {
    j["alpha"] = -0.1;
    expect_error(j, "/alpha");
  }
  SUBCASE("unsorted indices") {
    j["poisoned_indices"] = {5, 3};
    expect_error(j, "/poisoned_indices/1");
  }
  SUBCASE("unknown field") {
    j["comment"] = "x";
    expect_error(j, "/comment");
  }
  SUBCASE("missing field") {
    j.erase("seed");
    expect_error(j, "/seed");
  }
  SUBCASE("bad trigger") {
    j["trigger"]["kind"] = "random_noise";
    expect_error(j, "/trigger");
  }
  SUBCASE("unknown trigger field") {
    j["trigger"]["amplitude"] = 1;
    expect_error(j, "/trigger/amplitude");
  }
  SUBCASE("gamma alpha product") {
    j["gamma"] = 40.0;
    expect_error(j, "/gamma");
  }
}

TEST_CASE("report JSON field names") {
  CgeReport c{2, {{1, 0.5}, {4, 0.25}}, {4, 1}};
  const auto cj = report_to_json(c);
  CHECK(cj["class"] == 2);
  CHECK(cj["entries"][1]["index"] == 4);
  CHECK(cj["ranking"] == nlohmann::json({4, 1}));

  DetectionReport d;
  d.per_class = {{0, 10, 0.1, 0.02, 0.0}, {1, 10, 0.2, 0.03, 0.1}};
  d.flagged_class = 1;
  const auto dj = report_to_json(d);
  CHECK(dj["classes"][1]["s"] == 0.1);
  CHECK(dj["flagged_class"] == 1);
  CHECK(dj["t"] == 2.5);
  CHECK(dj.contains("eps"));

  SeparabilityReport s;
  s.direction = Eigen::Vector2d(3, 4);
  s.empirical_fdr = {0.0, true};
  const auto sj = report_to_json(s);
  CHECK(sj["direction_norm"] == 5.0);
  CHECK(sj["empirical_fdr"] == "inf");
  for (const char* key : {"analytic_jstat", "ridge", "sample_count"}) CHECK(sj.contains(key));

  const auto oj = report_to_json(brute_force_optimum(3, 3), 3, 3);
  CHECK(oj["max"] == 48);
  CHECK(oj["maximizer_count"] == 2);
  CHECK(oj["checkerboard_phases_only"] == true);
}
