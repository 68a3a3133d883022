#include "checkerboard/core.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

namespace checkerboard {

namespace {
constexpr double kLumaR = 0.299;
constexpr double kLumaG = 0.587;
constexpr double kLumaB = 0.114;
}  // namespace

ImageTensor::ImageTensor(std::size_t h, std::size_t w, std::size_t c,
                         std::vector<double> values)
    : height(h), width(w), channels(c), data(std::move(values)) {
  if (data.size() != h * w * c) {
    throw InvalidInput("ImageTensor: data length " + std::to_string(data.size()) +
                       " does not match " + std::to_string(h) + "x" +
                       std::to_string(w) + "x" + std::to_string(c));
  }
}

bool ImageTensor::in_unit_range() const {
  return std::all_of(data.begin(), data.end(),
                     [](double e) { return e >= 0.0 && e <= 1.0; });
}

void LabeledDataset::validate() const {
  if (labels.size() != images.size()) {
    throw InvalidInput("dataset has " + std::to_string(images.size()) +
                       " images but " + std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw InvalidInput("label " + std::to_string(labels[i]) + " at index " +
                         std::to_string(i) + " is outside class_count " +
                         std::to_string(class_count));
    }
  }
  for (std::size_t i = 1; i < images.size(); ++i) {
    if (!images[i].same_shape(images[0])) {
      throw InvalidInput("image " + std::to_string(i) +
                         " shape differs from image 0");
    }
  }
}

ImageTensor clip_unit(ImageTensor x) {
  for (double& e : x.data) e = std::clamp(e, 0.0, 1.0);
  return x;
}

GrayImage to_gray(const ImageTensor& x) {
  GrayImage out(x.height, x.width);
  if (x.channels == 1) {
    out.data = x.data;
    return out;
  }
  if (x.channels != 3) {
    throw InvalidInput("to_gray: unsupported channel count " +
                       std::to_string(x.channels));
  }
  const std::size_t n = x.height * x.width;
  for (std::size_t p = 0; p < n; ++p) {
    const double* px = &x.data[p * 3];
    // Replicated channels must reproduce the source value bit-exactly.
    if (px[0] == px[1] && px[1] == px[2]) {
      out.data[p] = px[0];
    } else {
      out.data[p] = kLumaR * px[0] + kLumaG * px[1] + kLumaB * px[2];
    }
  }
  return out;
}

std::vector<ClassMember> class_view(const LabeledDataset& d, std::size_t c) {
  std::vector<ClassMember> members;
  for (std::size_t i : class_indices(d, c)) members.push_back({i, &d.images[i]});
  return members;
}

std::vector<std::size_t> class_indices(const LabeledDataset& d, std::size_t c) {
  if (c >= d.class_count) {
    throw InvalidInput("class " + std::to_string(c) + " out of range (class_count " +
                       std::to_string(d.class_count) + ")");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < d.labels.size(); ++i) {
    if (d.labels[i] == c) out.push_back(i);
  }
  return out;
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

unsigned threads_from_env() {
  const char* raw = std::getenv("CHECKERBOARD_THREADS");
  if (raw == nullptr) return 0;
  char* end = nullptr;
  unsigned long v = std::strtoul(raw, &end, 10);
  if (end == raw || *end != '\0') return 0;
  return static_cast<unsigned>(v);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  unsigned workers = static_cast<unsigned>(
      std::min<std::size_t>(resolve_threads(threads), count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count && !failed; i = next++) {
          try {
            fn(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace checkerboard
