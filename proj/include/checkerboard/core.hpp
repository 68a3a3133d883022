#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "checkerboard/error.hpp"

namespace checkerboard {

/// H x W x C image, row-major with the channel index fastest.
///
/// Values are unit-interval intensities once they have passed through
/// clip_unit(). Intermediate results such as x + alpha * delta use the same
/// type and may leave the range until clipped.
struct ImageTensor {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  ImageTensor() = default;
  ImageTensor(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}
  ImageTensor(std::size_t h, std::size_t w, std::size_t c,
              std::vector<double> values);

  std::size_t size() const { return data.size(); }
  std::size_t index(std::size_t row, std::size_t col, std::size_t ch) const {
    return (row * width + col) * channels + ch;
  }
  double& at(std::size_t row, std::size_t col, std::size_t ch) {
    return data[index(row, col, ch)];
  }
  double at(std::size_t row, std::size_t col, std::size_t ch) const {
    return data[index(row, col, ch)];
  }
  bool same_shape(const ImageTensor& other) const {
    return height == other.height && width == other.width &&
           channels == other.channels;
  }
  bool in_unit_range() const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;
};

/// Single-plane real image; values are unbounded (filter responses).
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(std::size_t h, std::size_t w, double fill = 0.0)
      : height(h), width(w), data(h * w, fill) {}

  double& at(std::size_t row, std::size_t col) { return data[row * width + col]; }
  double at(std::size_t row, std::size_t col) const {
    return data[row * width + col];
  }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

struct LabeledDataset {
  std::vector<ImageTensor> images;
  std::vector<std::size_t> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return images.size(); }

  /// Throws InvalidInput when labels and images disagree in length, a label is
  /// out of range, or image shapes differ.
  void validate() const;

  friend bool operator==(const LabeledDataset&, const LabeledDataset&) = default;
};

struct ClassMember {
  std::size_t index;
  const ImageTensor* image;
};

/// Element-wise min(1, max(0, e)).
ImageTensor clip_unit(ImageTensor x);

/// BT.601 luma for 3-channel input, a copy for 1-channel input.
GrayImage to_gray(const ImageTensor& x);

/// Samples with label `c` in ascending global-index order. The returned
/// pointers borrow from `d`.
std::vector<ClassMember> class_view(const LabeledDataset& d, std::size_t c);

/// Global indices of every sample labelled `c`, ascending.
std::vector<std::size_t> class_indices(const LabeledDataset& d, std::size_t c);

/// Resolves a worker-count request: 0 means hardware concurrency.
unsigned resolve_threads(unsigned requested);

/// Reads CHECKERBOARD_THREADS (unset or unparsable -> 0, i.e. auto).
unsigned threads_from_env();

/// Runs fn(i) for i in [0, count) over up to `threads` workers. Each index is
/// visited exactly once; fn must only write state owned by index i.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace checkerboard
