#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "checkerboard/core.hpp"

namespace checkerboard {

struct SobelResponse {
  GrayImage gx;
  GrayImage gy;
};

/// Same-size Sobel correlation with edge-clamped borders.
///
///   Kx = [-1 0 1; -2 0 2; -1 0 1]    Ky = [-1 -2 -1; 0 0 0; 1 2 1]
SobelResponse sobel_gradients(const GrayImage& gray);

/// Convolutional gradient energy: mean Sobel magnitude of the luma plane.
double cge_score(const ImageTensor& x);

struct CgeEntry {
  std::size_t index;
  double score;
};

struct CgeReport {
  std::size_t class_index = 0;
  std::vector<CgeEntry> entries;     // ascending global index
  std::vector<std::size_t> ranking;  // ascending score, ties by index
};

/// Scores every member of class `c`. Throws InvalidInput when the class is
/// empty or out of range.
CgeReport rank_by_cge(const LabeledDataset& d, std::size_t c, unsigned threads = 1);

/// The `p_num` lowest-CGE members of class `c`, in ranking order.
std::vector<std::size_t> select_css(const LabeledDataset& d, std::size_t c,
                                    std::size_t p_num, unsigned threads = 1);

/// Scores for every sample of `d` in global-index order.
std::vector<double> cge_scores(const LabeledDataset& d, unsigned threads = 1);

}  // namespace checkerboard
