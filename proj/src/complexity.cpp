#include "checkerboard/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace checkerboard {

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

}  // namespace

SobelResponse sobel_gradients(const GrayImage& gray) {
  const std::size_t h = gray.height;
  const std::size_t w = gray.width;
  SobelResponse out{GrayImage(h, w), GrayImage(h, w)};
  for (std::size_t i = 0; i < h; ++i) {
    const std::size_t up = clamp_index(static_cast<std::ptrdiff_t>(i) - 1, h);
    const std::size_t down = clamp_index(static_cast<std::ptrdiff_t>(i) + 1, h);
    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t left = clamp_index(static_cast<std::ptrdiff_t>(j) - 1, w);
      const std::size_t right = clamp_index(static_cast<std::ptrdiff_t>(j) + 1, w);
      // Kernel taps grouped as opposing pairs so equal pixels cancel exactly.
      out.gx.at(i, j) = (gray.at(up, right) - gray.at(up, left)) +
                        2.0 * (gray.at(i, right) - gray.at(i, left)) +
                        (gray.at(down, right) - gray.at(down, left));
      out.gy.at(i, j) = (gray.at(down, left) - gray.at(up, left)) +
                        2.0 * (gray.at(down, j) - gray.at(up, j)) +
                        (gray.at(down, right) - gray.at(up, right));
    }
  }
  return out;
}

double cge_score(const ImageTensor& x) {
  if (x.height == 0 || x.width == 0) return 0.0;
  const auto grad = sobel_gradients(to_gray(x));
  double total = 0.0;
  for (std::size_t p = 0; p < grad.gx.data.size(); ++p) {
    total += std::hypot(grad.gx.data[p], grad.gy.data[p]);
  }
  return total / static_cast<double>(x.height * x.width);
}

std::vector<double> cge_scores(const LabeledDataset& d, unsigned threads) {
  std::vector<double> scores(d.size());
  parallel_for(d.size(), threads, [&](std::size_t i) { scores[i] = cge_score(d.images[i]); });
  return scores;
}

CgeReport rank_by_cge(const LabeledDataset& d, std::size_t c, unsigned threads) {
  const auto members = class_indices(d, c);
  if (members.empty()) {
    throw InvalidInput("rank_by_cge: class " + std::to_string(c) + " is empty");
  }
  CgeReport report;
  report.class_index = c;
  report.entries.resize(members.size());
  parallel_for(members.size(), threads, [&](std::size_t k) {
    report.entries[k] = {members[k], cge_score(d.images[members[k]])};
  });
  std::vector<CgeEntry> sorted = report.entries;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const CgeEntry& a, const CgeEntry& b) { return a.score < b.score; });
  report.ranking.reserve(sorted.size());
  for (const auto& e : sorted) report.ranking.push_back(e.index);
  return report;
}

std::vector<std::size_t> select_css(const LabeledDataset& d, std::size_t c,
                                    std::size_t p_num, unsigned threads) {
  if (p_num == 0) throw InvalidInput("select_css: p_num must be >= 1");
  auto report = rank_by_cge(d, c, threads);
  if (p_num > report.ranking.size()) {
    throw InvalidInput("select_css: p_num " + std::to_string(p_num) +
                       " exceeds class size " + std::to_string(report.ranking.size()));
  }
  report.ranking.resize(p_num);
  return report.ranking;
}

}  // namespace checkerboard
