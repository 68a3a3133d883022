#include "checkerboard/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "checkerboard/complexity.hpp"

namespace checkerboard {

NotchConfig NotchConfig::for_shape(std::size_t height, std::size_t width,
                                   std::size_t channels, double tau, double lam) {
  NotchConfig cfg;
  cfg.tau = tau;
  cfg.lam = lam;
  cfg.basis = replicate(checkerboard_template(height, width), channels);
  return cfg;
}

void NotchConfig::validate() const {
  if (!(tau >= 0.0)) throw InvalidInput("notch: tau must be >= 0");
  if (!(lam > 0.0)) throw InvalidInput("notch: lam must be > 0");
  if (basis.values.empty() || basis.channels == 0) {
    throw InvalidInput("notch: empty basis");
  }
  const double phase = basis.values.front();
  for (std::size_t i = 0; i < basis.height; ++i) {
    for (std::size_t j = 0; j < basis.width; ++j) {
      const double want = ((i + j) % 2 == 0) ? phase : -phase;
      for (std::size_t c = 0; c < basis.channels; ++c) {
        if (basis.values[(i * basis.width + j) * basis.channels + c] != want ||
            std::abs(want) != 1.0) {
          throw InvalidInput("notch: basis is not a channel-replicated checkerboard");
        }
      }
    }
  }
}

double checkerboard_coefficient(const ImageTensor& x, const TriggerPattern& q) {
  if (!q.matches(x)) throw InvalidInput("checkerboard_coefficient: shape mismatch");
  double dot = 0.0;
  double norm2 = 0.0;
  for (std::size_t k = 0; k < x.data.size(); ++k) {
    dot += x.data[k] * q.values[k];
    norm2 += q.values[k] * q.values[k];
  }
  if (norm2 == 0.0) throw InvalidInput("checkerboard_coefficient: zero template");
  return dot / norm2;
}

double soft_threshold(double c, double tau) {
  const double mag = std::max(std::abs(c) - tau, 0.0);
  return c < 0.0 ? -mag : mag;
}

ImageTensor notch_sanitize(const ImageTensor& x, const NotchConfig& cfg) {
  cfg.validate();
  const double shrunk = soft_threshold(checkerboard_coefficient(x, cfg.basis), cfg.tau);
  if (shrunk == 0.0) return x;
  ImageTensor out = x;
  const double step = cfg.lam * shrunk;
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] -= step * cfg.basis.values[k];
  return clip_unit(std::move(out));
}

namespace {

std::size_t clamp_index(std::ptrdiff_t i, std::size_t n) {
  if (i < 0) return 0;
  if (static_cast<std::size_t>(i) >= n) return n - 1;
  return static_cast<std::size_t>(i);
}

// Per-channel correlation with an odd k x k kernel, edge-clamped.
ImageTensor filter_planes(const ImageTensor& x, const std::vector<double>& kernel,
                          std::size_t k) {
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  ImageTensor out(x.height, x.width, x.channels);
  for (std::size_t i = 0; i < x.height; ++i) {
    for (std::size_t j = 0; j < x.width; ++j) {
      for (std::size_t c = 0; c < x.channels; ++c) {
        double acc = 0.0;
        for (std::ptrdiff_t du = -r; du <= r; ++du) {
          const std::size_t row = clamp_index(static_cast<std::ptrdiff_t>(i) + du, x.height);
          for (std::ptrdiff_t dv = -r; dv <= r; ++dv) {
            const std::size_t col =
                clamp_index(static_cast<std::ptrdiff_t>(j) + dv, x.width);
            acc += kernel[static_cast<std::size_t>((du + r) * static_cast<std::ptrdiff_t>(k) +
                                                   (dv + r))] *
                   x.at(row, col, c);
          }
        }
        out.at(i, j, c) = acc;
      }
    }
  }
  return clip_unit(std::move(out));
}

void check_filter_size(std::size_t k, const char* who) {
  if (k != 3 && k != 5) {
    throw InvalidInput(std::string(who) + ": kernel size must be 3 or 5, got " +
                       std::to_string(k));
  }
}

}  // namespace

ImageTensor mean_filter(const ImageTensor& x, std::size_t k) {
  check_filter_size(k, "mean_filter");
  return filter_planes(x, std::vector<double>(k * k, 1.0 / static_cast<double>(k * k)), k);
}

std::vector<double> gaussian_kernel(double sigma, std::size_t k) {
  check_filter_size(k, "gaussian_blur");
  if (!(sigma > 0.0)) throw InvalidInput("gaussian_blur: sigma must be > 0");
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  std::vector<double> w(k * k);
  double total = 0.0;
  for (std::ptrdiff_t u = -r; u <= r; ++u) {
    for (std::ptrdiff_t v = -r; v <= r; ++v) {
      const double e = std::exp(-static_cast<double>(u * u + v * v) / (2.0 * sigma * sigma));
      w[static_cast<std::size_t>((u + r) * static_cast<std::ptrdiff_t>(k) + (v + r))] = e;
      total += e;
    }
  }
  for (double& e : w) e /= total;
  return w;
}

ImageTensor gaussian_blur(const ImageTensor& x, double sigma, std::size_t k) {
  return filter_planes(x, gaussian_kernel(sigma, k), k);
}

Eigen::MatrixXd dct_matrix(std::size_t n) {
  const auto size = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd c(size, size);
  const double nd = static_cast<double>(n);
  for (Eigen::Index k = 0; k < size; ++k) {
    const double scale = k == 0 ? std::sqrt(1.0 / nd) : std::sqrt(2.0 / nd);
    for (Eigen::Index i = 0; i < size; ++i) {
      c(k, i) = scale * std::cos(std::numbers::pi * (2.0 * static_cast<double>(i) + 1.0) *
                                 static_cast<double>(k) / (2.0 * nd));
    }
  }
  return c;
}

Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane) {
  const auto ch = dct_matrix(static_cast<std::size_t>(plane.rows()));
  const auto cw = dct_matrix(static_cast<std::size_t>(plane.cols()));
  return ch * plane * cw.transpose();
}

Eigen::MatrixXd idct2(const Eigen::MatrixXd& coeffs) {
  const auto ch = dct_matrix(static_cast<std::size_t>(coeffs.rows()));
  const auto cw = dct_matrix(static_cast<std::size_t>(coeffs.cols()));
  return ch.transpose() * coeffs * cw;
}

ImageTensor dct_suppress(const ImageTensor& x, std::size_t k) {
  if (k > std::min(x.height, x.width)) {
    throw InvalidInput("dct_suppress: k = " + std::to_string(k) + " exceeds min(H, W) = " +
                       std::to_string(std::min(x.height, x.width)));
  }
  const auto h = static_cast<Eigen::Index>(x.height);
  const auto w = static_cast<Eigen::Index>(x.width);
  const auto ch = dct_matrix(x.height);
  const auto cw = dct_matrix(x.width);
  const auto kk = static_cast<Eigen::Index>(k);
  ImageTensor out(x.height, x.width, x.channels);
  Eigen::MatrixXd plane(h, w);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j)
        plane(i, j) = x.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c);
    Eigen::MatrixXd coeffs = ch * plane * cw.transpose();
    if (kk > 0) coeffs.bottomRightCorner(kk, kk).setZero();
    const Eigen::MatrixXd back = ch.transpose() * coeffs * cw;
    for (Eigen::Index i = 0; i < h; ++i)
      for (Eigen::Index j = 0; j < w; ++j)
        out.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j), c) = back(i, j);
  }
  return clip_unit(std::move(out));
}

void DetectorConfig::validate() const {
  if (!(t > 0.0)) throw InvalidInput("detector: t must be > 0");
  if (!(eps > 0.0)) throw InvalidInput("detector: eps must be > 0");
}

double median_of(std::vector<double> values) {
  if (values.empty()) throw InvalidInput("median of an empty set");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                   values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower =
      *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

DetectionReport detect_from_scores(const std::vector<double>& scores,
                                   const std::vector<std::size_t>& labels,
                                   std::size_t class_count, const DetectorConfig& cfg) {
  cfg.validate();
  if (scores.size() != labels.size()) {
    throw InvalidInput("detector: scores and labels differ in length");
  }
  std::vector<std::vector<std::size_t>> members(class_count);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= class_count) {
      throw InvalidInput("detector: label " + std::to_string(labels[i]) + " out of range");
    }
    members[labels[i]].push_back(i);
  }

  DetectionReport report;
  report.config = cfg;
  report.z_scores.assign(scores.size(), 0.0);
  for (std::size_t c = 0; c < class_count; ++c) {
    if (members[c].empty()) {
      throw InvalidInput("detector: class " + std::to_string(c) + " is empty");
    }
    std::vector<double> g;
    g.reserve(members[c].size());
    for (std::size_t i : members[c]) g.push_back(scores[i]);
    ClassStats stats;
    stats.class_index = c;
    stats.count = g.size();
    stats.median = median_of(g);
    std::vector<double> deviation;
    deviation.reserve(g.size());
    for (double v : g) deviation.push_back(std::abs(v - stats.median));
    stats.mad = median_of(std::move(deviation));
    std::size_t outliers = 0;
    for (std::size_t i : members[c]) {
      const double z = (scores[i] - stats.median) / (stats.mad + cfg.eps);
      report.z_scores[i] = z;
      if (z > cfg.t) ++outliers;
    }
    stats.outlier_fraction = static_cast<double>(outliers) / static_cast<double>(g.size());
    report.per_class.push_back(stats);
  }
  for (const auto& s : report.per_class) {
    if (s.outlier_fraction > report.per_class[report.flagged_class].outlier_fraction) {
      report.flagged_class = s.class_index;
    }
  }
  return report;
}

DetectionReport cge_detect(const LabeledDataset& d, const DetectorConfig& cfg,
                           unsigned threads) {
  d.validate();
  return detect_from_scores(cge_scores(d, threads), d.labels, d.class_count, cfg);
}

}  // namespace checkerboard
