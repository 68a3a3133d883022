#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "checkerboard/core.hpp"
#include "checkerboard/trigger.hpp"

namespace checkerboard {

// ---------------------------------------------------------------------------
// Checkerboard notch

struct NotchConfig {
  double tau = 0.0;  // soft-threshold dead zone on the coefficient
  double lam = 1.0;  // suppression strength
  TriggerPattern basis;

  /// Default basis: the b = 1, phase +1 checkerboard replicated over
  /// `channels`.
  static NotchConfig for_shape(std::size_t height, std::size_t width,
                               std::size_t channels, double tau = 0.0, double lam = 1.0);

  /// Throws InvalidInput unless tau >= 0, lam > 0 and the basis is a
  /// channel-replicated pixel-wise checkerboard of either phase.
  void validate() const;
};

/// <x, q> / ||q||^2 over every position and channel.
double checkerboard_coefficient(const ImageTensor& x, const TriggerPattern& q);

/// sign(c) * max(|c| - tau, 0).
double soft_threshold(double c, double tau);

/// clip(x - lam * soft_threshold(c(x), tau) * Q). Inputs inside the dead zone
/// come back bit-identical.
ImageTensor notch_sanitize(const ImageTensor& x, const NotchConfig& cfg);

// ---------------------------------------------------------------------------
// Low-pass preprocessing. All filters clamp at the border.

/// k x k box average per channel, k in {3, 5}.
ImageTensor mean_filter(const ImageTensor& x, std::size_t k);

/// Row-major k x k sampled Gaussian, normalized to sum 1 after truncation.
std::vector<double> gaussian_kernel(double sigma, std::size_t k);

ImageTensor gaussian_blur(const ImageTensor& x, double sigma, std::size_t k);

/// Orthonormal DCT-II basis, row k = frequency k.
Eigen::MatrixXd dct_matrix(std::size_t n);

/// Per-plane 2-D orthonormal DCT-II / its inverse on an H x W plane.
Eigen::MatrixXd dct2(const Eigen::MatrixXd& plane);
Eigen::MatrixXd idct2(const Eigen::MatrixXd& coeffs);

/// Zeroes the bottom-right k x k corner of every channel's DCT-II spectrum
/// (row >= H - k and column >= W - k), inverts and clips. 0 <= k <= min(H, W).
ImageTensor dct_suppress(const ImageTensor& x, std::size_t k);

// ---------------------------------------------------------------------------
// Class-wise CGE detection

struct DetectorConfig {
  double t = 2.5;     // upper-tail z threshold
  double eps = 1e-9;  // MAD stabilizer

  void validate() const;
};

struct ClassStats {
  std::size_t class_index = 0;
  std::size_t count = 0;
  double median = 0.0;
  double mad = 0.0;
  double outlier_fraction = 0.0;  // S_c
};

struct DetectionReport {
  std::vector<ClassStats> per_class;
  std::size_t flagged_class = 0;
  std::vector<double> z_scores;  // global sample order
  DetectorConfig config;
};

/// Median with the even-length convention (mean of the two middle values).
double median_of(std::vector<double> values);

/// Robust class-wise normalization over precomputed scores:
/// z = (g - median_c) / (MAD_c + eps), S_c = fraction of z > t, flag argmax S_c
/// (lowest class on ties). Every class must be non-empty.
DetectionReport detect_from_scores(const std::vector<double>& scores,
                                   const std::vector<std::size_t>& labels,
                                   std::size_t class_count, const DetectorConfig& cfg);

/// detect_from_scores over cge_score() of every sample.
DetectionReport cge_detect(const LabeledDataset& d, const DetectorConfig& cfg,
                           unsigned threads = 1);

}  // namespace checkerboard
