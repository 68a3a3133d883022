#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cstddef>
#include <span>
#include <vector>

#include "checkerboard/core.hpp"
#include "checkerboard/trigger.hpp"

namespace checkerboard {

struct MomentEstimate {
  std::size_t dim = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;  // unbiased, symmetrized
  std::size_t sample_count = 0;
};

/// Streaming mean / scatter accumulator. Partial accumulators over disjoint
/// index ranges merge (Chan et al. pairwise update) into the same result as a
/// single pass, up to rounding; merging in index order keeps it deterministic.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t dim);
  /// Accumulator equivalent to having added `count` samples with the given
  /// mean and centered scatter matrix.
  static MomentAccumulator from_stats(std::size_t count, Eigen::VectorXd mean,
                                      Eigen::MatrixXd scatter);

  void add(std::span<const double> sample);
  void merge(const MomentAccumulator& other);
  std::size_t count() const { return count_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }

  /// Requires count() >= 2.
  MomentEstimate finish() const;

 private:
  std::size_t count_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd scatter_;
};

/// Largest vector dimension estimate_moments accepts (3 channels x 4096 pixels).
inline constexpr std::size_t kMaxMomentDim = 3 * 4096;

/// Sample mean and (n - 1)-normalized covariance. With threads != 1 the
/// samples are split into contiguous partitions whose accumulators are merged
/// in index order.
MomentEstimate estimate_moments(std::span<const std::vector<double>> samples,
                                unsigned threads = 1);

/// 1e-6 * trace(Sigma) / d, floored at 1e-12 so a zero covariance still gives a
/// positive-definite system.
double default_ridge(const MomentEstimate& m);

/// Unit-length solution w of (Sigma + ridge I) w = delta; zero when delta = 0.
Eigen::VectorXd optimal_direction(const MomentEstimate& m, const Eigen::VectorXd& delta,
                                  double ridge);

/// Fisher ratio, with an explicit tag for the zero-variance, nonzero-gap case.
struct FdrValue {
  double value = 0.0;
  bool infinite = false;

  friend bool operator==(const FdrValue&, const FdrValue&) = default;
};

FdrValue empirical_fdr(std::span<const double> clean_proj,
                       std::span<const double> poison_proj);

/// alpha^2 * delta^T (Sigma + ridge I)^-1 delta.
double analytic_jstat(const Eigen::VectorXd& delta, const MomentEstimate& m,
                      double alpha, double ridge);

/// Combinatorial Laplacian D - A of the 4-connected H x W grid, row-major
/// vertex order.
struct GridLaplacian {
  std::size_t height = 0;
  std::size_t width = 0;
  Eigen::SparseMatrix<double> matrix;
};

GridLaplacian grid_laplacian(std::size_t height, std::size_t width);

/// lambda * g^T L g.
double jlum_quadratic(const LuminanceTemplate& g, const GridLaplacian& L, double lambda);

struct SeparabilityReport {
  Eigen::VectorXd direction;
  FdrValue empirical_fdr;
  double analytic_jstat = 0.0;
  double ridge = 0.0;
  double offset = 0.0;  // affine term of the linear probe; never enters the ratio
  std::size_t sample_count = 0;
};

/// Fits moments on `clean`, takes delta as the mean shift of `poisoned`,
/// projects both onto the whitened direction and reports the empirical ratio
/// next to the analytic Mahalanobis energy (alpha folded into delta). A
/// non-positive ridge selects default_ridge().
SeparabilityReport analyze_separability(std::span<const std::vector<double>> clean,
                                        std::span<const std::vector<double>> poisoned,
                                        double ridge, unsigned threads = 1);

/// Grayscale-projected flat vectors, one per image.
std::vector<std::vector<double>> luminance_vectors(std::span<const ImageTensor> images);

}  // namespace checkerboard
