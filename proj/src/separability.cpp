#include "checkerboard/separability.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

namespace checkerboard {

MomentAccumulator::MomentAccumulator(std::size_t dim)
    : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
      scatter_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim),
                                     static_cast<Eigen::Index>(dim))) {}

MomentAccumulator MomentAccumulator::from_stats(std::size_t count, Eigen::VectorXd mean,
                                                Eigen::MatrixXd scatter) {
  MomentAccumulator acc(static_cast<std::size_t>(mean.size()));
  if (scatter.rows() != mean.size() || scatter.cols() != mean.size()) {
    throw InvalidInput("MomentAccumulator::from_stats: scatter shape mismatch");
  }
  acc.count_ = count;
  acc.mean_ = std::move(mean);
  acc.scatter_ = std::move(scatter);
  return acc;
}

void MomentAccumulator::add(std::span<const double> sample) {
  if (sample.size() != dim()) {
    throw InvalidInput("estimate_moments: sample dimension " +
                       std::to_string(sample.size()) + " != " + std::to_string(dim()));
  }
  Eigen::Map<const Eigen::VectorXd> x(sample.data(),
                                      static_cast<Eigen::Index>(sample.size()));
  ++count_;
  const Eigen::VectorXd before = x - mean_;
  mean_ += before / static_cast<double>(count_);
  const Eigen::VectorXd after = x - mean_;
  scatter_.noalias() += before * after.transpose();
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.dim() != dim()) {
    throw InvalidInput("MomentAccumulator::merge: dimension mismatch");
  }
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Eigen::VectorXd gap = other.mean_ - mean_;
  scatter_ += other.scatter_;
  scatter_.noalias() += (na * nb / n) * gap * gap.transpose();
  mean_ += gap * (nb / n);
  count_ += other.count_;
}

MomentEstimate MomentAccumulator::finish() const {
  if (count_ < 2) {
    throw InvalidInput("estimate_moments: need at least 2 samples, got " +
                       std::to_string(count_));
  }
  MomentEstimate m;
  m.dim = dim();
  m.mean = mean_;
  m.covariance = scatter_ / static_cast<double>(count_ - 1);
  m.covariance = (0.5 * (m.covariance + m.covariance.transpose())).eval();
  m.sample_count = count_;
  return m;
}

namespace {

// One contiguous partition: a single centered Gram product instead of n
// rank-one updates.
MomentAccumulator accumulate_block(std::span<const std::vector<double>> samples,
                                   std::size_t dim) {
  if (samples.empty()) return MomentAccumulator(dim);
  const auto n = static_cast<Eigen::Index>(samples.size());
  const auto d = static_cast<Eigen::Index>(dim);
  Eigen::MatrixXd block(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    if (s.size() != dim) {
      throw InvalidInput("estimate_moments: sample dimension " +
                         std::to_string(s.size()) + " != " + std::to_string(dim));
    }
    block.row(i) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), d);
  }
  Eigen::VectorXd mean = block.colwise().mean().transpose();
  block.rowwise() -= mean.transpose();
  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(block.transpose());
  Eigen::MatrixXd full = scatter.selfadjointView<Eigen::Lower>();
  return MomentAccumulator::from_stats(samples.size(), std::move(mean), std::move(full));
}

Eigen::LLT<Eigen::MatrixXd> regularized_factor(const MomentEstimate& m, double ridge) {
  if (!(ridge > 0.0)) {
    throw InvalidInput("ridge must be > 0, got " + std::to_string(ridge));
  }
  Eigen::MatrixXd system = m.covariance;
  system.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(system);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization of Sigma + ridge*I failed (dim " +
                         std::to_string(m.dim) + ", ridge " + std::to_string(ridge) +
                         ", trace " + std::to_string(m.covariance.trace()) + ")");
  }
  return llt;
}

void check_delta(const MomentEstimate& m, const Eigen::VectorXd& delta) {
  if (static_cast<std::size_t>(delta.size()) != m.dim) {
    throw InvalidInput("delta dimension " + std::to_string(delta.size()) +
                       " != moment dimension " + std::to_string(m.dim));
  }
}

double sample_mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double unbiased_variance(std::span<const double> v, double mean) {
  double s = 0.0;
  for (double x : v) s += (x - mean) * (x - mean);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

MomentEstimate estimate_moments(std::span<const std::vector<double>> samples,
                                unsigned threads) {
  if (samples.size() < 2) {
    throw InvalidInput("estimate_moments: need at least 2 samples, got " +
                       std::to_string(samples.size()));
  }
  const std::size_t dim = samples.front().size();
  if (dim > kMaxMomentDim) {
    throw ResourceLimit("estimate_moments: dimension " + std::to_string(dim) +
                        " exceeds " + std::to_string(kMaxMomentDim));
  }
  const std::size_t parts =
      std::clamp<std::size_t>(resolve_threads(threads), 1, samples.size());
  std::vector<MomentAccumulator> partial(parts, MomentAccumulator(dim));
  const std::size_t chunk = (samples.size() + parts - 1) / parts;
  parallel_for(parts, threads, [&](std::size_t p) {
    const std::size_t begin = std::min(samples.size(), p * chunk);
    const std::size_t end = std::min(samples.size(), begin + chunk);
    partial[p] = accumulate_block(samples.subspan(begin, end - begin), dim);
  });
  MomentAccumulator total(dim);
  for (const auto& part : partial) total.merge(part);
  return total.finish();
}

double default_ridge(const MomentEstimate& m) {
  if (m.dim == 0) return 1e-12;
  return std::max(1e-6 * m.covariance.trace() / static_cast<double>(m.dim), 1e-12);
}

Eigen::VectorXd optimal_direction(const MomentEstimate& m, const Eigen::VectorXd& delta,
                                  double ridge) {
  check_delta(m, delta);
  if (delta.isZero(0.0)) {
    if (!(ridge > 0.0)) throw InvalidInput("ridge must be > 0");
    return Eigen::VectorXd::Zero(delta.size());
  }
  Eigen::VectorXd w = regularized_factor(m, ridge).solve(delta);
  const double norm = w.norm();
  if (!std::isfinite(norm) || norm == 0.0) {
    throw NumericalError("optimal_direction: solution norm is " + std::to_string(norm));
  }
  return w / norm;
}

FdrValue empirical_fdr(std::span<const double> clean_proj,
                       std::span<const double> poison_proj) {
  if (clean_proj.size() < 2 || poison_proj.size() < 2) {
    throw InvalidInput("empirical_fdr: each projection set needs >= 2 entries");
  }
  const double mc = sample_mean(clean_proj);
  const double mp = sample_mean(poison_proj);
  const double gap = (mp - mc) * (mp - mc);
  const double spread =
      unbiased_variance(clean_proj, mc) + unbiased_variance(poison_proj, mp);
  if (spread == 0.0) {
    if (gap == 0.0) return {0.0, false};
    return {0.0, true};
  }
  return {gap / spread, false};
}

double analytic_jstat(const Eigen::VectorXd& delta, const MomentEstimate& m,
                      double alpha, double ridge) {
  check_delta(m, delta);
  if (alpha < 0.0) throw InvalidInput("analytic_jstat: alpha must be >= 0");
  const auto llt = regularized_factor(m, ridge);
  if (alpha == 0.0) return 0.0;
  const Eigen::VectorXd solved = llt.solve(delta);
  return alpha * alpha * std::max(0.0, delta.dot(solved));
}

GridLaplacian grid_laplacian(std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) {
    throw InvalidInput("grid_laplacian: zero dimension");
  }
  const std::size_t n = height * width;
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(5 * n);
  std::vector<double> degree(n, 0.0);
  auto link = [&](std::size_t a, std::size_t b) {
    entries.emplace_back(a, b, -1.0);
    entries.emplace_back(b, a, -1.0);
    degree[a] += 1.0;
    degree[b] += 1.0;
  };
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t k = i * width + j;
      if (j + 1 < width) link(k, k + 1);
      if (i + 1 < height) link(k, k + width);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (degree[k] != 0.0) entries.emplace_back(k, k, degree[k]);
  }
  GridLaplacian L{height, width, Eigen::SparseMatrix<double>(n, n)};
  L.matrix.setFromTriplets(entries.begin(), entries.end());
  return L;
}

double jlum_quadratic(const LuminanceTemplate& g, const GridLaplacian& L, double lambda) {
  if (g.height != L.height || g.width != L.width) {
    throw InvalidInput("jlum_quadratic: template " + std::to_string(g.height) + "x" +
                       std::to_string(g.width) + " vs Laplacian " +
                       std::to_string(L.height) + "x" + std::to_string(L.width));
  }
  if (!(lambda > 0.0)) throw InvalidInput("jlum_quadratic: lambda must be > 0");
  Eigen::Map<const Eigen::VectorXd> v(g.values.data(),
                                      static_cast<Eigen::Index>(g.values.size()));
  const Eigen::VectorXd Lv = L.matrix * v;
  return lambda * v.dot(Lv);
}

SeparabilityReport analyze_separability(std::span<const std::vector<double>> clean,
                                        std::span<const std::vector<double>> poisoned,
                                        double ridge, unsigned threads) {
  const MomentEstimate clean_m = estimate_moments(clean, threads);
  const MomentEstimate poison_m = estimate_moments(poisoned, threads);
  if (poison_m.dim != clean_m.dim) {
    throw InvalidInput("analyze_separability: clean and poisoned dimensions differ");
  }
  SeparabilityReport report;
  report.ridge = ridge > 0.0 ? ridge : default_ridge(clean_m);
  const Eigen::VectorXd delta = poison_m.mean - clean_m.mean;
  report.direction = optimal_direction(clean_m, delta, report.ridge);
  auto project = [&](std::span<const std::vector<double>> rows) {
    std::vector<double> out(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      Eigen::Map<const Eigen::VectorXd> x(rows[i].data(), report.direction.size());
      out[i] = report.direction.dot(x);
    }
    return out;
  };
  const auto clean_proj = project(clean);
  const auto poison_proj = project(poisoned);
  report.empirical_fdr = empirical_fdr(clean_proj, poison_proj);
  report.analytic_jstat = analytic_jstat(delta, clean_m, 1.0, report.ridge);
  report.sample_count = clean.size() + poisoned.size();
  return report;
}

std::vector<std::vector<double>> luminance_vectors(std::span<const ImageTensor> images) {
  std::vector<std::vector<double>> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(to_gray(img).data);
  return out;
}

}  // namespace checkerboard
