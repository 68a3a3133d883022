#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "checkerboard/core.hpp"

namespace checkerboard {

enum class TriggerKind { kCheckerboard, kRandomNoise, kSaltPepper, kHStripes, kVStripes };

std::string_view to_string(TriggerKind kind);
/// Accepts the canonical names: checkerboard, random_noise, salt_pepper,
/// h_stripes, v_stripes.
TriggerKind parse_trigger_kind(std::string_view name);
bool is_noise_kind(TriggerKind kind);

struct TriggerSpec {
  TriggerKind kind = TriggerKind::kCheckerboard;
  std::size_t block_size = 1;
  int phase = 1;
  std::optional<std::uint64_t> seed;

  /// Throws InvalidInput unless block_size >= 1, phase is +-1 and a seed is
  /// present exactly for the noise kinds.
  void validate() const;

  friend bool operator==(const TriggerSpec&, const TriggerSpec&) = default;
};

/// Spatial luminance pattern g with entries in [-1, 1].
struct LuminanceTemplate {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const {
    return values[row * width + col];
  }
  LuminanceTemplate negated() const;

  friend bool operator==(const LuminanceTemplate&, const LuminanceTemplate&) = default;
  friend auto operator<=>(const LuminanceTemplate&, const LuminanceTemplate&) = default;
};

/// Channel-replicated trigger delta = R(g); same layout as ImageTensor.
struct TriggerPattern {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  bool matches(const ImageTensor& x) const {
    return x.height == height && x.width == width && x.channels == channels;
  }
  /// Plane `ch` as a template.
  LuminanceTemplate channel(std::size_t ch) const;

  friend bool operator==(const TriggerPattern&, const TriggerPattern&) = default;
};

/// Salt-and-pepper site density.
inline constexpr double kSaltPepperDensity = 0.10;

LuminanceTemplate gen_template(const TriggerSpec& spec, std::size_t height,
                               std::size_t width);

/// The default trigger: b = 1 checkerboard with the given phase.
LuminanceTemplate checkerboard_template(std::size_t height, std::size_t width,
                                        int phase = 1, std::size_t block_size = 1);

TriggerPattern replicate(const LuminanceTemplate& g, std::size_t channels);

/// Sum over 4-connected edges of squared neighbour differences.
double discrete_objective(const LuminanceTemplate& g);

struct OptimumResult {
  double max_value = 0.0;
  std::vector<LuminanceTemplate> maximizers;  // sorted ascending
};

inline constexpr std::size_t kMaxEnumerationCells = 20;

/// Exhaustive search over {-1, +1}^(H*W). Throws ResourceLimit when
/// height * width exceeds kMaxEnumerationCells.
OptimumResult brute_force_optimum(std::size_t height, std::size_t width);

}  // namespace checkerboard
