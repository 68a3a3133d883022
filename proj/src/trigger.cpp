#include "checkerboard/trigger.hpp"

#include <algorithm>
#include <bit>
#include <random>

namespace checkerboard {

std::string_view to_string(TriggerKind kind) {
  switch (kind) {
    case TriggerKind::kCheckerboard: return "checkerboard";
    case TriggerKind::kRandomNoise: return "random_noise";
    case TriggerKind::kSaltPepper: return "salt_pepper";
    case TriggerKind::kHStripes: return "h_stripes";
    case TriggerKind::kVStripes: return "v_stripes";
  }
  return "unknown";
}

TriggerKind parse_trigger_kind(std::string_view name) {
  for (auto kind : {TriggerKind::kCheckerboard, TriggerKind::kRandomNoise,
                    TriggerKind::kSaltPepper, TriggerKind::kHStripes,
                    TriggerKind::kVStripes}) {
    if (to_string(kind) == name) return kind;
  }
  throw InvalidInput("unknown trigger kind '" + std::string(name) + "'");
}

bool is_noise_kind(TriggerKind kind) {
  return kind == TriggerKind::kRandomNoise || kind == TriggerKind::kSaltPepper;
}

void TriggerSpec::validate() const {
  if (block_size < 1) throw InvalidInput("trigger block_size must be >= 1");
  if (phase != 1 && phase != -1) throw InvalidInput("trigger phase must be +1 or -1");
  if (is_noise_kind(kind) && !seed) {
    throw InvalidInput("trigger kind " + std::string(to_string(kind)) +
                       " requires a seed");
  }
  if (!is_noise_kind(kind) && seed) {
    throw InvalidInput("trigger kind " + std::string(to_string(kind)) +
                       " does not take a seed");
  }
}

LuminanceTemplate LuminanceTemplate::negated() const {
  LuminanceTemplate out = *this;
  for (double& v : out.values) v = -v;
  return out;
}

LuminanceTemplate TriggerPattern::channel(std::size_t ch) const {
  LuminanceTemplate g{height, width, std::vector<double>(height * width)};
  for (std::size_t p = 0; p < height * width; ++p) g.values[p] = values[p * channels + ch];
  return g;
}

namespace {

double alternating_sign(std::size_t k) { return (k % 2 == 0) ? 1.0 : -1.0; }

// Rademacher draws use single engine bits so the stream does not depend on
// the standard library's distribution implementation.
double rademacher(std::mt19937_64& rng) { return (rng() & 1u) ? 1.0 : -1.0; }

}  // namespace

LuminanceTemplate gen_template(const TriggerSpec& spec, std::size_t height,
                               std::size_t width) {
  spec.validate();
  if (height == 0 || width == 0) {
    throw InvalidInput("gen_template: zero dimension");
  }
  LuminanceTemplate g{height, width, std::vector<double>(height * width, 0.0)};
  const double phase = spec.phase;
  const std::size_t b = spec.block_size;
  switch (spec.kind) {
    case TriggerKind::kCheckerboard:
      for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j)
          g.values[i * width + j] = phase * alternating_sign(i / b + j / b);
      break;
    case TriggerKind::kHStripes:
      for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j)
          g.values[i * width + j] = phase * alternating_sign(i / b);
      break;
    case TriggerKind::kVStripes:
      for (std::size_t i = 0; i < height; ++i)
        for (std::size_t j = 0; j < width; ++j)
          g.values[i * width + j] = phase * alternating_sign(j / b);
      break;
    case TriggerKind::kRandomNoise: {
      std::mt19937_64 rng(*spec.seed);
      for (double& v : g.values) v = phase * rademacher(rng);
      break;
    }
    case TriggerKind::kSaltPepper: {
      std::mt19937_64 rng(*spec.seed);
      // Site selection from the top 53 bits as a uniform double in [0, 1).
      for (double& v : g.values) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        const double sign = rademacher(rng);
        if (u < kSaltPepperDensity) v = phase * sign;
      }
      break;
    }
  }
  return g;
}

LuminanceTemplate checkerboard_template(std::size_t height, std::size_t width,
                                        int phase, std::size_t block_size) {
  return gen_template({TriggerKind::kCheckerboard, block_size, phase, std::nullopt},
                      height, width);
}

TriggerPattern replicate(const LuminanceTemplate& g, std::size_t channels) {
  if (channels != 1 && channels != 3) {
    throw InvalidInput("replicate: unsupported channel count " +
                       std::to_string(channels));
  }
  TriggerPattern p{g.height, g.width, channels,
                   std::vector<double>(g.values.size() * channels)};
  for (std::size_t px = 0; px < g.values.size(); ++px)
    for (std::size_t ch = 0; ch < channels; ++ch)
      p.values[px * channels + ch] = g.values[px];
  return p;
}

double discrete_objective(const LuminanceTemplate& g) {
  double total = 0.0;
  for (std::size_t i = 0; i < g.height; ++i) {
    for (std::size_t j = 0; j < g.width; ++j) {
      const double v = g.at(i, j);
      if (j + 1 < g.width) {
        const double d = v - g.at(i, j + 1);
        total += d * d;
      }
      if (i + 1 < g.height) {
        const double d = v - g.at(i + 1, j);
        total += d * d;
      }
    }
  }
  return total;
}

OptimumResult brute_force_optimum(std::size_t height, std::size_t width) {
  const std::size_t cells = height * width;
  if (height == 0 || width == 0) {
    throw InvalidInput("brute_force_optimum: zero dimension");
  }
  if (cells > kMaxEnumerationCells) {
    throw ResourceLimit("brute_force_optimum: " + std::to_string(cells) +
                        " cells exceeds the enumeration guard of " +
                        std::to_string(kMaxEnumerationCells));
  }
  // Bit k of a vertex mask is cell k in row-major order; a set bit is -1.
  // Masks selecting the left endpoint of every horizontal / upper endpoint of
  // every vertical edge turn the objective into two popcounts.
  std::uint64_t horizontal = 0;
  std::uint64_t vertical = 0;
  for (std::size_t i = 0; i < height; ++i) {
    for (std::size_t j = 0; j < width; ++j) {
      const std::size_t k = i * width + j;
      if (j + 1 < width) horizontal |= std::uint64_t{1} << k;
      if (i + 1 < height) vertical |= std::uint64_t{1} << k;
    }
  }
  const std::uint64_t vertex_count = std::uint64_t{1} << cells;
  int best = -1;
  std::vector<std::uint64_t> best_masks;
  for (std::uint64_t m = 0; m < vertex_count; ++m) {
    const int cut = std::popcount((m ^ (m >> 1)) & horizontal) +
                    std::popcount((m ^ (m >> width)) & vertical);
    if (cut > best) {
      best = cut;
      best_masks.clear();
    }
    if (cut == best) best_masks.push_back(m);
  }

  OptimumResult result;
  // Each cut edge contributes (+1 - -1)^2 = 4.
  result.max_value = 4.0 * best;
  for (std::uint64_t m : best_masks) {
    LuminanceTemplate g{height, width, std::vector<double>(cells)};
    for (std::size_t k = 0; k < cells; ++k) g.values[k] = ((m >> k) & 1u) ? -1.0 : 1.0;
    result.maximizers.push_back(std::move(g));
  }
  std::sort(result.maximizers.begin(), result.maximizers.end());
  return result;
}

}  // namespace checkerboard
