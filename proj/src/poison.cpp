#include "checkerboard/poison.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "checkerboard/complexity.hpp"
#include "checkerboard/dataset_io.hpp"

namespace checkerboard {

std::string_view to_string(SelectionStrategy s) {
  return s == SelectionStrategy::kCss ? "css" : "random";
}

SelectionStrategy parse_selection(std::string_view name) {
  if (name == "random") return SelectionStrategy::kRandom;
  if (name == "css") return SelectionStrategy::kCss;
  throw InvalidInput("unknown selection strategy '" + std::string(name) + "'");
}

void PoisonManifest::validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw InvalidInput("manifest alpha must lie in (0, 1]");
  }
  if (!(gamma >= 1.0) || gamma * alpha > 1.0) {
    throw InvalidInput("manifest gamma must be >= 1 with gamma * alpha <= 1");
  }
  trigger.validate();
  if (!std::is_sorted(poisoned_indices.begin(), poisoned_indices.end()) ||
      std::adjacent_find(poisoned_indices.begin(), poisoned_indices.end()) !=
          poisoned_indices.end()) {
    throw InvalidInput("manifest poisoned_indices must be sorted and unique");
  }
}

std::vector<std::size_t> select_random(const LabeledDataset& d, std::size_t c,
                                       std::size_t p_num, std::uint64_t seed) {
  auto members = class_indices(d, c);
  if (p_num == 0) throw InvalidInput("select_random: p_num must be >= 1");
  if (p_num > members.size()) {
    throw InvalidInput("select_random: p_num " + std::to_string(p_num) +
                       " exceeds class size " + std::to_string(members.size()));
  }
  // Partial Fisher-Yates driven by raw engine output (rejection sampling), so
  // the draw is identical on every standard library.
  std::mt19937_64 rng(seed);
  auto bounded = [&rng](std::uint64_t n) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t r;
    do {
      r = rng();
    } while (r >= limit);
    return r % n;
  };
  for (std::size_t k = 0; k < p_num; ++k) {
    const std::size_t pick = k + bounded(members.size() - k);
    std::swap(members[k], members[pick]);
  }
  members.resize(p_num);
  std::sort(members.begin(), members.end());
  return members;
}

namespace {

ImageTensor add_scaled(const ImageTensor& x, const TriggerPattern& p, double scale) {
  if (!p.matches(x)) {
    throw InvalidInput("trigger " + std::to_string(p.height) + "x" +
                       std::to_string(p.width) + "x" + std::to_string(p.channels) +
                       " does not match image " + std::to_string(x.height) + "x" +
                       std::to_string(x.width) + "x" + std::to_string(x.channels));
  }
  ImageTensor out = x;
  for (std::size_t k = 0; k < out.data.size(); ++k) out.data[k] += scale * p.values[k];
  out = clip_unit(std::move(out));
  // Rounding of x + s can leave |out - x| one ulp above s; pull such pixels
  // back so the l-inf budget holds under floating-point evaluation as well.
  const double budget = std::abs(scale);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    double& v = out.data[k];
    if (!(x.data[k] >= 0.0 && x.data[k] <= 1.0)) continue;
    while (v - x.data[k] > budget) v = std::nextafter(v, -1.0);
    while (x.data[k] - v > budget) v = std::nextafter(v, 2.0);
  }
  return out;
}

}  // namespace

ImageTensor inject(const ImageTensor& x, const TriggerPattern& p, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("inject: alpha must lie in [0, 1]");
  }
  return add_scaled(x, p, alpha);
}

ImageTensor amplify(const ImageTensor& x, const TriggerPattern& p, double alpha,
                    double gamma) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw InvalidInput("amplify: alpha must lie in [0, 1]");
  }
  if (!(gamma >= 1.0)) throw InvalidInput("amplify: gamma must be >= 1");
  if (gamma * alpha > 1.0) {
    throw InvalidInput("amplify: gamma * alpha = " + std::to_string(gamma * alpha) +
                       " exceeds the unit dynamic range");
  }
  // gamma == 1 must reproduce inject() bit-exactly.
  return add_scaled(x, p, gamma == 1.0 ? alpha : gamma * alpha);
}

PoisonResult poison_dataset(const LabeledDataset& d, const PoisonRequest& request,
                            unsigned threads) {
  d.validate();
  request.trigger.validate();
  if (d.images.empty()) throw InvalidInput("poison_dataset: empty dataset");
  if (!(request.alpha > 0.0 && request.alpha <= 1.0)) {
    throw InvalidInput("poison_dataset: alpha must lie in (0, 1]");
  }

  std::vector<std::size_t> chosen;
  if (request.selection == SelectionStrategy::kCss) {
    chosen = select_css(d, request.target_class, request.p_num, threads);
    std::sort(chosen.begin(), chosen.end());
  } else {
    chosen = select_random(d, request.target_class, request.p_num, request.seed);
  }

  const ImageTensor& probe = d.images.front();
  const TriggerPattern pattern =
      replicate(gen_template(request.trigger, probe.height, probe.width), probe.channels);

  PoisonResult result{d, {}};
  parallel_for(chosen.size(), threads, [&](std::size_t k) {
    const std::size_t idx = chosen[k];
    result.poisoned.images[idx] = inject(d.images[idx], pattern, request.alpha);
  });

  PoisonManifest& m = result.manifest;
  m.target_class = request.target_class;
  m.alpha = request.alpha;
  m.gamma = request.gamma;
  m.trigger = request.trigger;
  m.selection = request.selection;
  m.seed = request.seed;
  m.poisoned_indices = std::move(chosen);
  m.dataset_fingerprint = dataset_fingerprint(d);
  m.validate();
  return result;
}

LabeledDataset apply_trigger(const LabeledDataset& d, const TriggerPattern& p,
                             double alpha, double gamma, unsigned threads) {
  LabeledDataset out = d;
  parallel_for(d.size(), threads, [&](std::size_t i) {
    out.images[i] = amplify(d.images[i], p, alpha, gamma);
  });
  return out;
}

}  // namespace checkerboard
