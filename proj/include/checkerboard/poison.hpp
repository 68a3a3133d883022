#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "checkerboard/core.hpp"
#include "checkerboard/trigger.hpp"

namespace checkerboard {

enum class SelectionStrategy { kRandom, kCss };

std::string_view to_string(SelectionStrategy s);
SelectionStrategy parse_selection(std::string_view name);

/// Reproducibility record of one poisoning run.
struct PoisonManifest {
  std::size_t target_class = 0;
  double alpha = 0.0;
  double gamma = 1.0;
  TriggerSpec trigger;
  SelectionStrategy selection = SelectionStrategy::kRandom;
  std::uint64_t seed = 0;
  std::vector<std::size_t> poisoned_indices;  // sorted, unique, all in target_class
  std::string dataset_fingerprint;

  /// Throws InvalidInput on any violated field constraint.
  void validate() const;

  friend bool operator==(const PoisonManifest&, const PoisonManifest&) = default;
};

struct PoisonRequest {
  std::size_t target_class = 0;
  double alpha = 10.0 / 255.0;
  double gamma = 1.0;  // recorded for the test-time stage
  TriggerSpec trigger;
  SelectionStrategy selection = SelectionStrategy::kRandom;
  std::size_t p_num = 1;
  std::uint64_t seed = 0;
};

struct PoisonResult {
  LabeledDataset poisoned;
  PoisonManifest manifest;
};

/// Uniform draw without replacement from class `c`, returned ascending.
std::vector<std::size_t> select_random(const LabeledDataset& d, std::size_t c,
                                       std::size_t p_num, std::uint64_t seed);

/// clip(x + alpha * p). alpha = 0 returns x unchanged.
ImageTensor inject(const ImageTensor& x, const TriggerPattern& p, double alpha);

/// clip(x + gamma * alpha * p); rejects gamma < 1 and gamma * alpha > 1.
ImageTensor amplify(const ImageTensor& x, const TriggerPattern& p, double alpha,
                    double gamma);

/// Selects target samples, injects the trigger and keeps every label.
PoisonResult poison_dataset(const LabeledDataset& d, const PoisonRequest& request,
                            unsigned threads = 1);

/// Amplified trigger applied to every image of `d` (test-time stage).
LabeledDataset apply_trigger(const LabeledDataset& d, const TriggerPattern& p,
                             double alpha, double gamma, unsigned threads = 1);

}  // namespace checkerboard
