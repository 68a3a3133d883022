// checkerboard: batch front end over the library.
//
// Every subcommand prints exactly one JSON line on stdout (the result summary
// plus an echo of the resolved configuration). Progress goes to stderr.
// Exit codes: 0 success, 2 usage, 3 data/format, 4 numerical.

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "checkerboard/complexity.hpp"
#include "checkerboard/core.hpp"
#include "checkerboard/dataset_io.hpp"
#include "checkerboard/defense.hpp"
#include "checkerboard/error.hpp"
#include "checkerboard/poison.hpp"
#include "checkerboard/reports.hpp"
#include "checkerboard/separability.hpp"
#include "checkerboard/trigger.hpp"

namespace {

using namespace checkerboard;
using nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

void log(const std::string& msg) { std::cerr << "checkerboard: " << msg << '\n'; }

// A real given as "a/b" or as a plain decimal. The original text is kept so
// the echo shows exactly what the user asked for next to the parsed value.
struct Ratio {
  std::string text;
  double value = 0.0;
};

double parse_real(std::string_view s, const std::string& flag) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw InvalidInput(flag + ": cannot parse '" + std::string(s) + "' as a number");
  }
  return v;
}

Ratio parse_ratio(const std::string& text, const std::string& flag) {
  Ratio r{text, 0.0};
  const auto slash = text.find('/');
  if (slash == std::string::npos) {
    r.value = parse_real(text, flag);
  } else {
    const double num = parse_real(std::string_view(text).substr(0, slash), flag);
    const double den = parse_real(std::string_view(text).substr(slash + 1), flag);
    if (den == 0.0) throw InvalidInput(flag + ": zero denominator in '" + text + "'");
    r.value = num / den;
  }
  return r;
}

json ratio_json(const Ratio& r) { return {{"text", r.text}, {"value", r.value}}; }

std::vector<fs::path> to_paths(const std::vector<std::string>& raw) {
  return {raw.begin(), raw.end()};
}

// Loader precondition failures describe bad files, not bad flags.
LabeledDataset load_dataset(const std::vector<std::string>& raw) {
  const auto paths = to_paths(raw);
  try {
    auto d = load_any_dataset(paths);
    log("loaded " + std::to_string(d.size()) + " samples, " +
        std::to_string(d.class_count) + " classes");
    return d;
  } catch (const InvalidInput& e) {
    throw FormatError(e.what());
  }
}

json path_list(const std::vector<std::string>& raw) { return json(raw); }

void emit(const std::string& command, const json& config, const json& result) {
  json out = {{"command", command}, {"status", "ok"}, {"config", config}, {"result", result}};
  std::cout << out.dump() << std::endl;
}

void write_run_config(const fs::path& dir, const std::string& command, const json& config) {
  write_json({{"command", command}, {"config", config}}, dir / "run_config.json");
}

void write_report(const std::string& path, const std::string& command, const json& config,
                  json report) {
  if (path.empty()) return;
  report["config"] = config;
  report["command"] = command;
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_json(report, p);
  log("report written to " + path);
}

struct TriggerFlags {
  std::string kind = "checkerboard";
  std::size_t block_size = 1;
  int phase = 1;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App* cmd, const std::string& kind_flag, const std::string& seed_flag,
              const std::string& kind_help) {
    cmd->add_option(kind_flag, kind, kind_help)->capture_default_str();
    cmd->add_option("--block-size", block_size, "sign-alternation block size")
        ->capture_default_str();
    cmd->add_option("--phase", phase, "+1 or -1")->capture_default_str();
    cmd->add_option(seed_flag, seed, "seed, required for noise kinds");
  }

  TriggerSpec spec() const {
    TriggerSpec s{parse_trigger_kind(kind), block_size, phase, seed};
    s.validate();
    return s;
  }
};

// --trigger names either a TensorFile (H x W template or H x W x C pattern)
// or a trigger kind synthesized at the dataset's resolution.
TriggerPattern resolve_pattern(const TriggerFlags& flags, const ImageTensor& like,
                               json& echo) {
  const fs::path as_file(flags.kind);
  if (fs::is_regular_file(as_file)) {
    const Tensor t = load_tensor(as_file);
    echo = {{"file", flags.kind}};
    if (t.dims.size() == 2) return replicate(template_from_tensor(t), like.channels);
    if (t.dims.size() == 3) {
      const ImageTensor img = image_from_tensor(t);
      return TriggerPattern{img.height, img.width, img.channels, img.data};
    }
    throw FormatError(flags.kind + ": trigger tensor must have 2 or 3 dims, got " +
                      std::to_string(t.dims.size()));
  }
  const TriggerSpec spec = flags.spec();
  echo = trigger_to_json(spec);
  return replicate(gen_template(spec, like.height, like.width), like.channels);
}

// ---------------------------------------------------------------------------

int run(int argc, char** argv) {
  CLI::App app{"Checkerboard clean-label trigger toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "checkerboard 0.1.0");

  const unsigned threads = threads_from_env();
  std::string command;

  // gen-trigger
  auto* gen = app.add_subcommand("gen-trigger", "write a luminance template as a TensorFile");
  TriggerFlags gen_trig;
  std::size_t gen_h = 32, gen_w = 32;
  std::string gen_out;
  gen_trig.attach(gen, "--kind", "--seed", "checkerboard|random_noise|salt_pepper|h_stripes|v_stripes");
  gen->add_option("--height", gen_h)->capture_default_str();
  gen->add_option("--width", gen_w)->capture_default_str();
  gen->add_option("--out", gen_out, "output .f32t path")->required();

  // poison
  auto* poi = app.add_subcommand("poison", "select target samples and inject the trigger");
  std::vector<std::string> poi_data;
  std::size_t poi_target = 0, poi_pnum = 0;
  std::string poi_alpha = "10/255", poi_gamma = "1", poi_select = "random", poi_out;
  std::uint64_t poi_seed = 0;
  TriggerFlags poi_trig;
  poi->add_option("--dataset", poi_data, "bundle dir, PNG class tree or CIFAR-10 batches")
      ->required();
  poi->add_option("--target", poi_target)->required();
  poi->add_option("--p-num", poi_pnum, "number of samples to poison")->required();
  poi->add_option("--alpha", poi_alpha, "budget, e.g. 10/255")->capture_default_str();
  poi->add_option("--gamma", poi_gamma, "test-time amplification to record")
      ->capture_default_str();
  poi->add_option("--select", poi_select, "random|css")->capture_default_str();
  poi_trig.attach(poi, "--trigger", "--trigger-seed", "trigger kind");
  poi->add_option("--seed", poi_seed, "selection seed")->capture_default_str();
  poi->add_option("--out", poi_out, "output bundle dir")->required();

  // apply-trigger
  auto* app_t = app.add_subcommand("apply-trigger", "amplified trigger on every image");
  std::vector<std::string> at_data;
  std::string at_alpha = "10/255", at_gamma = "1", at_out;
  TriggerFlags at_trig;
  app_t->add_option("--dataset", at_data)->required();
  at_trig.attach(app_t, "--trigger", "--trigger-seed", "trigger kind or TensorFile path");
  app_t->add_option("--alpha", at_alpha)->capture_default_str();
  app_t->add_option("--gamma", at_gamma)->capture_default_str();
  app_t->add_option("--out", at_out, "output bundle dir")->required();

  // defend
  auto* def = app.add_subcommand("defend", "sanitize every image");
  std::vector<std::string> def_data;
  std::string def_method, def_out;
  double def_tau = 0.0, def_lam = 1.0;
  std::optional<std::size_t> def_k;
  double def_sigma = 1.0;
  def->add_option("--dataset", def_data)->required();
  def->add_option("--method", def_method, "notch|mean|blur|dct")
      ->required()
      ->check(CLI::IsMember({"notch", "mean", "blur", "dct"}));
  def->add_option("--tau", def_tau, "notch dead zone")->capture_default_str();
  def->add_option("--lam", def_lam, "notch strength")->capture_default_str();
  def->add_option("--k", def_k, "kernel size (mean, blur) or suppressed corner (dct)");
  def->add_option("--sigma", def_sigma, "blur sigma")->capture_default_str();
  def->add_option("--out", def_out, "output bundle dir")->required();

  // detect
  auto* det = app.add_subcommand("detect", "class-wise CGE outlier detection");
  std::vector<std::string> det_data;
  DetectorConfig det_cfg;
  std::string det_report;
  det->add_option("--dataset", det_data)->required();
  det->add_option("--t", det_cfg.t, "z threshold")->capture_default_str();
  det->add_option("--eps", det_cfg.eps, "MAD stabilizer")->capture_default_str();
  det->add_option("--report", det_report, "write the full report here");

  // score
  auto* sco = app.add_subcommand("score", "CGE scores and ranking of one class");
  std::vector<std::string> sco_data;
  std::size_t sco_class = 0;
  std::string sco_report;
  sco->add_option("--dataset", sco_data)->required();
  sco->add_option("--class", sco_class)->required();
  sco->add_option("--report", sco_report);

  // analyze
  auto* ana = app.add_subcommand("analyze", "linear separability of clean vs poisoned");
  std::vector<std::string> ana_clean, ana_poisoned;
  double ana_ridge = 0.0;
  std::string ana_report;
  ana->add_option("--clean", ana_clean)->required();
  ana->add_option("--poisoned", ana_poisoned)->required();
  ana->add_option("--ridge", ana_ridge, "covariance ridge, 0 = default")
      ->capture_default_str();
  ana->add_option("--report", ana_report);

  // verify-optimality
  auto* ver = app.add_subcommand("verify-optimality", "enumerate +-1 templates on a small grid");
  std::size_t ver_h = 3, ver_w = 3;
  std::string ver_report;
  ver->add_option("--height", ver_h)->capture_default_str();
  ver->add_option("--width", ver_w)->capture_default_str();
  ver->add_option("--report", ver_report);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (*gen) {
    command = "gen-trigger";
    const TriggerSpec spec = gen_trig.spec();
    const LuminanceTemplate g = gen_template(spec, gen_h, gen_w);
    const fs::path out(gen_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_tensor(to_tensor(g), out);
    log("wrote " + std::to_string(gen_h) + "x" + std::to_string(gen_w) + " template to " +
        gen_out);
    const json config = {{"trigger", trigger_to_json(spec)},
                         {"height", gen_h},
                         {"width", gen_w},
                         {"out", gen_out}};
    emit(command, config, {{"out", gen_out}, {"objective", discrete_objective(g)}});
    return 0;
  }

  if (*poi) {
    command = "poison";
    const Ratio alpha = parse_ratio(poi_alpha, "--alpha");
    const Ratio gamma = parse_ratio(poi_gamma, "--gamma");
    PoisonRequest req;
    req.target_class = poi_target;
    req.alpha = alpha.value;
    req.gamma = gamma.value;
    req.trigger = poi_trig.spec();
    req.selection = parse_selection(poi_select);
    req.p_num = poi_pnum;
    req.seed = poi_seed;
    const json config = {{"dataset", path_list(poi_data)},
                         {"target", poi_target},
                         {"p_num", poi_pnum},
                         {"alpha", ratio_json(alpha)},
                         {"gamma", ratio_json(gamma)},
                         {"select", std::string(to_string(req.selection))},
                         {"trigger", trigger_to_json(req.trigger)},
                         {"seed", poi_seed},
                         {"threads", threads},
                         {"out", poi_out}};
    const LabeledDataset d = load_dataset(poi_data);
    const PoisonResult r = poison_dataset(d, req, threads);
    const fs::path out(poi_out);
    BundleMeta meta;
    meta.source = poi_data.size() == 1 ? poi_data.front() : "multiple";
    meta.created_by = "checkerboard poison";
    meta.manifest = "manifest.json";
    save_bundle(r.poisoned, meta, out);
    write_manifest(r.manifest, out / "manifest.json");
    const ImageTensor& like = d.images.front();
    save_tensor(to_tensor(gen_template(req.trigger, like.height, like.width)),
                out / "trigger.f32t");
    write_run_config(out, command, config);
    log("poisoned " + std::to_string(r.manifest.poisoned_indices.size()) + " samples of class " +
        std::to_string(poi_target) + " into " + poi_out);
    emit(command, config,
         {{"out", poi_out},
          {"poisoned_indices", r.manifest.poisoned_indices},
          {"dataset_fingerprint", r.manifest.dataset_fingerprint}});
    return 0;
  }

  if (*app_t) {
    command = "apply-trigger";
    const Ratio alpha = parse_ratio(at_alpha, "--alpha");
    const Ratio gamma = parse_ratio(at_gamma, "--gamma");
    if (!(alpha.value > 0.0 && alpha.value <= 1.0)) {
      throw InvalidInput("--alpha must lie in (0, 1], got " + alpha.text);
    }
    if (gamma.value < 1.0) throw InvalidInput("--gamma must be >= 1, got " + gamma.text);
    if (gamma.value * alpha.value > 1.0) {
      throw InvalidInput("gamma * alpha = " + std::to_string(gamma.value * alpha.value) +
                         " exceeds the full dynamic range");
    }
    const LabeledDataset d = load_dataset(at_data);
    if (d.size() == 0) throw FormatError("dataset is empty");
    json trig_echo;
    const TriggerPattern p = resolve_pattern(at_trig, d.images.front(), trig_echo);
    const json config = {{"dataset", path_list(at_data)},
                         {"trigger", trig_echo},
                         {"alpha", ratio_json(alpha)},
                         {"gamma", ratio_json(gamma)},
                         {"threads", threads},
                         {"out", at_out}};
    const LabeledDataset out = apply_trigger(d, p, alpha.value, gamma.value, threads);
    BundleMeta meta;
    meta.source = at_data.size() == 1 ? at_data.front() : "multiple";
    meta.created_by = "checkerboard apply-trigger";
    save_bundle(out, meta, at_out);
    write_run_config(at_out, command, config);
    emit(command, config, {{"out", at_out}, {"samples", out.size()}});
    return 0;
  }

  if (*def) {
    command = "defend";
    const LabeledDataset d = load_dataset(def_data);
    if (d.size() == 0) throw FormatError("dataset is empty");
    const ImageTensor& like = d.images.front();
    json params;
    std::function<ImageTensor(const ImageTensor&)> filter;
    if (def_method == "notch") {
      const NotchConfig cfg = NotchConfig::for_shape(like.height, like.width, like.channels,
                                                     def_tau, def_lam);
      cfg.validate();
      params = {{"tau", def_tau}, {"lam", def_lam}};
      filter = [cfg](const ImageTensor& x) { return notch_sanitize(x, cfg); };
    } else if (def_method == "mean") {
      const std::size_t k = def_k.value_or(3);
      params = {{"k", k}};
      filter = [k](const ImageTensor& x) { return mean_filter(x, k); };
    } else if (def_method == "blur") {
      const std::size_t k = def_k.value_or(3);
      const double sigma = def_sigma;
      gaussian_kernel(sigma, k);  // reject bad parameters before touching data
      params = {{"k", k}, {"sigma", sigma}};
      filter = [k, sigma](const ImageTensor& x) { return gaussian_blur(x, sigma, k); };
    } else {
      const std::size_t k = def_k.value_or(1);
      if (k > std::min(like.height, like.width)) {
        throw InvalidInput("--k " + std::to_string(k) + " exceeds min(H, W) = " +
                           std::to_string(std::min(like.height, like.width)));
      }
      params = {{"k", k}};
      filter = [k](const ImageTensor& x) { return dct_suppress(x, k); };
    }
    const json config = {{"dataset", path_list(def_data)},
                         {"method", def_method},
                         {"params", params},
                         {"threads", threads},
                         {"out", def_out}};
    LabeledDataset out = d;
    parallel_for(d.size(), threads, [&](std::size_t i) { out.images[i] = filter(d.images[i]); });
    BundleMeta meta;
    meta.source = def_data.size() == 1 ? def_data.front() : "multiple";
    meta.created_by = "checkerboard defend";
    save_bundle(out, meta, def_out);
    write_run_config(def_out, command, config);
    log("sanitized " + std::to_string(out.size()) + " samples with " + def_method);
    emit(command, config, {{"out", def_out}, {"samples", out.size()}});
    return 0;
  }

  if (*det) {
    command = "detect";
    det_cfg.validate();
    const json config = {{"dataset", path_list(det_data)},
                         {"t", det_cfg.t},
                         {"eps", det_cfg.eps},
                         {"threads", threads}};
    const LabeledDataset d = load_dataset(det_data);
    const DetectionReport r = cge_detect(d, det_cfg, threads);
    json report = report_to_json(r);
    write_report(det_report, command, config, report);
    json s = json::array();
    for (const auto& c : r.per_class) s.push_back(c.outlier_fraction);
    emit(command, config, {{"flagged_class", r.flagged_class}, {"s", s}});
    return 0;
  }

  if (*sco) {
    command = "score";
    const json config = {{"dataset", path_list(sco_data)}, {"class", sco_class},
                         {"threads", threads}};
    const LabeledDataset d = load_dataset(sco_data);
    const CgeReport r = rank_by_cge(d, sco_class, threads);
    write_report(sco_report, command, config, report_to_json(r));
    json top = json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(r.ranking.size(), 10); ++i) {
      top.push_back(r.ranking[i]);
    }
    emit(command, config, {{"class", sco_class}, {"count", r.entries.size()}, {"lowest", top}});
    return 0;
  }

  if (*ana) {
    command = "analyze";
    const json config = {{"clean", path_list(ana_clean)},
                         {"poisoned", path_list(ana_poisoned)},
                         {"ridge", ana_ridge},
                         {"threads", threads}};
    const LabeledDataset clean = load_dataset(ana_clean);
    const LabeledDataset poisoned = load_dataset(ana_poisoned);
    const auto cv = luminance_vectors(clean.images);
    const auto pv = luminance_vectors(poisoned.images);
    const SeparabilityReport r = analyze_separability(cv, pv, ana_ridge, threads);
    const json report = report_to_json(r);
    write_report(ana_report, command, config, report);
    emit(command, config, report);
    return 0;
  }

  if (*ver) {
    command = "verify-optimality";
    const json config = {{"height", ver_h}, {"width", ver_w}};
    const OptimumResult r = brute_force_optimum(ver_h, ver_w);
    const json report = report_to_json(r, ver_h, ver_w);
    write_report(ver_report, command, config, report);
    emit(command, config, report);
    return 0;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const checkerboard::InvalidInput& e) {
    log(std::string("invalid input: ") + e.what());
    return kExitUsage;
  } catch (const checkerboard::ResourceLimit& e) {
    log(std::string("resource limit: ") + e.what());
    return kExitUsage;
  } catch (const checkerboard::FormatError& e) {
    log(std::string("format error: ") + e.what());
    return kExitData;
  } catch (const checkerboard::NumericalError& e) {
    log(std::string("numerical error: ") + e.what());
    return kExitNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    log(std::string("filesystem error: ") + e.what());
    return kExitData;
  } catch (const nlohmann::json::exception& e) {
    log(std::string("json error: ") + e.what());
    return kExitData;
  } catch (const std::exception& e) {
    log(std::string("error: ") + e.what());
    return 1;
  }
}
