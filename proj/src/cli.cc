/* Copyright 2026 The Salseg Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "salseg/cli.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/chrono.h>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "salseg/error.h"
#include "salseg/metrics.h"
#include "salseg/netpbm.h"
#include "salseg/protocol.h"
#include "salseg/refine.h"
#include "salseg/salt.h"
#include "salseg/segmenter.h"
#include "salseg/synthetic.h"

namespace salseg {

namespace fs = std::filesystem;

ProviderSpec ProviderSpec::Parse(const std::string& text) {
  ProviderSpec spec;
  const std::size_t colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  spec.argument = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "synthetic") {
    spec.kind = Kind::kSynthetic;
  } else if (kind == "subprocess") {
    spec.kind = Kind::kSubprocess;
    if (spec.argument.empty()) {
      throw ContractError("subprocess provider needs a command");
    }
  } else {
    throw ContractError("unknown provider '" + text +
                        "'; expected synthetic:<scene> or subprocess:<cmd>");
  }
  return spec;
}

namespace {

using Clock = std::chrono::steady_clock;

double MillisSince(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("bad JSON in {}: {}", path, e.what()));
  }
}

void WriteTextFile(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void MakeDirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw IoError(fmt::format("cannot create {}: {}", dir.string(),
                              ec.message()));
  }
}

Rgb OverlayColor(int label) {
  constexpr Rgb kColors[] = {{230, 25, 75},  {60, 180, 75},  {255, 225, 25},
                             {0, 130, 200},  {245, 130, 48}, {145, 30, 180},
                             {70, 240, 240}, {240, 50, 230}, {210, 245, 60},
                             {250, 190, 212}};
  constexpr int kCount = sizeof(kColors) / sizeof(kColors[0]);
  return kColors[(label - 1) % kCount];
}

RgbImage Overlay(const RgbImage& image, const LabelRaster& labels) {
  RgbImage out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      const int label = labels.at(x, y);
      if (label == 0) continue;
      const Rgb a = image.at(x, y);
      const Rgb b = OverlayColor(label);
      out.set(x, y,
              {static_cast<std::uint8_t>((a[0] + b[0]) / 2),
               static_cast<std::uint8_t>((a[1] + b[1]) / 2),
               static_cast<std::uint8_t>((a[2] + b[2]) / 2)});
    }
  }
  return out;
}

std::vector<std::uint8_t> EncodeSoftMaps(const SoftMaskStack& soft) {
  const auto k = static_cast<std::uint32_t>(soft.size());
  const auto h = static_cast<std::uint32_t>(soft.front().height());
  const auto w = static_cast<std::uint32_t>(soft.front().width());
  std::vector<float> values;
  values.reserve(static_cast<std::size_t>(k) * h * w);
  for (const RealPlane& plane : soft) {
    for (double v : plane.data()) values.push_back(static_cast<float>(v));
  }
  return SaltEncode(SaltTensor::FromFloat32({k, h, w}, values));
}

// One image to segment.
struct SegmentJob {
  std::string name;
  std::string image_path;
  std::vector<std::string> classes;
  std::optional<SyntheticScene> scene;
  // Maps local label k + 1 to the dataset-wide label, when known.
  std::vector<int> global_labels;
};

std::unique_ptr<SalienceProvider> MakeProvider(
    const ProviderSpec& spec, const std::string& image_path,
    const std::vector<std::string>& classes,
    const std::optional<SyntheticScene>& scene, int layer, int head, int grid,
    std::chrono::milliseconds timeout) {
  if (spec.kind == ProviderSpec::Kind::kSynthetic) {
    if (!scene) throw ContractError("synthetic provider needs a scene file");
    return std::make_unique<SyntheticProvider>(*scene, layer, head);
  }
  ProviderInit init;
  init.image = fs::absolute(image_path).string();
  init.classes = classes;
  init.layer = layer;
  init.head = head;
  init.grid = grid;
  return std::make_unique<SubprocessProvider>(spec.argument, std::move(init),
                                              SubprocessOptions{timeout});
}

std::string UtcNow() {
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}",
                     fmt::gmtime(std::chrono::system_clock::to_time_t(
                         std::chrono::system_clock::now())));
}

nlohmann::json RunSegmentJob(const SegmentJob& job,
                             const SegmentOptions& options,
                             const fs::path& dir,
                             const std::optional<fs::path>& pred_path) {
  nlohmann::json report;
  report["started_at"] = UtcNow();
  report["image"] = job.image_path;
  report["classes"] = job.classes;
  report["config"] = options.config;
  report["config_hash"] = ConfigHash(options.config);
  nlohmann::json timings;
  std::string stage = "load";
  try {
    auto t = Clock::now();
    const RgbImage image = LoadPpm(job.image_path);
    timings["load_ms"] = MillisSince(t);

    stage = "provider";
    t = Clock::now();
    std::unique_ptr<SalienceProvider> provider = MakeProvider(
        options.provider, job.image_path, job.classes, job.scene,
        options.config.layer, options.config.head, options.grid,
        options.timeout);
    timings["provider_init_ms"] = MillisSince(t);
    if (provider->classes() != static_cast<int>(job.classes.size())) {
      throw ContractError(fmt::format("provider has {} classes, job has {}",
                                      provider->classes(), job.classes.size()));
    }

    stage = "salience";
    t = Clock::now();
    AccumulatedSalience history;
    const GradCamStack salience =
        ExtractSalience(*provider, options.config, &history);
    timings["salience_ms"] = MillisSince(t);

    stage = "refine";
    t = Clock::now();
    const SegmentationResult result =
        RefinePipeline(salience, image, options.config);
    timings["refine_ms"] = MillisSince(t);

    stage = "provider shutdown";
    if (auto* sub = dynamic_cast<SubprocessProvider*>(provider.get())) {
      const int code = sub->Shutdown();
      report["provider_exit_code"] = code;
      if (code != 0) {
        throw ProtocolError(fmt::format("provider exited with {}", code));
      }
    }

    stage = "write";
    t = Clock::now();
    MakeDirs(dir);
    WriteFileBytes((dir / "soft.salt").string(), EncodeSoftMaps(result.soft));
    for (int k = 0; k < static_cast<int>(job.classes.size()); ++k) {
      BinaryPlane mask(image.width(), image.height());
      for (std::size_t p = 0; p < mask.size(); ++p) {
        mask[p] = result.labels[p] == k + 1;
      }
      SaveLabelRaster(mask, (dir / fmt::format("mask_{}.pgm", k)).string());
    }
    SaveLabelRaster(result.labels, (dir / "labels.pgm").string());
    SavePpm(Overlay(image, result.labels), (dir / "overlay.ppm").string());
    if (pred_path) {
      LabelRaster global = result.labels;
      for (std::size_t p = 0; p < global.size(); ++p) {
        if (global[p] > 0) {
          global[p] = static_cast<std::uint8_t>(job.global_labels[global[p] - 1]);
        }
      }
      SaveLabelRaster(global, pred_path->string());
    }
    timings["write_ms"] = MillisSince(t);

    std::vector<int> active_counts;
    for (const ActivePatchSet& s : history.active_sets) {
      active_counts.push_back(s.count());
    }
    report["active_counts"] = active_counts;
    report["final_active_patches"] = active_counts.back();
    report["rounds"] = history.rounds();
    report["status"] = "ok";
  } catch (const std::exception& e) {
    report["status"] = "error";
    report["failed_stage"] = stage;
    report["error"] = e.what();
  }
  report["timings"] = timings;
  std::error_code ec;
  fs::create_directories(dir, ec);
  WriteTextFile(dir / "report.json", report.dump(2) + "\n");
  return report;
}

std::optional<ClassList> MaybeClassList(const fs::path& path) {
  if (!fs::exists(path)) return std::nullopt;
  return LoadClassList(path.string());
}

}  // namespace

int CmdSegment(const SegmentOptions& options, std::ostream& out,
               std::ostream& err) {
  options.config.Validate();
  std::vector<SegmentJob> jobs;
  bool batch = !options.manifest.empty();
  if (batch) {
    const Manifest manifest = LoadManifest(options.manifest);
    const std::optional<ClassList> classes =
        MaybeClassList(fs::path(manifest.root) / "classes.txt");
    for (const ManifestEntry& e : manifest.entries) {
      SegmentJob job;
      job.name = fs::path(e.image).stem().string();
      job.image_path = (fs::path(manifest.root) / e.image).string();
      job.classes = e.classes_present;
      if (options.provider.kind == ProviderSpec::Kind::kSynthetic) {
        if (e.scene.empty()) {
          throw ContractError("manifest entry " + e.image + " has no scene");
        }
        job.scene = LoadScene((fs::path(manifest.root) / e.scene).string());
        job.classes = job.scene->classes;
      }
      for (const std::string& name : job.classes) {
        const std::optional<int> label =
            classes ? classes->LabelOf(name) : std::nullopt;
        if (classes && !label) {
          throw ContractError("class '" + name + "' missing from classes.txt");
        }
        job.global_labels.push_back(label.value_or(
            static_cast<int>(job.global_labels.size()) + 1));
      }
      jobs.push_back(std::move(job));
    }
  } else {
    if (options.image.empty()) {
      throw ContractError("segment needs --image or --manifest");
    }
    SegmentJob job;
    job.name = fs::path(options.image).stem().string();
    job.image_path = options.image;
    if (options.provider.kind == ProviderSpec::Kind::kSynthetic) {
      if (options.provider.argument.empty()) {
        throw ContractError("single-image runs need synthetic:<scene.json>");
      }
      job.scene = LoadScene(options.provider.argument);
      job.classes = job.scene->classes;
    } else {
      if (options.classes.empty()) {
        throw ContractError("subprocess providers need --classes");
      }
      job.classes = options.classes;
    }
    jobs.push_back(std::move(job));
  }

  const fs::path out_dir(options.out);
  MakeDirs(out_dir);
  if (batch) MakeDirs(out_dir / "pred");
  std::vector<nlohmann::json> reports(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      const fs::path dir = batch ? out_dir / jobs[i].name : out_dir;
      std::optional<fs::path> pred;
      if (batch) pred = out_dir / "pred" / (jobs[i].name + ".pgm");
      reports[i] = RunSegmentJob(jobs[i], options, dir, pred);
    }
  };
  const int threads =
      std::clamp<int>(options.jobs, 1, static_cast<int>(jobs.size()));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }

  int failures = 0;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    const nlohmann::json& r = reports[i];
    if (r["status"] == "ok") {
      out << fmt::format("{}: ok, {} active patches after {} rounds\n",
                         jobs[i].name, r["final_active_patches"].get<int>(),
                         r["rounds"].get<int>());
    } else {
      ++failures;
      err << fmt::format("{}: failed during {}: {}\n", jobs[i].name,
                         r["failed_stage"].get<std::string>(),
                         r["error"].get<std::string>());
    }
  }
  if (batch) {
    nlohmann::json summary = {{"images", jobs.size()},
                              {"failures", failures},
                              {"config", options.config},
                              {"config_hash", ConfigHash(options.config)}};
    WriteTextFile(out_dir / "run.json", summary.dump(2) + "\n");
  }
  return failures == 0 ? 0 : 2;
}

namespace {

std::unique_ptr<SimilarityOracle> LoadOracle(const std::string& spec,
                                             const std::string& manifest_root) {
  std::string path;
  if (spec.empty()) {
    path = (fs::path(manifest_root) / "palette.json").string();
  } else if (spec.rfind("palette:", 0) == 0) {
    path = spec.substr(8);
  } else {
    throw IoError("oracle unavailable: unknown oracle '" + spec +
                  "'; expected palette:<palette.json>");
  }
  if (!fs::exists(path)) {
    throw IoError("oracle unavailable: no palette at " + path);
  }
  std::map<std::string, Rgb> palette;
  const nlohmann::json colors = ReadJsonFile(path);
  try {
    for (const auto& [name, rgb] : colors.items()) palette[name] = rgb.get<Rgb>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(fmt::format("bad palette {}: {}", path, e.what()));
  }
  return std::make_unique<PaletteOracle>(std::move(palette));
}

}  // namespace

int CmdTune(const TuneOptions& options, std::ostream& out, std::ostream& err) {
  options.base.Validate();
  const Manifest manifest = LoadManifest(options.manifest);
  if (manifest.entries.empty()) throw ContractError("manifest has no entries");
  const std::unique_ptr<SimilarityOracle> oracle =
      LoadOracle(options.oracle, manifest.root);
  SearchSpace space;
  if (!options.space.empty()) {
    try {
      space = ReadJsonFile(options.space).get<SearchSpace>();
    } catch (const nlohmann::json::exception& e) {
      throw ContractError(
          fmt::format("bad search space {}: {}", options.space, e.what()));
    }
  }
  space.Validate();
  RandomSearchOptions search = options.search;
  const int layer_values = static_cast<int>(space.layer.Values().size());
  if (search.groups > layer_values) {
    err << fmt::format("note: {} layer values, using {} groups instead of {}\n",
                       layer_values, layer_values, search.groups);
    search.groups = layer_values;
  }

  std::vector<ValidationImage> images;
  std::vector<SyntheticScene> scenes;
  std::vector<std::string> image_paths;
  for (const ManifestEntry& e : manifest.entries) {
    const std::string path = (fs::path(manifest.root) / e.image).string();
    ValidationImage v{fs::path(e.image).stem().string(), LoadPpm(path),
                      e.classes_present};
    if (options.provider.kind == ProviderSpec::Kind::kSynthetic) {
      if (e.scene.empty()) {
        throw ContractError("manifest entry " + e.image + " has no scene");
      }
      scenes.push_back(
          LoadScene((fs::path(manifest.root) / e.scene).string()));
      v.classes_present = scenes.back().classes;
    }
    image_paths.push_back(path);
    images.push_back(std::move(v));
  }
  ProviderFactory factory = [&](std::size_t i, int layer, int head)
      -> std::unique_ptr<SalienceProvider> {
    std::optional<SyntheticScene> scene;
    if (!scenes.empty()) scene = scenes[i];
    return MakeProvider(options.provider, image_paths[i],
                        images[i].classes_present, scene, layer, head,
                        options.grid, options.timeout);
  };

  const auto start = Clock::now();
  const StagedTuneResult result =
      StagedTune(space, options.base,
                 MakeRewardEvaluator(images, factory, *oracle), search);

  const fs::path out_dir(options.out);
  MakeDirs(out_dir);
  std::string trace;
  auto append = [&trace](const SearchResult& r, int stage) {
    for (const TraceRecord& record : r.trace) {
      nlohmann::json j = TraceRecordJson(record);
      j["stage"] = stage;
      trace += j.dump() + "\n";
    }
  };
  append(result.stage1, 1);
  if (result.stage2) append(*result.stage2, 2);
  WriteTextFile(out_dir / "trace.ndjson", trace);
  WriteTextFile(out_dir / "best_config.json",
                nlohmann::json(result.config).dump(2) + "\n");

  out << fmt::format(
      "best: layer {} head {} threshold {} blur_sigma {} (stage 1 reward {}",
      result.config.layer, result.config.head, result.config.threshold,
      result.config.blur_sigma, result.stage1.best_total);
  if (result.stage2) out << fmt::format(", stage 2 reward {}", result.stage2->best_total);
  out << fmt::format(") in {:.1f} s\n", MillisSince(start) / 1000.0);
  return 0;
}

namespace {

std::set<std::string> PgmNames(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  std::set<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
      names.insert(entry.path().filename().string());
    }
  }
  return names;
}

}  // namespace

int CmdEval(const EvalOptions& options, std::ostream& out,
            std::ostream& err) {
  const ClassList classes = LoadClassList(options.classes_file);
  const std::set<std::string> pred = PgmNames(options.pred_dir);
  const std::set<std::string> gt = PgmNames(options.gt_dir);
  std::vector<std::string> paired;
  std::vector<std::string> missing;
  for (const std::string& name : gt) {
    (pred.count(name) ? paired : missing).push_back(name);
  }
  std::vector<std::string> extra;
  for (const std::string& name : pred) {
    if (!gt.count(name)) extra.push_back(name);
  }
  for (const std::string& name : missing) {
    err << "missing prediction for " << name << '\n';
  }
  for (const std::string& name : extra) {
    err << "missing ground truth for " << name << '\n';
  }
  if (paired.empty()) {
    throw IoError("no prediction/ground-truth pairs share a filename");
  }

  ConfusionAccumulator acc(classes.size());
  for (const std::string& name : paired) {
    const LabelRaster truth = LoadLabelRaster(
        (fs::path(options.gt_dir) / name).string());
    const LabelRaster predicted = LoadLabelRaster(
        (fs::path(options.pred_dir) / name).string(), classes.size());
    acc.Add(truth, predicted);
  }
  const std::vector<std::optional<double>> iou = IouPerClass(acc);
  const double miou = MeanIou(acc);

  nlohmann::json per_class = nlohmann::json::object();
  out << fmt::format("{:<20} {:>8}\n", "class", "IoU");
  for (int label = 0; label < acc.labels(); ++label) {
    const std::string name =
        label == 0 ? "background" : classes.names[label - 1];
    out << fmt::format("{:<20} {:>8}\n", name,
                       iou[label] ? fmt::format("{:.4f}", *iou[label]) : "n/a");
    per_class[name] =
        iou[label] ? nlohmann::json(*iou[label]) : nlohmann::json(nullptr);
  }
  out << fmt::format("{:<20} {:>8.4f}\n", "mIoU", miou);

  if (!options.out.empty()) {
    nlohmann::json report = {{"miou", miou},
                             {"iou", per_class},
                             {"images", paired},
                             {"missing_predictions", missing},
                             {"missing_ground_truth", extra}};
    WriteTextFile(options.out, report.dump(2) + "\n");
  }
  return missing.empty() && extra.empty() ? 0 : 2;
}

int CmdSynth(const SynthOptions& options, std::ostream& out,
             std::ostream& err) {
  (void)err;
  const Benchmark bench = SynthBenchmark(options.spec);
  WriteBenchmark(bench, options.out);
  out << fmt::format("wrote {} images with {} classes to {}\n",
                     bench.items.size(), bench.classes.size(), options.out);
  return 0;
}

namespace {

struct PipelineFlags {
  std::string config_path;
  std::optional<int> rounds;
  std::optional<int> layer;
  std::optional<int> head;
  std::optional<double> threshold;
  std::optional<double> sigma;
  bool no_blur = false;
  bool no_crf = false;
  bool gradcam_only = false;

  void Register(CLI::App* app) {
    app->add_option("--config", config_path, "Pipeline config JSON");
    app->add_option("--rounds", rounds, "Salience dropout rounds")
        ->check(CLI::PositiveNumber);
    app->add_option("--layer", layer, "Attention layer")
        ->check(CLI::PositiveNumber);
    app->add_option("--head", head, "Attention head")
        ->check(CLI::PositiveNumber);
    app->add_option("--threshold", threshold, "Mask threshold");
    app->add_option("--sigma", sigma, "Blur sigma, fraction of short side");
    app->add_flag("--no-blur", no_blur, "Skip the Gaussian blur");
    app->add_flag("--no-crf", no_crf, "Skip the dense CRF");
    app->add_flag("--gradcam-only", gradcam_only,
                  "One GradCAM round with no blur and no CRF");
  }

  PipelineConfig Build() const {
    PipelineConfig config;
    if (!config_path.empty()) {
      try {
        config = ReadJsonFile(config_path).get<PipelineConfig>();
      } catch (const nlohmann::json::exception& e) {
        throw ContractError(
            fmt::format("bad config {}: {}", config_path, e.what()));
      }
    }
    if (layer) config.layer = *layer;
    if (head) config.head = *head;
    if (threshold) config.threshold = *threshold;
    if (sigma) config.blur_sigma = *sigma;
    if (gradcam_only) {
      config.mode = SalienceMode::kGradCam;
      config.dropout_rounds = 1;
      config.blur = false;
      config.crf = false;
    }
    if (rounds) config.dropout_rounds = *rounds;
    if (no_blur) config.blur = false;
    if (no_crf) config.crf = false;
    return config;
  }
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err) {
  CLI::App app{"Training-free open-vocabulary segmentation from VLM salience"};
  app.require_subcommand(1);

  std::string provider = "synthetic";
  int jobs = 1;
  int grid = 24;
  double timeout_s = 300;
  PipelineFlags flags;

  SegmentOptions seg;
  std::string classes_csv;
  CLI::App* segment = app.add_subcommand("segment", "Segment images");
  segment->add_option("--provider", provider,
                      "synthetic:<scene.json> | subprocess:<command>");
  segment->add_option("--image", seg.image, "Input PPM image");
  segment->add_option("--classes", classes_csv,
                      "Comma-separated class names (subprocess providers)");
  segment->add_option("--manifest", seg.manifest, "Dataset manifest JSON");
  segment->add_option("--out", seg.out, "Output directory")->required();
  segment->add_option("--jobs", jobs, "Images processed in parallel")
      ->check(CLI::PositiveNumber);
  segment->add_option("--grid", grid, "Patch grid side for subprocess providers")
      ->check(CLI::PositiveNumber);
  segment->add_option("--timeout", timeout_s, "Provider reply timeout, seconds")
      ->check(CLI::PositiveNumber);
  flags.Register(segment);

  TuneOptions tune;
  std::string space_path;
  CLI::App* tune_cmd = app.add_subcommand("tune", "Staged random search");
  tune_cmd->add_option("--manifest", tune.manifest, "Validation manifest")
      ->required();
  tune_cmd->add_option("--provider", provider,
                       "synthetic | subprocess:<command>");
  tune_cmd->add_option("--oracle", tune.oracle, "palette:<palette.json>");
  tune_cmd->add_option("--space", tune.space, "Search space JSON");
  tune_cmd->add_option("--groups", tune.search.groups, "Layer groups")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--iters", tune.search.iters_per_group,
                       "Search iterations per group")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--seed", tune.search.seed, "Search seed");
  tune_cmd->add_option("--jobs", jobs, "Run groups in parallel when > 1")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--grid", grid, "Patch grid side for subprocess providers")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--timeout", timeout_s, "Provider reply timeout, seconds")
      ->check(CLI::PositiveNumber);
  tune_cmd->add_option("--out", tune.out, "Output directory")->required();
  flags.Register(tune_cmd);

  EvalOptions eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Score label rasters");
  eval_cmd->add_option("--pred", eval.pred_dir, "Predicted PGM directory")
      ->required();
  eval_cmd->add_option("--gt", eval.gt_dir, "Ground-truth PGM directory")
      ->required();
  eval_cmd->add_option("--classes", eval.classes_file, "Class list file")
      ->required();
  eval_cmd->add_option("--out", eval.out, "JSON report path");

  SynthOptions synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic dataset");
  synth_cmd->add_option("--seed", synth.spec.seed, "Generator seed");
  synth_cmd->add_option("--images", synth.spec.images, "Image count")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--classes", synth.spec.classes, "Vocabulary size")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--grid", synth.spec.grid, "Patch grid side")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--width", synth.spec.width, "Image width")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--height", synth.spec.height, "Image height")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--decay", synth.spec.decay, "Attention decay");
  synth_cmd->add_option("--noise", synth.spec.noise, "Attention noise");
  synth_cmd->add_option("--pixel-noise", synth.spec.pixel_noise,
                        "Pixel noise amplitude");
  synth_cmd->add_option("--focus-layer", synth.spec.focus_layer,
                        "Layer that sees the scene cleanly (0 = all)");
  synth_cmd->add_option("--focus-head", synth.spec.focus_head,
                        "Head that sees the scene cleanly (0 = all)");
  synth_cmd->add_option("--out", synth.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  const auto timeout = std::chrono::milliseconds(
      static_cast<long long>(timeout_s * 1000.0));
  try {
    PipelineConfig config;
    ProviderSpec spec;
    try {
      config = flags.Build();
      config.Validate();
      spec = ProviderSpec::Parse(provider);
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    if (segment->parsed()) {
      seg.provider = spec;
      seg.config = config;
      seg.jobs = jobs;
      seg.grid = grid;
      seg.timeout = timeout;
      for (std::size_t pos = 0; !classes_csv.empty();) {
        const std::size_t comma = classes_csv.find(',', pos);
        seg.classes.push_back(classes_csv.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
      }
      return CmdSegment(seg, out, err);
    }
    if (tune_cmd->parsed()) {
      tune.provider = spec;
      tune.base = config;
      tune.grid = grid;
      tune.timeout = timeout;
      tune.search.parallel = jobs > 1;
      return CmdTune(tune, out, err);
    }
    if (eval_cmd->parsed()) return CmdEval(eval, out, err);
    return CmdSynth(synth, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace salseg
