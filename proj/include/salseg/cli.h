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

#ifndef SALSEG_CLI_H_
#define SALSEG_CLI_H_

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "salseg/benchmark.h"
#include "salseg/pipeline_config.h"
#include "salseg/tuner.h"

namespace salseg {

// "synthetic:<scene.json>", "synthetic" (scene taken from the manifest) or
// "subprocess:<shell command>".
struct ProviderSpec {
  enum class Kind { kSynthetic, kSubprocess };
  Kind kind = Kind::kSynthetic;
  std::string argument;

  static ProviderSpec Parse(const std::string& text);
};

struct SegmentOptions {
  ProviderSpec provider;
  // Single-image mode: image path and, for subprocess providers, class
  // names. Ignored when `manifest` is set.
  std::string image;
  std::vector<std::string> classes;
  // Batch mode over a dataset manifest.
  std::string manifest;
  PipelineConfig config;
  int grid = 24;
  std::string out;
  int jobs = 1;
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
};

struct TuneOptions {
  std::string manifest;
  ProviderSpec provider;
  // "palette:<palette.json>"; empty means <manifest dir>/palette.json.
  std::string oracle;
  std::string space;  // optional JSON file
  PipelineConfig base;
  int grid = 24;
  RandomSearchOptions search;
  std::string out;
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
};

struct EvalOptions {
  std::string pred_dir;
  std::string gt_dir;
  std::string classes_file;
  std::string out;  // JSON report path
};

struct SynthOptions {
  BenchmarkSpec spec;
  std::string out;
};

// Each command returns a process exit code: 0 on success, 2 on runtime
// failure. Human-readable output goes to `out`, diagnostics to `err`.
int CmdSegment(const SegmentOptions& options, std::ostream& out,
               std::ostream& err);
int CmdTune(const TuneOptions& options, std::ostream& out, std::ostream& err);
int CmdEval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int CmdSynth(const SynthOptions& options, std::ostream& out,
             std::ostream& err);

// Parses flags and dispatches; usage errors return 1.
int RunCli(int argc, const char* const* argv, std::ostream& out,
           std::ostream& err);

}  // namespace salseg

#endif  // SALSEG_CLI_H_
