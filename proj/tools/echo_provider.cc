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

// Protocol test double. By default it answers every query with fixed
// tensors derived from (class, patch) indices; --scene serves a synthetic
// scene instead. The fault flags make it misbehave in one specific way.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <memory>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "salseg/protocol.h"
#include "salseg/synthetic.h"

namespace {

enum class Fault { kNone, kWrongGrid, kLeak, kGarbage, kExit, kHang };

class FixedProvider : public salseg::SalienceProvider {
 public:
  FixedProvider(int classes, int grid, Fault fault)
      : classes_(classes), grid_(grid), fault_(fault) {}

  int classes() const override { return classes_; }
  int grid() const override { return grid_; }

  salseg::SalienceResponse Query(const salseg::ActivePatchSet& active) override {
    if (fault_ == Fault::kGarbage) {
      std::cout << "this is not json" << std::endl;
      std::this_thread::sleep_for(std::chrono::hours(1));
    }
    if (fault_ == Fault::kExit) std::exit(3);
    if (fault_ == Fault::kHang) std::this_thread::sleep_for(std::chrono::hours(1));
    const int p = fault_ == Fault::kWrongGrid ? grid_ + 1 : grid_;
    salseg::AttentionStack attention(classes_, p);
    salseg::GradientStack gradient(classes_, p);
    for (int k = 0; k < classes_; ++k) {
      for (int flat = 0; flat < p * p; ++flat) {
        const bool on = flat < active.patches() && active.active(flat);
        if (!on && fault_ != Fault::kLeak) continue;
        const std::size_t i = static_cast<std::size_t>(k) * p * p + flat;
        attention.mutable_values()[i] =
            static_cast<float>((k * p * p + flat + 1) / 1000.0);
        gradient.mutable_values()[i] =
            static_cast<float>((k + flat) % 3 - 1);
      }
    }
    return {std::move(attention), std::move(gradient)};
  }

 private:
  int classes_;
  int grid_;
  Fault fault_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Salience provider test double"};
  std::string scene_path;
  std::string fault_name = "none";
  bool fail_init = false;
  app.add_option("--scene", scene_path, "Serve this synthetic scene");
  app.add_option("--fault", fault_name,
                 "none | wrong-grid | leak | garbage | exit | hang")
      ->check(CLI::IsMember(
          {"none", "wrong-grid", "leak", "garbage", "exit", "hang"}));
  app.add_flag("--fail-init", fail_init, "Answer init with an error");
  CLI11_PARSE(app, argc, argv);

  Fault fault = Fault::kNone;
  if (fault_name == "wrong-grid") fault = Fault::kWrongGrid;
  if (fault_name == "leak") fault = Fault::kLeak;
  if (fault_name == "garbage") fault = Fault::kGarbage;
  if (fault_name == "exit") fault = Fault::kExit;
  if (fault_name == "hang") fault = Fault::kHang;

  return salseg::ServeProtocol(
      std::cin, std::cout,
      [&](const salseg::ProviderInit& init)
          -> std::unique_ptr<salseg::SalienceProvider> {
        if (fail_init) throw std::runtime_error("init refused on request");
        if (!scene_path.empty()) {
          return std::make_unique<salseg::SyntheticProvider>(
              salseg::LoadScene(scene_path), init.layer, init.head);
        }
        return std::make_unique<FixedProvider>(
            static_cast<int>(init.classes.size()), init.grid, fault);
      });
}
