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

#include "salseg/segmenter.h"

#include "salseg/salience.h"

namespace salseg {

GradCamStack ExtractSalience(SalienceProvider& provider,
                             const PipelineConfig& config,
                             AccumulatedSalience* history) {
  if (config.mode == SalienceMode::kAttentionSoftmax) {
    const ActivePatchSet full = ActivePatchSet::Full(provider.grid());
    SalienceResponse response = provider.Query(full);
    ValidateResponse(response, provider.classes(), provider.grid(), full);
    const AttentionStack probs = ClassSoftmax(response.attention);
    GradCamStack out(probs.classes(), probs.grid(),
                     std::vector<float>(probs.values().begin(),
                                        probs.values().end()));
    if (history) {
      history->aggregate = out;
      history->history = {out};
      history->active_sets = {full, full};
    }
    return out;
  }
  AccumulatedSalience acc = RunSalienceDropout(provider, config.dropout_rounds);
  GradCamStack out = acc.aggregate;
  if (history) *history = std::move(acc);
  return out;
}

SegmentRun Segment(SalienceProvider& provider, const RgbImage& image,
                   const PipelineConfig& config) {
  config.Validate();
  SegmentRun run;
  run.refined_input = ExtractSalience(provider, config, &run.salience);
  run.result = RefinePipeline(run.refined_input, image, config);
  return run;
}

}  // namespace salseg
