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

#ifndef SALSEG_SEGMENTER_H_
#define SALSEG_SEGMENTER_H_

#include "salseg/grid_stack.h"
#include "salseg/image.h"
#include "salseg/pipeline_config.h"
#include "salseg/provider.h"
#include "salseg/refine.h"

namespace salseg {

struct SegmentRun {
  // Per-round history; a single round in attention-softmax mode.
  AccumulatedSalience salience;
  // The stack handed to refinement: the dropout aggregate, or the class
  // softmax of raw attention.
  GradCamStack refined_input;
  SegmentationResult result;
};

// Salience extraction followed by RefinePipeline.
SegmentRun Segment(SalienceProvider& provider, const RgbImage& image,
                   const PipelineConfig& config);

// Salience stage only.
GradCamStack ExtractSalience(SalienceProvider& provider,
                             const PipelineConfig& config,
                             AccumulatedSalience* history = nullptr);

}  // namespace salseg

#endif  // SALSEG_SEGMENTER_H_
