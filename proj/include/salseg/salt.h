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

#ifndef SALSEG_SALT_H_
#define SALSEG_SALT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "salseg/grid_stack.h"

namespace salseg {

// SALT tensor container:
//   "SALT" | version 0x01 | dtype | ndim | ndim x uint32 LE dims | payload
// Payload is row-major little-endian with no padding.
enum class SaltDtype : std::uint8_t {
  kFloat32 = 0x01,
  kUint8 = 0x02,
};

inline constexpr std::uint8_t kSaltVersion = 0x01;
inline constexpr std::size_t kSaltFixedHeader = 7;

struct SaltTensor {
  SaltDtype dtype = SaltDtype::kFloat32;
  std::vector<std::uint32_t> dims;
  // Raw little-endian payload bytes.
  std::vector<std::uint8_t> payload;

  std::size_t elements() const;
  std::vector<float> AsFloat32() const;
  std::vector<std::uint8_t> AsUint8() const;

  static SaltTensor FromFloat32(std::vector<std::uint32_t> dims,
                                std::span<const float> values);
  static SaltTensor FromUint8(std::vector<std::uint32_t> dims,
                              std::span<const std::uint8_t> values);

  friend bool operator==(const SaltTensor&, const SaltTensor&) = default;
};

std::vector<std::uint8_t> SaltEncode(const SaltTensor& tensor);
// Throws DecodeError carrying the byte offset of the first problem.
SaltTensor SaltDecode(std::span<const std::uint8_t> bytes);

// K x P x P float32 stacks.
template <typename Tag>
std::vector<std::uint8_t> EncodeStack(const ClassGridStack<Tag>& stack) {
  const auto k = static_cast<std::uint32_t>(stack.classes());
  const auto p = static_cast<std::uint32_t>(stack.grid());
  return SaltEncode(SaltTensor::FromFloat32({k, p, p}, stack.values()));
}

// Decodes a 3-D float32 K x P x P tensor; value invariants of `Tag` apply.
template <typename Tag>
ClassGridStack<Tag> DecodeStack(std::span<const std::uint8_t> bytes);

// P x P uint8 0/1 mask.
std::vector<std::uint8_t> EncodeActiveSet(const ActivePatchSet& active);
ActivePatchSet DecodeActiveSet(std::span<const std::uint8_t> bytes);

}  // namespace salseg

#endif  // SALSEG_SALT_H_
