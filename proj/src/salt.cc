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

#include "salseg/salt.h"

#include <bit>
#include <cstring>
#include <limits>

#include <fmt/format.h>

#include "salseg/error.h"
#include "salseg/refine.h"

namespace salseg {
namespace {

constexpr char kMagic[4] = {'S', 'A', 'L', 'T'};

std::size_t DtypeSize(SaltDtype dtype) {
  return dtype == SaltDtype::kFloat32 ? 4 : 1;
}

void PutU32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t GetU32(const std::uint8_t* p) {
  return std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
         std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
}

}  // namespace

std::size_t SaltTensor::elements() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

SaltTensor SaltTensor::FromFloat32(std::vector<std::uint32_t> dims,
                                   std::span<const float> values) {
  SaltTensor t;
  t.dtype = SaltDtype::kFloat32;
  t.dims = std::move(dims);
  if (t.elements() != values.size()) {
    throw ContractError(fmt::format("SALT dims hold {} elements, got {} values",
                                    t.elements(), values.size()));
  }
  t.payload.reserve(values.size() * 4);
  for (float v : values) PutU32(t.payload, std::bit_cast<std::uint32_t>(v));
  return t;
}

SaltTensor SaltTensor::FromUint8(std::vector<std::uint32_t> dims,
                                 std::span<const std::uint8_t> values) {
  SaltTensor t;
  t.dtype = SaltDtype::kUint8;
  t.dims = std::move(dims);
  if (t.elements() != values.size()) {
    throw ContractError(fmt::format("SALT dims hold {} elements, got {} values",
                                    t.elements(), values.size()));
  }
  t.payload.assign(values.begin(), values.end());
  return t;
}

std::vector<float> SaltTensor::AsFloat32() const {
  if (dtype != SaltDtype::kFloat32) throw ContractError("SALT tensor is not float32");
  std::vector<float> out(payload.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::bit_cast<float>(GetU32(&payload[i * 4]));
  }
  return out;
}

std::vector<std::uint8_t> SaltTensor::AsUint8() const {
  if (dtype != SaltDtype::kUint8) throw ContractError("SALT tensor is not uint8");
  return payload;
}

std::vector<std::uint8_t> SaltEncode(const SaltTensor& tensor) {
  if (tensor.dims.size() > std::numeric_limits<std::uint8_t>::max()) {
    throw ContractError("SALT supports at most 255 dimensions");
  }
  if (tensor.payload.size() != tensor.elements() * DtypeSize(tensor.dtype)) {
    throw ContractError("SALT payload size does not match dims and dtype");
  }
  std::vector<std::uint8_t> out;
  out.reserve(kSaltFixedHeader + 4 * tensor.dims.size() + tensor.payload.size());
  out.insert(out.end(), kMagic, kMagic + 4);
  out.push_back(kSaltVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.dims.size()));
  for (auto d : tensor.dims) PutU32(out, d);
  out.insert(out.end(), tensor.payload.begin(), tensor.payload.end());
  return out;
}

SaltTensor SaltDecode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw DecodeError("bad SALT magic, expected \"SALT\"", 0);
  }
  if (bytes.size() < kSaltFixedHeader) {
    throw DecodeError("truncated SALT header", bytes.size());
  }
  if (bytes[4] != kSaltVersion) {
    throw DecodeError(fmt::format("unsupported SALT version {:#04x}", bytes[4]), 4);
  }
  SaltTensor t;
  switch (bytes[5]) {
    case 0x01: t.dtype = SaltDtype::kFloat32; break;
    case 0x02: t.dtype = SaltDtype::kUint8; break;
    default:
      throw DecodeError(fmt::format("unknown SALT dtype {:#04x}", bytes[5]), 5);
  }
  const std::size_t ndim = bytes[6];
  std::size_t offset = kSaltFixedHeader;
  if (bytes.size() < offset + 4 * ndim) {
    throw DecodeError("truncated SALT dimension list", bytes.size());
  }
  for (std::size_t i = 0; i < ndim; ++i, offset += 4) {
    t.dims.push_back(GetU32(&bytes[offset]));
  }
  // Guard the product against overflow before trusting it.
  std::size_t expected = DtypeSize(t.dtype);
  for (auto d : t.dims) {
    if (d != 0 && expected > std::numeric_limits<std::size_t>::max() / d) {
      throw DecodeError("SALT dims overflow", kSaltFixedHeader);
    }
    expected *= d;
  }
  const std::size_t available = bytes.size() - offset;
  if (available < expected) {
    throw DecodeError(fmt::format("truncated SALT payload: need {} bytes, have {}",
                                  expected, available),
                      bytes.size());
  }
  if (available > expected) {
    throw DecodeError(fmt::format("{} trailing bytes after SALT payload",
                                  available - expected),
                      offset + expected);
  }
  t.payload.assign(bytes.begin() + offset, bytes.end());
  return t;
}

template <typename Tag>
ClassGridStack<Tag> DecodeStack(std::span<const std::uint8_t> bytes) {
  SaltTensor t = SaltDecode(bytes);
  if (t.dtype != SaltDtype::kFloat32) {
    throw DecodeError(fmt::format("{} tensor must be float32", Tag::kName), 5);
  }
  if (t.dims.size() != 3 || t.dims[1] != t.dims[2]) {
    throw DecodeError(fmt::format("{} tensor must be K x P x P", Tag::kName), 6);
  }
  return ClassGridStack<Tag>(static_cast<int>(t.dims[0]),
                             static_cast<int>(t.dims[1]), t.AsFloat32());
}

template AttentionStack DecodeStack<AttentionTag>(std::span<const std::uint8_t>);
template GradientStack DecodeStack<GradientTag>(std::span<const std::uint8_t>);
template GradCamStack DecodeStack<GradCamTag>(std::span<const std::uint8_t>);
template TokenMapStack DecodeStack<TokenMapTag>(std::span<const std::uint8_t>);
template PatchMaskStack DecodeStack<MaskTag>(std::span<const std::uint8_t>);

std::vector<std::uint8_t> EncodeActiveSet(const ActivePatchSet& active) {
  const auto p = static_cast<std::uint32_t>(active.grid());
  return SaltEncode(SaltTensor::FromUint8({p, p}, active.mask()));
}

ActivePatchSet DecodeActiveSet(std::span<const std::uint8_t> bytes) {
  SaltTensor t = SaltDecode(bytes);
  if (t.dtype != SaltDtype::kUint8 || t.dims.size() != 2 ||
      t.dims[0] != t.dims[1]) {
    throw DecodeError("active set must be a P x P uint8 tensor", 5);
  }
  return ActivePatchSet::FromMask(static_cast<int>(t.dims[0]), t.payload);
}

}  // namespace salseg
