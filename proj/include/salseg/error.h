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

#ifndef SALSEG_ERROR_H_
#define SALSEG_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace salseg {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on shapes, ranges or parameters was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

// Malformed serialized bytes. `offset` is the byte position where decoding
// stopped.
class DecodeError : public Error {
 public:
  DecodeError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Provider transport or wire-protocol failure. The session that raised it is
// no longer usable.
class ProtocolError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace salseg

#endif  // SALSEG_ERROR_H_
