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

#ifndef SALSEG_PROTOCOL_H_
#define SALSEG_PROTOCOL_H_

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "salseg/provider.h"

namespace salseg {

// Standard (RFC 4648, padded) base64.
std::string Base64Encode(std::span<const std::uint8_t> bytes);
// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> Base64Decode(std::string_view text);

// Builders and parsers for the JSON-lines provider protocol. Every message
// is one JSON object per line with a "type" field. Parsers throw
// ProtocolError on missing fields or wrong types; an incoming "error"
// message is surfaced as a ProtocolError carrying its text.
nlohmann::json InitMessage(const ProviderInit& init);
ProviderInit ParseInitMessage(const nlohmann::json& message);

nlohmann::json ReadyMessage(int classes, int grid);
// Returns {k, grid}.
std::pair<int, int> ParseReadyMessage(const nlohmann::json& message);

nlohmann::json SalienceMessage(const ActivePatchSet& active);
ActivePatchSet ParseSalienceMessage(const nlohmann::json& message);

nlohmann::json TensorsMessage(const SalienceResponse& response);
// Decodes both tensors; shape checks against a session are the caller's
// job (see ValidateResponse).
SalienceResponse ParseTensorsMessage(const nlohmann::json& message);

nlohmann::json ShutdownMessage();
nlohmann::json ErrorMessage(std::string_view text);

// Parses one protocol line into a JSON object with a string "type".
nlohmann::json ParseProtocolLine(std::string_view line);

using ProviderFactoryFromInit =
    std::function<std::unique_ptr<SalienceProvider>(const ProviderInit&)>;

// Provider side of the protocol: reads requests from `in`, answers on `out`
// until "shutdown" (returns 0) or end of input (returns 1). Failures while
// handling a request are reported as "error" messages and the loop goes on.
int ServeProtocol(std::istream& in, std::ostream& out,
                  const ProviderFactoryFromInit& factory);

struct SubprocessOptions {
  // Per-message deadline for the provider's reply.
  std::chrono::milliseconds timeout{std::chrono::seconds(300)};
};

// Client side: one subprocess speaking the protocol over stdin/stdout, with
// strictly sequential request/response pairs. The constructor sends "init"
// and waits for "ready". Any transport or protocol failure throws
// ProtocolError and leaves the session unusable. Not thread-safe; run one
// session per thread for concurrency.
class SubprocessProvider : public SalienceProvider {
 public:
  // `command` is run through /bin/sh -c. The child's stderr is inherited.
  SubprocessProvider(const std::string& command, ProviderInit init,
                     SubprocessOptions options = {});
  ~SubprocessProvider() override;

  SubprocessProvider(const SubprocessProvider&) = delete;
  SubprocessProvider& operator=(const SubprocessProvider&) = delete;

  int classes() const override { return classes_; }
  int grid() const override { return grid_; }
  // Sends the active set and returns the validated tensors.
  SalienceResponse Query(const ActivePatchSet& active) override;

  // Sends "shutdown", waits for the child and returns its exit code (or
  // 128 + signal number). Idempotent.
  int Shutdown();

  bool usable() const { return !broken_ && pid_ > 0; }

 private:
  void Send(const nlohmann::json& message);
  nlohmann::json Receive(std::string_view awaiting);
  std::string ReadLine(std::string_view awaiting);
  [[noreturn]] void Fail(const std::string& what);
  int Reap(std::chrono::milliseconds budget);
  void Kill();

  ProviderInit init_;
  SubprocessOptions options_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
  bool broken_ = false;
  int exit_code_ = -1;
  int classes_ = 0;
  int grid_ = 0;
};

}  // namespace salseg

#endif  // SALSEG_PROTOCOL_H_
