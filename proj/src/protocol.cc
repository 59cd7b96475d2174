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

#include "salseg/protocol.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <sodium.h>

#include "salseg/error.h"
#include "salseg/salt.h"

extern char** environ;

namespace salseg {

namespace {

constexpr int kB64Variant = sodium_base64_VARIANT_ORIGINAL;

const nlohmann::json& Field(const nlohmann::json& message, const char* key) {
  auto it = message.find(key);
  if (it == message.end()) {
    throw ProtocolError(fmt::format("'{}' message lacks field '{}'",
                                    message.value("type", "?"), key));
  }
  return *it;
}

template <typename T>
T FieldAs(const nlohmann::json& message, const char* key) {
  const nlohmann::json& value = Field(message, key);
  try {
    return value.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(fmt::format("field '{}' has the wrong type: {}", key,
                                    e.what()));
  }
}

void ExpectType(const nlohmann::json& message, std::string_view type) {
  const std::string got = message.at("type").get<std::string>();
  if (got == "error") {
    throw ProtocolError("provider reported error: " +
                        message.value("message", std::string("(no message)")));
  }
  if (got != type) {
    throw ProtocolError(
        fmt::format("expected '{}' message, got '{}'", type, got));
  }
}

template <typename Tag>
ClassGridStack<Tag> DecodeB64Stack(const nlohmann::json& message,
                                   const char* key) {
  const std::vector<std::uint8_t> bytes =
      Base64Decode(FieldAs<std::string>(message, key));
  try {
    return DecodeStack<Tag>(bytes);
  } catch (const Error& e) {
    throw ProtocolError(fmt::format("field '{}': {}", key, e.what()));
  }
}

}  // namespace

std::string Base64Encode(std::span<const std::uint8_t> bytes) {
  std::string out(sodium_base64_encoded_len(bytes.size(), kB64Variant), '\0');
  sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(),
                    kB64Variant);
  out.resize(std::strlen(out.c_str()));
  return out;
}

std::vector<std::uint8_t> Base64Decode(std::string_view text) {
  std::vector<std::uint8_t> out(text.size() / 4 * 3 + 3);
  std::size_t len = 0;
  const char* end = nullptr;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        nullptr, &len, &end, kB64Variant) != 0 ||
      end != text.data() + text.size()) {
    throw ProtocolError("malformed base64 payload");
  }
  out.resize(len);
  return out;
}

nlohmann::json InitMessage(const ProviderInit& init) {
  return {{"type", "init"},         {"image", init.image},
          {"classes", init.classes}, {"layer", init.layer},
          {"head", init.head},       {"grid", init.grid}};
}

ProviderInit ParseInitMessage(const nlohmann::json& message) {
  ExpectType(message, "init");
  ProviderInit init;
  init.image = FieldAs<std::string>(message, "image");
  init.classes = FieldAs<std::vector<std::string>>(message, "classes");
  init.layer = FieldAs<int>(message, "layer");
  init.head = FieldAs<int>(message, "head");
  init.grid = FieldAs<int>(message, "grid");
  try {
    init.Validate();
  } catch (const Error& e) {
    throw ProtocolError(std::string("invalid init: ") + e.what());
  }
  return init;
}

nlohmann::json ReadyMessage(int classes, int grid) {
  return {{"type", "ready"}, {"k", classes}, {"grid", grid}};
}

std::pair<int, int> ParseReadyMessage(const nlohmann::json& message) {
  ExpectType(message, "ready");
  return {FieldAs<int>(message, "k"), FieldAs<int>(message, "grid")};
}

nlohmann::json SalienceMessage(const ActivePatchSet& active) {
  return {{"type", "salience"},
          {"active_b64", Base64Encode(EncodeActiveSet(active))}};
}

ActivePatchSet ParseSalienceMessage(const nlohmann::json& message) {
  ExpectType(message, "salience");
  const std::vector<std::uint8_t> bytes =
      Base64Decode(FieldAs<std::string>(message, "active_b64"));
  try {
    return DecodeActiveSet(bytes);
  } catch (const Error& e) {
    throw ProtocolError(std::string("field 'active_b64': ") + e.what());
  }
}

nlohmann::json TensorsMessage(const SalienceResponse& response) {
  return {{"type", "tensors"},
          {"attention_b64", Base64Encode(EncodeStack(response.attention))},
          {"gradient_b64", Base64Encode(EncodeStack(response.gradient))}};
}

SalienceResponse ParseTensorsMessage(const nlohmann::json& message) {
  ExpectType(message, "tensors");
  return {DecodeB64Stack<AttentionTag>(message, "attention_b64"),
          DecodeB64Stack<GradientTag>(message, "gradient_b64")};
}

nlohmann::json ShutdownMessage() { return {{"type", "shutdown"}}; }

nlohmann::json ErrorMessage(std::string_view text) {
  return {{"type", "error"}, {"message", text}};
}

nlohmann::json ParseProtocolLine(std::string_view line) {
  nlohmann::json message;
  try {
    message = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed protocol line: ") + e.what());
  }
  if (!message.is_object() || !message.contains("type") ||
      !message["type"].is_string()) {
    throw ProtocolError("protocol line is not an object with a string 'type'");
  }
  return message;
}

int ServeProtocol(std::istream& in, std::ostream& out,
                  const ProviderFactoryFromInit& factory) {
  std::unique_ptr<SalienceProvider> provider;
  auto reply = [&out](const nlohmann::json& message) {
    out << message.dump() << '\n';
    out.flush();
  };
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const nlohmann::json message = ParseProtocolLine(line);
      const std::string type = message["type"].get<std::string>();
      if (type == "shutdown") return 0;
      if (type == "init") {
        const ProviderInit init = ParseInitMessage(message);
        provider = factory(init);
        reply(ReadyMessage(provider->classes(), provider->grid()));
      } else if (type == "salience") {
        if (!provider) throw ProtocolError("'salience' before 'init'");
        const ActivePatchSet active = ParseSalienceMessage(message);
        if (active.grid() != provider->grid()) {
          throw ProtocolError(fmt::format("active set grid {} != session {}",
                                          active.grid(), provider->grid()));
        }
        reply(TensorsMessage(provider->Query(active)));
      } else {
        throw ProtocolError("unknown message type '" + type + "'");
      }
    } catch (const std::exception& e) {
      reply(ErrorMessage(e.what()));
    }
  }
  return 1;
}

namespace {

std::once_flag ignore_sigpipe_once;

void CloseFd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

SubprocessProvider::SubprocessProvider(const std::string& command,
                                       ProviderInit init,
                                       SubprocessOptions options)
    : init_(std::move(init)), options_(options) {
  init_.Validate();
  // A provider that dies mid-write must surface as an error, not kill us.
  std::call_once(ignore_sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });

  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) {
    throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
  }
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw ProtocolError(std::string("pipe: ") + std::strerror(errno));
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
  std::string shell = "/bin/sh";
  std::string dash_c = "-c";
  std::string cmd = command;
  char* argv[] = {shell.data(), dash_c.data(), cmd.data(), nullptr};
  // A process group of its own lets Kill() reach whatever the shell starts.
  posix_spawnattr_t attr;
  posix_spawnattr_init(&attr);
  posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
  posix_spawnattr_setpgroup(&attr, 0);
  const int rc =
      ::posix_spawn(&pid_, "/bin/sh", &actions, &attr, argv, environ);
  posix_spawnattr_destroy(&attr);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    pid_ = -1;
    CloseFd(to_child_);
    CloseFd(from_child_);
    throw ProtocolError(fmt::format("cannot launch provider '{}': {}", command,
                                    std::strerror(rc)));
  }

  try {
    Send(InitMessage(init_));
    const auto [k, p] = ParseReadyMessage(Receive("ready"));
    if (k != static_cast<int>(init_.classes.size()) || p != init_.grid) {
      throw ProtocolError(fmt::format(
          "provider ready with k={} grid={}, session needs k={} grid={}", k, p,
          init_.classes.size(), init_.grid));
    }
    classes_ = k;
    grid_ = p;
  } catch (const ProtocolError& e) {
    broken_ = true;
    Kill();
    throw;
  }
}

SubprocessProvider::~SubprocessProvider() {
  if (pid_ <= 0) return;
  if (!broken_) {
    try {
      Shutdown();
      return;
    } catch (const std::exception&) {
    }
  }
  Kill();
}

void SubprocessProvider::Fail(const std::string& what) {
  broken_ = true;
  throw ProtocolError(what);
}

void SubprocessProvider::Send(const nlohmann::json& message) {
  if (to_child_ < 0) Fail("provider stdin is closed");
  const std::string line = message.dump() + "\n";
  std::size_t written = 0;
  while (written < line.size()) {
    const ssize_t n =
        ::write(to_child_, line.data() + written, line.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(fmt::format("writing to provider failed: {}",
                       std::strerror(errno)));
    }
    written += static_cast<std::size_t>(n);
  }
}

std::string SubprocessProvider::ReadLine(std::string_view awaiting) {
  const auto deadline = std::chrono::steady_clock::now() + options_.timeout;
  for (;;) {
    const std::size_t newline = buffer_.find('\n');
    if (newline != std::string::npos) {
      std::string line = buffer_.substr(0, newline);
      buffer_.erase(0, newline + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      Fail(fmt::format("timed out after {} ms awaiting '{}'",
                       options_.timeout.count(), awaiting));
    }
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(
                                          left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) continue;
    char chunk[65536];
    const ssize_t n = ::read(from_child_, chunk, sizeof chunk);
    if (n < 0) {
      if (errno == EINTR) continue;
      Fail(std::string("reading from provider failed: ") +
           std::strerror(errno));
    }
    if (n == 0) {
      const int code = Reap(std::chrono::milliseconds(1000));
      Fail(fmt::format("provider exited (status {}) while awaiting '{}'",
                       code, awaiting));
    }
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

nlohmann::json SubprocessProvider::Receive(std::string_view awaiting) {
  const std::string line = ReadLine(awaiting);
  try {
    return ParseProtocolLine(line);
  } catch (const ProtocolError& e) {
    Fail(e.what());
  }
}

SalienceResponse SubprocessProvider::Query(const ActivePatchSet& active) {
  if (!usable()) throw ProtocolError("provider session is unusable");
  if (active.grid() != grid_) {
    throw ContractError(fmt::format("active set grid {} != session grid {}",
                                    active.grid(), grid_));
  }
  Send(SalienceMessage(active));
  try {
    SalienceResponse response = ParseTensorsMessage(Receive("tensors"));
    ValidateResponse(response, classes_, grid_, active);
    return response;
  } catch (const ProtocolError& e) {
    Fail(e.what());
  }
}

int SubprocessProvider::Reap(std::chrono::milliseconds budget) {
  if (pid_ <= 0) return exit_code_;
  const auto deadline = std::chrono::steady_clock::now() + budget;
  for (;;) {
    int status = 0;
    const pid_t r = ::waitpid(pid_, &status, WNOHANG);
    if (r == pid_) {
      pid_ = -1;
      exit_code_ = WIFEXITED(status) ? WEXITSTATUS(status)
                                     : 128 + WTERMSIG(status);
      CloseFd(to_child_);
      CloseFd(from_child_);
      return exit_code_;
    }
    if (r < 0 && errno != EINTR) {
      pid_ = -1;
      CloseFd(to_child_);
      CloseFd(from_child_);
      return exit_code_;
    }
    if (std::chrono::steady_clock::now() >= deadline) return -1;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

void SubprocessProvider::Kill() {
  CloseFd(to_child_);
  if (pid_ > 0) {
    ::kill(-pid_, SIGKILL);
    Reap(std::chrono::milliseconds(5000));
  }
  CloseFd(from_child_);
}

int SubprocessProvider::Shutdown() {
  if (pid_ <= 0) return exit_code_;
  if (!broken_) {
    try {
      Send(ShutdownMessage());
    } catch (const ProtocolError&) {
    }
  }
  CloseFd(to_child_);
  const int code = Reap(options_.timeout);
  if (code < 0) {
    Kill();
    broken_ = true;
    throw ProtocolError("provider did not exit after shutdown");
  }
  broken_ = true;
  return code;
}

}  // namespace salseg
