#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

namespace cellsift::service {

struct Options {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  // When set, every session is saved here after each accepted label batch.
  std::optional<std::filesystem::path> snapshot_dir;
};

/// HTTP/JSON front end over the C API. One mutex per session, so mutations
/// are serialized while different sessions proceed independently.
class Server {
 public:
  explicit Server(Options options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds the socket; returns the bound port. Throws std::runtime_error.
  int bind();
  /// Serves until stop(); bind() is called first if needed.
  void listen();
  /// bind() + listen() on a background thread.
  int start();
  void stop();
  int port() const noexcept;
  std::size_t session_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cellsift::service
