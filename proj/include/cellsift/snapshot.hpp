#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cellsift/active_learner.hpp"

namespace cellsift {

constexpr int kSnapshotFormatVersion = 1;

/// Durable session state. Probabilities are written as shortest round-trip
/// decimal strings so a restore is bit-exact.
struct SessionSnapshot {
  int format_version = kSnapshotFormatVersion;
  SessionConfig config;
  std::uint64_t config_hash = 0;
  std::uint64_t table_fingerprint = 0;
  std::uint64_t seed = 0;
  int iteration = 0;
  Phase phase = Phase::Initialization;
  std::vector<Label> labels;  // submission order
  InitializationState init;
  SelectorState selector;
  std::optional<BatchRequest> pending;
  std::vector<ColumnModel> models;
  ErrorProbabilityBlock block;
  std::vector<IterationSummary> history;

  friend bool operator==(const SessionSnapshot&, const SessionSnapshot&) = default;
};

std::string snapshot_to_json(const SessionSnapshot& snapshot);
/// Throws Decode on malformed input and VersionMismatch on another format version.
SessionSnapshot snapshot_from_json(std::string_view text);

void save_session(const SessionSnapshot& snapshot, const std::filesystem::path& path);
SessionSnapshot load_session(const std::filesystem::path& path);

}  // namespace cellsift
