#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"

#include "config.hpp"

namespace fracdiff::cli {

/// Flat key/value record of one run: `config.<section>.<key>` for every
/// config key, plus grid_checksum, code_version, command, threads,
/// wall_clock_seconds and `report.*` entries added by the command.
class Manifest {
 public:
  Manifest(const RunConfig& config, std::string command);

  template <class T>
  void report(const std::string& key, const T& value) {
    json_["report." + key] = value;
  }

  const nlohmann::json& json() const noexcept { return json_; }

  /// Writes `manifest.json` under `dir` through a temporary file and rename.
  std::filesystem::path write(const std::filesystem::path& dir, double wall_clock_seconds);

 private:
  nlohmann::json json_;
};

/// The version string compiled into the tools.
std::string code_version();

}  // namespace fracdiff::cli
