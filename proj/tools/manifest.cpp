#include "manifest.hpp"

#include <fstream>

#ifndef FRACDIFF_VERSION
#define FRACDIFF_VERSION "unknown"
#endif

namespace fracdiff::cli {

std::string code_version() { return FRACDIFF_VERSION; }

Manifest::Manifest(const RunConfig& config, std::string command) {
  json_ = nlohmann::json::object();
  for (const auto& key : config_keys()) json_["config." + key] = config_value(config, key);
  json_["command"] = std::move(command);
  json_["grid_checksum"] = config.grid().checksum();
  json_["code_version"] = code_version();
}

std::filesystem::path Manifest::write(const std::filesystem::path& dir, double wall_clock_seconds) {
  json_["wall_clock_seconds"] = wall_clock_seconds;
  const auto path = dir / "manifest.json";
  const auto tmp = dir / "manifest.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    require(static_cast<bool>(out), ErrorKind::Io, "cannot write '" + tmp.string() + "'");
    out << json_.dump(2) << "\n";
    out.flush();
    require(static_cast<bool>(out), ErrorKind::Io, "write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
  return path;
}

}  // namespace fracdiff::cli
