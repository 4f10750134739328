#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "vision/degrade.hpp"
#include "vision/pipeline.hpp"

namespace vision {

class ConfigError : public ParameterError {
 public:
  using ParameterError::ParameterError;
};

inline constexpr const char* kVersion = "0.1.0";

// Flat INI with a [solver] section. Keys absent from the file keep the
// values already in `base`.
SolverConfig read_solver_config(const std::filesystem::path& path, SolverConfig base = {});
void write_solver_config(const SolverConfig& cfg, const std::filesystem::path& path);

struct RunManifest {
  std::string version = kVersion;
  std::string command;
  std::string input;
  std::string output;
  Shape input_shape;
  DegradationDescriptor descriptor;
  std::optional<SolverConfig> solver;
  double seconds = 0.0;
};

void write_manifest(const RunManifest& m, const std::filesystem::path& path);
RunManifest read_manifest(const std::filesystem::path& path);

std::string run_report_json(const RunReport& report);
std::string blind_report_json(const BlindResult& result);

}  // namespace vision
