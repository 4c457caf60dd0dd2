#pragma once

// Built-in reproducible experiments and their manifests.

#include "dsp/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace dsp {

inline constexpr const char* kToolVersion = "1.0.0";

struct ExperimentOptions {
  std::uint64_t seed = 7;
  std::optional<int> restarts;  // preset default when empty
  int iterations = 400;
  double tol = 1e-10;
  int threads = 1;
  std::optional<int> d;  // block parameter of the case presets
};

struct ExperimentOutcome {
  io::Json report;
  int exit_code = 0;
  std::vector<std::string> summary;
};

std::vector<std::string> experiment_presets();

/// Throws InvalidInput for unknown presets.
ExperimentOutcome run_experiment(const std::string& preset, const ExperimentOptions& options);

std::string sha256_hex(const std::string& bytes);

io::Json make_manifest(const std::string& preset, const ExperimentOptions& options, const ExperimentOutcome& outcome);

struct ReplayResult {
  bool identical = false;
  std::string expected_digest;
  std::string actual_digest;
  ExperimentOutcome outcome;
};

ReplayResult replay_manifest(const io::Json& manifest, int threads = 1);

/// Text histogram of log10 residuals, one line per decade.
std::vector<std::string> residual_histogram(const std::vector<double>& residuals, int width = 40);

}  // namespace dsp
