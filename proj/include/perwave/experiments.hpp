#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "perwave/nonlinear_wave.hpp"
#include "perwave/potential.hpp"

namespace perwave {

using Json = nlohmann::ordered_json;

inline constexpr const char* kVersion = "0.1.0";

/// Process exit codes of a run.
enum ExitCode : int {
  kExitOk = 0,
  kExitInvariantFailed = 2,
  kExitConfigError = 3,
  kExitNumericalAbort = 4,
};

struct Diagnostic {
  enum class Level { Error, Warning };
  Level level = Level::Error;
  std::string message;
};

/// Descriptor parsers; all throw ConfigError (or InvalidSpec) with the offending field.
TimeProfile parse_time_profile(const Json& j, double period);
SpaceProfile parse_space_profile(const Json& j);
Potential parse_potential(const Json& j);
/// Barrier parameters of a {"kind": "barrier"} descriptor.
BarrierSpec parse_barrier(const Json& j);
NonlinearitySpec parse_nonlinearity(const Json& j);

/// Typed view of a run configuration. Experiment-specific sections stay in `raw`.
struct RunConfig {
  std::string experiment;
  Json potential;
  std::optional<RadialGrid> grid;
  double dt = 0.0;
  double horizon = 0.0;
  double T = 0.0;
  Json nonlinearity;
  std::uint64_t seed = 1;
  std::string output_dir;
  Json raw;
};

const std::vector<std::string>& experiment_names();

/// Throws ConfigError on schema errors (CFL is checked by the experiments themselves).
RunConfig parse_config(const Json& j);

/// Schema, CFL and periodicity checks without running anything. An empty list means the
/// configuration is well formed.
std::vector<Diagnostic> validate(const Json& j);

struct RunOptions {
  /// Overrides the configured output directory when non-empty.
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  /// Omit wall-clock timestamps from the manifest.
  bool deterministic_manifest = false;
};

struct RunResult {
  int exit_code = kExitOk;
  Json manifest;
  std::string message;
};

/// Output directory precedence: RunOptions::out_dir, the config's output_dir, the
/// PERWAVE_OUT environment variable, then "perwave_out".
std::filesystem::path resolve_output_dir(const RunOptions& options, const std::string& configured);

/// Dispatches to the configured experiment, writes its outputs and manifest.json.
/// Never throws: configuration errors map to exit 3, numerical aborts to exit 4.
RunResult run(const Json& config, const RunOptions& options = {});

/// Built-in reference configuration for one experiment (the unstable barrier set-up).
Json reference_config(const std::string& experiment);

/// Chains hill-scan, mode selection, floquet-eig, linear-growth, nonlinear-run and
/// instability on the reference set-up; writes summary.csv and manifest.json.
RunResult reproduce_paper(const RunOptions& options);

/// Text table of a manifest's checks.
std::string format_checks(const Json& manifest);

}  // namespace perwave
