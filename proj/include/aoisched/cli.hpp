#pragma once

namespace aoisched {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitDiverged = 3;

/// Entry point of the aoi_sched executable:
///   aoi_sched [--seed S] [--threads T] [--out PATH] [--json] <gen|simulate|bounds|dp|sweep> ...
/// Returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace aoisched
