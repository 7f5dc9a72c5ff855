#pragma once

#include "tfem/config.hpp"

namespace tfem {

/// Executes the configured campaign and writes its artifacts (reports, CSV)
/// under config.out_dir. Throws on any failure; the CLI maps exception
/// types to exit codes. Outputs are deterministic for a fixed config+seed
/// (timings appear only in report files, never in CSV).
void run_campaign(const RunConfig& config);

}  // namespace tfem
