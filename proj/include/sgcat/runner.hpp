#pragma once

#include "sgcat/config.hpp"

namespace sgcat {

/// Executes the configured mode and writes its artifacts (CSV series, summary
/// JSON, optional SVG plots) under config.out_dir. Throws on any module or
/// I/O error; the CLI maps exceptions to a nonzero exit status.
void run(const RunConfig& config);

/// Runs the sweep grid with config.workers threads. Row order (and the output
/// CSV bytes) are deterministic regardless of the worker count: results are
/// keyed by grid index and serialized in index order. Per-point failures are
/// recorded in the row's status column; the sweep continues.
void run_sweep(const RunConfig& config);

}  // namespace sgcat
