#pragma once

#include <iosfwd>
#include <string>

#include "capforge/cli/config.hpp"
#include "capforge/cli/report.hpp"

namespace capforge::cli {

/// Loads, aligns and scores; the rendered report is in the requested format.
struct EvaluateResult {
  EvaluationOutput output;
  std::string rendered;
};

EvaluateResult run_evaluate(const RunConfig& config, std::ostream& diag);

/// Serves the reward line protocol from `in` to `out`; summary to `diag`.
StreamSummary run_reward_stream(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& diag);

/// Prints the validation report; returns true when every invariant holds.
bool run_validate_data(const RunConfig& config, std::ostream& out);

void run_fuse(const RunConfig& config, std::ostream& out);

/// Builds document frequencies over a dataset split and writes the sidecar.
void run_stats(const RunConfig& config, std::ostream& out);

/// Dispatches on config.command and maps failures onto exit codes:
/// 0 success, 2 input/parse, 3 alignment, 4 internal.
int execute(const RunConfig& config, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace capforge::cli
