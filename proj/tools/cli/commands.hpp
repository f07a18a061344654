#pragma once

#include "cli/config_file.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace physec::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitIo = 3;

std::string tool_version();

struct SimulateArgs {
    std::optional<std::string> config_path;
    KeyValues overrides;
    std::string out_trace_path;
};

struct EvaluateArgs {
    std::optional<std::string> config_path;
    KeyValues overrides;
    std::optional<std::string> trace_path;  ///< simulate from the config when absent
    std::string detector = "both";          ///< gmm, mse or both
    std::vector<std::size_t> m_sweep;       ///< empty: only the configured m_subcarriers
    std::string out_dir;
};

struct ClassifyArgs {
    std::string snapshot_path;
    std::string trace_path;
    std::string out_path;
};

// Each command throws physec errors; run() maps them to exit codes.
void cmd_simulate(const SimulateArgs& args, std::ostream& log);
void cmd_evaluate(const EvaluateArgs& args, std::ostream& log);
void cmd_classify(const ClassifyArgs& args, std::ostream& log);

/// Exit code for the exception currently being handled.
int exit_code_for_current_exception(std::ostream& err);

/// Full command line front end: simulate, evaluate, classify, version.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace physec::cli
