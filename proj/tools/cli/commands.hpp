#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace sqkd::cli {

enum ExitCode : int {
    kOk = 0,
    kRuntimeError = 1,
    kConfigError = 2,
    kAssertionFailure = 3,
};

struct RunOptions {
    std::filesystem::path config;  // empty: built-in defaults
    std::optional<std::uint64_t> seed;
    std::filesystem::path out_dir = ".";
    /// Worker threads for round shards and optimizer starts. Never echoed in
    /// reports, so the output does not depend on it.
    unsigned threads = 1;
    std::optional<std::vector<double>> epsilons;  // robustness-sweep
    std::optional<double> target_contrast;         // calibrate
};

/// Each command writes its files under out_dir, a short summary to `out` and
/// diagnostics to `err`, and returns an ExitCode.
int cmd_simulate(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_attack_eval(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_robustness_sweep(const RunOptions& opts, std::ostream& out, std::ostream& err);
int cmd_calibrate(const RunOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace sqkd::cli
