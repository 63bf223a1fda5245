#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <sqkd/adversary.hpp>
#include <sqkd/optics.hpp>
#include <sqkd/protocol.hpp>

namespace sqkd::cli {

/// Bad config input: unreadable file, malformed line, unknown key or a value
/// out of range. `key` is empty when the problem is not tied to one key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& message)
        : std::runtime_error(message), key_(std::move(key)) {}

    const std::string& key() const { return key_; }

private:
    std::string key_;
};

enum class AttackChoice { None, Named, Generator };

struct ScenarioConfig {
    OpticalParams phys;
    RoundConfig rounds;

    std::uint64_t n_rounds = 1'000'000;
    std::uint64_t seed = 1;
    std::uint64_t interval_rounds = 0;  // 0: one minute of simulated clock

    double abort_threshold_ctrl_x = 0.05;
    double abort_threshold_sift_z = 0.05;
    double check_fraction = 0.1;

    AttackChoice attack = AttackChoice::None;
    NamedAttack named = NamedAttack::Identity;
    std::vector<double> attack_theta;  // Generator only: [forward | backward]
    std::size_t ancilla_dim = 4;

    OptimizerConfig optimizer;
    std::vector<double> sweep_epsilons{0.0, 0.01, 0.05, 0.25, 0.5};

    double calibrate_target_contrast = 0.9745;
    std::uint64_t calibrate_rounds = 4'000'000;

    double reference_raw_key_rate_bps = 88'000.0;

    /// Builds the configured attack, or nullopt for attack = none.
    std::optional<AttackModel> attack_model() const;
};

/// Parses `key = value` lines; `#` starts a comment. Every key is optional,
/// unknown or repeated keys are rejected. Runs all range checks.
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Throws ConfigError naming the offending key.
void validate(const ScenarioConfig& cfg);

/// Every key in canonical order with round-trip precision; parse_config of
/// the result reproduces `cfg` exactly.
std::string to_config_text(const ScenarioConfig& cfg);

/// Shortest decimal that round-trips.
std::string format_double(double v);

std::string attack_name(const ScenarioConfig& cfg);

}  // namespace sqkd::cli
