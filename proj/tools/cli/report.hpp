#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include <sqkd/adversary.hpp>
#include <sqkd/metrics.hpp>
#include <sqkd/protocol.hpp>

#include "cli/config.hpp"

namespace sqkd::cli {

using Json = nlohmann::ordered_json;

/// printf into a std::string.
std::string strf(const char* fmt, ...) __attribute__((format(printf, 1, 2)));

/// Common header: tool, version, command, seed.
Json report_header(const std::string& command, std::uint64_t seed);

/// Canonical config as a key -> string object.
Json config_json(const ScenarioConfig& cfg);

Json session_json(const SessionResult& result, const ScenarioConfig& cfg);
std::string session_text(const SessionResult& result, const ScenarioConfig& cfg);

Json abort_json(const AbortDecision& d);
std::string abort_text(const AbortDecision& d);

Json stability_json(const StabilityReport& r);
std::string stability_text(const StabilityReport& r);

Json outcome_json(const AttackOutcome& o);
std::string outcome_text(const AttackOutcome& o);

Json constraints_json(const ConstraintReport& r);
std::string constraints_text(const ConstraintReport& r);

/// interval,qber_sift_z,qber_ctrl_x,contrast_sift_z,contrast_ctrl_x,conclusive
std::string intervals_csv(std::span<const IntervalStat> series);

/// Creates `dir` if needed and writes each (file name, content) pair.
/// Throws std::runtime_error on I/O failure.
void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files);

}  // namespace sqkd::cli
