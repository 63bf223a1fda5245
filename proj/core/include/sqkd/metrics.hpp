#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "sqkd/protocol.hpp"

namespace sqkd {

struct IntervalStat {
    std::uint64_t interval_index = 0;
    std::uint64_t rounds = 0;
    double qber_sift_z = 0.0;
    double qber_ctrl_x = 0.0;
    double contrast_sift_z = 0.0;
    double contrast_ctrl_x = 0.0;
    std::uint64_t conclusive_sift_z = 0;
    std::uint64_t conclusive_ctrl_x = 0;
    std::uint64_t conclusive_total = 0;  // all four classes
    std::uint64_t errors_sift_z = 0;
    std::uint64_t errors_ctrl_x = 0;
};

IntervalStat interval_stat(std::uint64_t index, const Tally& tally);

/// Consecutive intervals of interval_rounds rounds each (the last may be
/// short). Records must be in round order. Throws std::invalid_argument for
/// interval_rounds == 0.
std::vector<IntervalStat> interval_series(std::span<const TrialRecord> records, std::uint64_t interval_rounds);

/// The series already tallied by run_session.
std::vector<IntervalStat> interval_series(const SessionResult& result);

struct MetricSummary {
    double mean = 0.0;  // weighted by the metric's conclusive count
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
};

struct StabilityReport {
    std::size_t intervals = 0;
    MetricSummary qber_sift_z;
    MetricSummary qber_ctrl_x;
    MetricSummary contrast_sift_z;
    MetricSummary contrast_ctrl_x;
};

/// Count-weighted summary across intervals; with equal-count weights this
/// reproduces the whole-session value. Throws std::invalid_argument on an
/// empty series.
StabilityReport stability_report(std::span<const IntervalStat> series);

/// Summary of plain values with equal weights. Throws on empty input.
MetricSummary summarize(std::span<const double> values);

}  // namespace sqkd
