#include "sqkd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sqkd {

namespace {

MetricSummary weighted_summary(std::span<const double> values, std::span<const double> weights) {
    if (values.empty()) throw std::invalid_argument("stability_report: empty series");
    MetricSummary s;
    s.min = *std::min_element(values.begin(), values.end());
    s.max = *std::max_element(values.begin(), values.end());
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    // Intervals without conclusive clicks carry no information; if none do,
    // fall back to equal weights.
    auto weight = [&](std::size_t i) { return wsum > 0.0 ? weights[i] / wsum : 1.0 / static_cast<double>(values.size()); };
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) mean += weight(i) * values[i];
    s.mean = std::clamp(mean, s.min, s.max);
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) var += weight(i) * (values[i] - s.mean) * (values[i] - s.mean);
    s.stddev = std::sqrt(var);
    return s;
}

}  // namespace

IntervalStat interval_stat(std::uint64_t index, const Tally& tally) {
    IntervalStat s;
    s.interval_index = index;
    s.rounds = tally.rounds;
    s.qber_sift_z = tally.qber(RoundClass::SiftZ);
    s.qber_ctrl_x = tally.qber(RoundClass::CtrlX);
    s.contrast_sift_z = tally.contrast(RoundClass::SiftZ);
    s.contrast_ctrl_x = tally.contrast(RoundClass::CtrlX);
    s.conclusive_sift_z = tally.conclusive(RoundClass::SiftZ);
    s.conclusive_ctrl_x = tally.conclusive(RoundClass::CtrlX);
    s.conclusive_total = s.conclusive_sift_z + s.conclusive_ctrl_x + tally.conclusive(RoundClass::SiftX) +
                         tally.conclusive(RoundClass::CtrlZ);
    s.errors_sift_z = tally.errors(RoundClass::SiftZ);
    s.errors_ctrl_x = tally.errors(RoundClass::CtrlX);
    return s;
}

std::vector<IntervalStat> interval_series(std::span<const TrialRecord> records, std::uint64_t interval_rounds) {
    if (interval_rounds == 0) throw std::invalid_argument("interval_rounds must be >= 1");
    std::vector<IntervalStat> out;
    Tally current;
    std::uint64_t index = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        current.add(records[i]);
        if (current.rounds == interval_rounds) {
            out.push_back(interval_stat(index++, current));
            current = Tally{};
        }
    }
    if (current.rounds > 0) out.push_back(interval_stat(index, current));
    return out;
}

std::vector<IntervalStat> interval_series(const SessionResult& result) {
    std::vector<IntervalStat> out;
    out.reserve(result.intervals.size());
    for (std::size_t i = 0; i < result.intervals.size(); ++i) out.push_back(interval_stat(i, result.intervals[i]));
    return out;
}

StabilityReport stability_report(std::span<const IntervalStat> series) {
    if (series.empty()) throw std::invalid_argument("stability_report: empty series");
    const std::size_t n = series.size();
    std::vector<double> qz(n), qx(n), cz(n), cx(n), wz(n), wx(n);
    for (std::size_t i = 0; i < n; ++i) {
        qz[i] = series[i].qber_sift_z;
        qx[i] = series[i].qber_ctrl_x;
        cz[i] = series[i].contrast_sift_z;
        cx[i] = series[i].contrast_ctrl_x;
        wz[i] = static_cast<double>(series[i].conclusive_sift_z);
        wx[i] = static_cast<double>(series[i].conclusive_ctrl_x);
    }
    StabilityReport r;
    r.intervals = n;
    r.qber_sift_z = weighted_summary(qz, wz);
    r.qber_ctrl_x = weighted_summary(qx, wx);
    r.contrast_sift_z = weighted_summary(cz, wz);
    r.contrast_ctrl_x = weighted_summary(cx, wx);
    return r;
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty input");
    const std::vector<double> ones(values.size(), 1.0);
    return weighted_summary(values, ones);
}

}  // namespace sqkd
