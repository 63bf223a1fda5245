#include "cli/report.hpp"

#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#ifndef SQKD_VERSION
#define SQKD_VERSION "unknown"
#endif

namespace sqkd::cli {

namespace {

constexpr RoundClass kClasses[4] = {RoundClass::SiftZ, RoundClass::CtrlX, RoundClass::SiftX, RoundClass::CtrlZ};

Json summary_json(const MetricSummary& s) {
    return Json{{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}};
}

std::string summary_line(const char* name, const MetricSummary& s) {
    return strf("  %-16s mean %.6f  std %.6f  min %.6f  max %.6f\n", name, s.mean, s.stddev, s.min, s.max);
}

}  // namespace

std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list copy;
    va_copy(copy, args);
    const int n = std::vsnprintf(nullptr, 0, fmt, copy);
    va_end(copy);
    std::string out(static_cast<std::size_t>(n), '\0');
    std::vsnprintf(out.data(), out.size() + 1, fmt, args);
    va_end(args);
    return out;
}

Json report_header(const std::string& command, std::uint64_t seed) {
    return Json{{"tool", "sqkd"}, {"version", SQKD_VERSION}, {"command", command}, {"seed", seed}};
}

Json config_json(const ScenarioConfig& cfg) {
    Json out = Json::object();
    const std::string text = to_config_text(cfg);
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const std::string line = text.substr(pos, nl - pos);
        pos = nl + 1;
        const auto eq = line.find(" = ");
        out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
}

Json session_json(const SessionResult& r, const ScenarioConfig& cfg) {
    Json classes = Json::object();
    for (RoundClass c : kClasses) {
        classes[to_string(c)] = Json{{"rounds", r.totals.class_rounds(c)},
                                     {"conclusive", r.totals.conclusive(c)},
                                     {"errors", r.totals.errors(c)},
                                     {"spd1", r.totals.class_count(c, ClickEvent::Spd1)},
                                     {"spd2", r.totals.class_count(c, ClickEvent::Spd2)},
                                     {"double", r.totals.class_count(c, ClickEvent::Double)},
                                     {"qber", r.totals.qber(c)},
                                     {"contrast", r.totals.contrast(c)},
                                     {"response_rate", r.response_rate(c)}};
    }
    const double rate = r.raw_key_rate_bps();
    return Json{{"n_rounds", r.n_rounds},
                {"interval_rounds", r.interval_rounds},
                {"intervals", r.intervals.size()},
                {"qber_sift_z", r.qber_sift_z()},
                {"qber_ctrl_x", r.qber_ctrl_x()},
                {"matched_contrast", r.matched_contrast()},
                {"classes", classes},
                {"double_clicks", r.double_clicks},
                {"dead_time_suppressed", r.dead_time_suppressed},
                {"raw_key_bits", r.raw_key.size()},
                {"raw_key_rate_bps", rate},
                {"reference_raw_key_rate_bps", cfg.reference_raw_key_rate_bps},
                {"raw_key_rate_ratio", rate / cfg.reference_raw_key_rate_bps},
                {"response_rate", r.response_rate()}};
}

std::string session_text(const SessionResult& r, const ScenarioConfig& cfg) {
    std::string out = "session\n";
    out += strf("  rounds            %llu (%zu interval(s) of %llu)\n", static_cast<unsigned long long>(r.n_rounds),
                r.intervals.size(), static_cast<unsigned long long>(r.interval_rounds));
    out += strf("  qber_sift_z       %.6f\n", r.qber_sift_z());
    out += strf("  qber_ctrl_x       %.6f\n", r.qber_ctrl_x());
    out += strf("  matched_contrast  %.6f\n", r.matched_contrast());
    out += "  class    rounds        conclusive  errors      qber      contrast\n";
    for (RoundClass c : kClasses) {
        out += strf("  %-7s  %-12llu  %-10llu  %-10llu  %.6f  %.6f\n", to_string(c),
                    static_cast<unsigned long long>(r.totals.class_rounds(c)),
                    static_cast<unsigned long long>(r.totals.conclusive(c)),
                    static_cast<unsigned long long>(r.totals.errors(c)), r.totals.qber(c), r.totals.contrast(c));
    }
    out += strf("  double clicks     %llu (discarded)\n", static_cast<unsigned long long>(r.double_clicks));
    out += strf("  dead-time drops   %llu\n", static_cast<unsigned long long>(r.dead_time_suppressed));
    out += strf("  response rate     %.6f\n", r.response_rate());
    out += strf("  raw key           %zu bits, %.1f bps\n", r.raw_key.size(), r.raw_key_rate_bps());
    out += strf("  reference rate    %.1f bps (ratio %.3f)\n", cfg.reference_raw_key_rate_bps,
                r.raw_key_rate_bps() / cfg.reference_raw_key_rate_bps);
    out += "    the rate scales with the SIFT-Z share of rounds, (1 - p_ctrl) * p_basis_z,\n"
           "    so the reference is an order-of-magnitude comparison only\n";
    return out;
}

Json abort_json(const AbortDecision& d) {
    return Json{{"verdict", d.verdict == AbortVerdict::Abort ? "abort" : "continue"},
                {"qber_ctrl_x", d.qber_ctrl_x},
                {"check_bits", d.check_bits},
                {"check_errors", d.check_errors},
                {"check_qber_sift_z", d.check_qber_sift_z},
                {"info_key_bits", d.info_key.size()}};
}

std::string abort_text(const AbortDecision& d) {
    std::string out = "abort check\n";
    out += strf("  verdict           %s\n", d.verdict == AbortVerdict::Abort ? "abort" : "continue");
    out += strf("  check bits        %llu (%llu errors, qber %.6f)\n", static_cast<unsigned long long>(d.check_bits),
                static_cast<unsigned long long>(d.check_errors), d.check_qber_sift_z);
    out += strf("  key bits left     %zu\n", d.info_key.size());
    return out;
}

Json stability_json(const StabilityReport& r) {
    return Json{{"intervals", r.intervals},
                {"qber_sift_z", summary_json(r.qber_sift_z)},
                {"qber_ctrl_x", summary_json(r.qber_ctrl_x)},
                {"contrast_sift_z", summary_json(r.contrast_sift_z)},
                {"contrast_ctrl_x", summary_json(r.contrast_ctrl_x)}};
}

std::string stability_text(const StabilityReport& r) {
    std::string out = strf("stability over %zu interval(s), count-weighted\n", r.intervals);
    out += summary_line("qber_sift_z", r.qber_sift_z);
    out += summary_line("qber_ctrl_x", r.qber_ctrl_x);
    out += summary_line("contrast_sift_z", r.contrast_sift_z);
    out += summary_line("contrast_ctrl_x", r.contrast_ctrl_x);
    return out;
}

Json outcome_json(const AttackOutcome& o) {
    return Json{{"e_ctrl_x", o.e_ctrl_x},
                {"e_sift_z", o.e_sift_z},
                {"eve_trace_distance", o.eve_trace_distance},
                {"eve_holevo_bits", o.eve_holevo_bits}};
}

std::string outcome_text(const AttackOutcome& o) {
    std::string out = "exact attack outcome\n";
    out += strf("  e_ctrl_x          %.9f\n", o.e_ctrl_x);
    out += strf("  e_sift_z          %.9f\n", o.e_sift_z);
    out += strf("  trace distance    %.9f\n", o.eve_trace_distance);
    out += strf("  holevo            %.9f bits\n", o.eve_holevo_bits);
    return out;
}

Json constraints_json(const ConstraintReport& r) {
    return Json{{"tol", r.tol},
                {"ctrl_residual", r.ctrl_residual},
                {"sift0_residual", r.sift0_residual},
                {"sift1_residual", r.sift1_residual},
                {"backward_only", r.backward_only},
                {"backward_flip_residual", r.backward_flip_residual},
                {"backward_equal_residual", r.backward_equal_residual},
                {"trace_distance", r.trace_distance},
                {"info_bound", r.info_bound},
                {"within_tol", r.within_tol},
                {"implication_holds", r.implication_holds},
                {"sift_only_counterexample", r.sift_only_counterexample}};
}

std::string constraints_text(const ConstraintReport& r) {
    std::string out = strf("no-error residuals (tol %g)\n", r.tol);
    out += strf("  ctrl              %.9f\n", r.ctrl_residual);
    out += strf("  sift0 / sift1     %.9f / %.9f\n", r.sift0_residual, r.sift1_residual);
    if (r.backward_only) {
        out += strf("  backward only     flip %.9f  equal %.9f\n", r.backward_flip_residual, r.backward_equal_residual);
    }
    out += strf("  trace distance    %.9f <= bound %.9f\n", r.trace_distance, r.info_bound);
    out += strf("  within tol        %s\n", r.within_tol ? "yes" : "no");
    out += strf("  implication       %s\n", r.implication_holds ? "holds" : "FAILS");
    if (r.sift_only_counterexample) {
        out += "  zero SIFT-Z error without the CTRL condition: information leaks\n";
    }
    return out;
}

std::string intervals_csv(std::span<const IntervalStat> series) {
    std::string out = "interval,qber_sift_z,qber_ctrl_x,contrast_sift_z,contrast_ctrl_x,conclusive\n";
    for (const IntervalStat& s : series) {
        out += strf("%llu,%.9f,%.9f,%.9f,%.9f,%llu\n", static_cast<unsigned long long>(s.interval_index), s.qber_sift_z,
                    s.qber_ctrl_x, s.contrast_sift_z, s.contrast_ctrl_x,
                    static_cast<unsigned long long>(s.conclusive_total));
    }
    return out;
}

void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : files) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out << content;
        if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

}  // namespace sqkd::cli
