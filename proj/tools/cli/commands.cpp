#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

#include <sqkd/adversary.hpp>
#include <sqkd/metrics.hpp>
#include <sqkd/protocol.hpp>

#include "cli/config.hpp"
#include "cli/report.hpp"

namespace sqkd::cli {

namespace {

constexpr double kInfoAtZeroLimit = 1e-6;
constexpr double kFullInterceptInfo = 0.99;
constexpr double kCalibrationTolerance = 0.001;

ScenarioConfig load(const RunOptions& opts) {
    ScenarioConfig cfg = opts.config.empty() ? ScenarioConfig{} : load_config(opts.config);
    if (opts.seed) cfg.seed = *opts.seed;
    return cfg;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

/// Maps exceptions to exit codes so every command reports failures the same way.
int guarded(std::ostream& err, const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
}

SessionOptions session_options(const ScenarioConfig& cfg, const RunOptions& opts) {
    SessionOptions s;
    s.interval_rounds = cfg.interval_rounds;
    s.shards = std::max(1u, opts.threads);
    return s;
}

struct ClassCheck {
    RoundClass cls;
    double exact = 0.0;     // induced by the attack alone
    double expected = 0.0;  // exact attack plus optics, detectors and dark counts
    double measured = 0.0;
    std::uint64_t conclusive = 0;
    double sigma = 0.0;
    bool agrees = true;
};

ClassCheck check_class(RoundClass cls, double exact, const SessionResult& s, const ScenarioConfig& cfg,
                       const RoutingTable& routing) {
    ClassCheck c;
    c.cls = cls;
    c.exact = exact;
    c.expected = predict_class(cls, cfg.rounds, cfg.phys.source, cfg.phys.detector, routing).qber();
    c.measured = s.totals.qber(cls);
    c.conclusive = s.totals.conclusive(cls);
    if (c.conclusive > 0) {
        c.sigma = std::sqrt(c.expected * (1.0 - c.expected) / static_cast<double>(c.conclusive));
        c.agrees = std::abs(c.measured - c.expected) <= 3.0 * c.sigma + 1e-12;
    }
    return c;
}

}  // namespace

int cmd_simulate(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load(opts);
        const std::optional<AttackModel> attack = cfg.attack_model();
        const AttackModel* attack_ptr = attack ? &*attack : nullptr;

        const SessionResult session =
            run_session(cfg.n_rounds, cfg.rounds, cfg.phys, attack_ptr, cfg.seed, session_options(cfg, opts));
        const std::vector<IntervalStat> series = interval_series(session);
        const StabilityReport stability = stability_report(series);
        const AbortDecision decision = abort_check(session, cfg.abort_threshold_ctrl_x, cfg.abort_threshold_sift_z,
                                                   cfg.check_fraction, cfg.seed);
        const RoutingTable routing = make_routing_table(cfg.phys, attack_ptr);
        const double pred_z =
            predict_class(RoundClass::SiftZ, cfg.rounds, cfg.phys.source, cfg.phys.detector, routing).qber();
        const double pred_x =
            predict_class(RoundClass::CtrlX, cfg.rounds, cfg.phys.source, cfg.phys.detector, routing).qber();

        Json j = report_header("simulate", cfg.seed);
        j["config"] = config_json(cfg);
        j["session"] = session_json(session, cfg);
        j["predicted"] = Json{{"qber_sift_z", pred_z}, {"qber_ctrl_x", pred_x}};
        j["abort_check"] = abort_json(decision);
        j["stability"] = stability_json(stability);
        std::string text = strf("sqkd simulate  seed %llu  attack %s\n\n", static_cast<unsigned long long>(cfg.seed),
                                attack_name(cfg).c_str());
        text += session_text(session, cfg);
        text += strf("  predicted qber    sift_z %.6f  ctrl_x %.6f\n\n", pred_z, pred_x);
        text += abort_text(decision) + "\n";
        text += stability_text(stability);
        if (attack) {
            const AttackOutcome o = assess(*attack);
            j["attack"] = Json{{"name", attack_name(cfg)}, {"exact", outcome_json(o)}};
            text += "\n" + outcome_text(o);
        }

        write_outputs(opts.out_dir,
                      {{"report.txt", text}, {"report.json", dump(j)}, {"intervals.csv", intervals_csv(series)}});
        out << strf("qber_sift_z %.6f  qber_ctrl_x %.6f  contrast %.6f  raw key %.1f bps  verdict %s\n",
                    session.qber_sift_z(), session.qber_ctrl_x(), session.matched_contrast(),
                    session.raw_key_rate_bps(), decision.verdict == AbortVerdict::Abort ? "abort" : "continue");
        return kOk;
    });
}

int cmd_attack_eval(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const ScenarioConfig cfg = load(opts);
        if (cfg.attack == AttackChoice::None) {
            std::string valid = "generator";
            for (NamedAttack a : all_named_attacks()) valid += ", " + std::string(to_string(a));
            throw ConfigError("attack", "attack-eval needs an attack (valid: " + valid + ")");
        }
        const AttackModel attack = *cfg.attack_model();
        const AttackOutcome exact = assess(attack);
        const ConstraintReport constraints = verify_no_error_constraints(attack, 1e-9);

        Json j = report_header("attack-eval", cfg.seed);
        j["config"] = config_json(cfg);
        j["attack"] = attack_name(cfg);
        j["exact"] = outcome_json(exact);
        j["constraints"] = constraints_json(constraints);
        std::string text = strf("sqkd attack-eval  seed %llu  attack %s\n\n", static_cast<unsigned long long>(cfg.seed),
                                attack_name(cfg).c_str());
        text += outcome_text(exact) + "\n" + constraints_text(constraints);

        bool agree = true;
        if (cfg.n_rounds > 0) {
            const SessionResult session =
                run_session(cfg.n_rounds, cfg.rounds, cfg.phys, &attack, cfg.seed, session_options(cfg, opts));
            const RoutingTable routing = make_routing_table(cfg.phys, &attack);
            const ClassCheck checks[2] = {check_class(RoundClass::SiftZ, exact.e_sift_z, session, cfg, routing),
                                          check_class(RoundClass::CtrlX, exact.e_ctrl_x, session, cfg, routing)};
            Json mc = Json::object();
            text += strf("\nmonte carlo, %llu rounds\n", static_cast<unsigned long long>(cfg.n_rounds));
            text += "  class    exact        expected     measured     3 sigma      conclusive  agrees\n";
            for (const ClassCheck& c : checks) {
                agree = agree && c.agrees;
                mc[to_string(c.cls)] = Json{{"exact", c.exact},           {"expected", c.expected},
                                            {"measured", c.measured},     {"conclusive", c.conclusive},
                                            {"three_sigma", 3.0 * c.sigma}, {"agrees", c.agrees}};
                text += strf("  %-7s  %.9f  %.9f  %.9f  %.9f  %-10llu  %s\n", to_string(c.cls), c.exact, c.expected,
                             c.measured, 3.0 * c.sigma, static_cast<unsigned long long>(c.conclusive),
                             c.agrees ? "yes" : "NO");
            }
            text += "  expected = exact attack statistics passed through the optics, detector and dark-count model\n";
            j["monte_carlo"] = mc;
            j["session"] = session_json(session, cfg);
        }
        j["agrees"] = agree;

        write_outputs(opts.out_dir, {{"report.txt", text}, {"report.json", dump(j)}});
        out << strf("%s: e_ctrl_x %.6f  e_sift_z %.6f  trace distance %.6f  holevo %.6f\n", attack_name(cfg).c_str(),
                    exact.e_ctrl_x, exact.e_sift_z, exact.eve_trace_distance, exact.eve_holevo_bits);
        if (!agree) {
            err << "monte carlo qber disagrees with the exact attack statistics beyond 3 sigma\n";
            return kAssertionFailure;
        }
        return kOk;
    });
}

int cmd_robustness_sweep(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ScenarioConfig cfg = load(opts);
        if (opts.epsilons) {
            cfg.sweep_epsilons = *opts.epsilons;
            validate(cfg);
        }
        if (cfg.sweep_epsilons.empty()) throw ConfigError("sweep_epsilons", "sweep_epsilons must not be empty");

        OptimizerConfig ocfg = cfg.optimizer;
        ocfg.threads = std::max(1u, opts.threads);
        const std::vector<SearchResult> results = robustness_sweep(cfg.sweep_epsilons, cfg.ancilla_dim, ocfg);

        std::vector<std::size_t> order(results.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return results[a].epsilon < results[b].epsilon; });

        std::vector<std::string> failures;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const SearchResult& r = results[order[k]];
            if (r.diverged) failures.push_back(strf("optimizer diverged at epsilon %g", r.epsilon));
            if (r.epsilon == 0.0 && r.info > kInfoAtZeroLimit) {
                failures.push_back(strf("information %.3e at epsilon 0 exceeds %g", r.info, kInfoAtZeroLimit));
            }
            if (r.epsilon >= 0.5 && r.info < kFullInterceptInfo) {
                failures.push_back(strf("information %.6f at epsilon %g is below %g", r.info, r.epsilon, kFullInterceptInfo));
            }
            if (k > 0 && r.info < results[order[k - 1]].info - 1e-12) {
                failures.push_back(strf("information decreases from epsilon %g to %g", results[order[k - 1]].epsilon,
                                        r.epsilon));
            }
        }

        std::string csv =
            "epsilon,best_info_trace_distance,best_info_holevo,starts,iterations,feasible_starts,e_ctrl_x,e_sift_z\n";
        std::string text = strf("sqkd robustness-sweep  ancilla_dim %zu  starts %u  optimizer_seed %llu\n\n",
                                cfg.ancilla_dim, ocfg.starts, static_cast<unsigned long long>(ocfg.seed));
        text += "  epsilon   trace distance  holevo        starts  feasible  iterations  e_ctrl_x      e_sift_z\n";
        Json rows = Json::array();
        for (const SearchResult& r : results) {
            csv += strf("%s,%.12e,%.12e,%zu,%u,%u,%.12e,%.12e\n", format_double(r.epsilon).c_str(), r.info,
                        r.best.eve_holevo_bits, r.starts.size(), r.iterations, r.feasible_starts, r.best.e_ctrl_x,
                        r.best.e_sift_z);
            text += strf("  %-8g  %.6e    %.6e  %-6zu  %-8u  %-10u  %.6e  %.6e\n", r.epsilon, r.info,
                         r.best.eve_holevo_bits, r.starts.size(), r.feasible_starts, r.iterations, r.best.e_ctrl_x,
                         r.best.e_sift_z);
            rows.push_back(Json{{"epsilon", r.epsilon},
                                {"best_info_trace_distance", r.info},
                                {"best_info_holevo", r.best.eve_holevo_bits},
                                {"starts", r.starts.size()},
                                {"feasible_starts", r.feasible_starts},
                                {"iterations", r.iterations},
                                {"evaluations", r.evaluations},
                                {"best", outcome_json(r.best)},
                                {"diverged", r.diverged}});
        }
        text += failures.empty() ? "\nchecks passed\n" : "\nchecks FAILED\n";
        for (const std::string& f : failures) text += "  " + f + "\n";

        Json j = report_header("robustness-sweep", cfg.seed);
        j["config"] = config_json(cfg);
        j["results"] = rows;
        j["failures"] = failures;
        write_outputs(opts.out_dir, {{"report.txt", text}, {"report.json", dump(j)}, {"robustness.csv", csv}});
        out << text;
        for (const std::string& f : failures) err << f << "\n";
        return failures.empty() ? kOk : kAssertionFailure;
    });
}

int cmd_calibrate(const RunOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        ScenarioConfig cfg = load(opts);
        if (opts.target_contrast) {
            cfg.calibrate_target_contrast = *opts.target_contrast;
            validate(cfg);
        }
        const double target = cfg.calibrate_target_contrast;

        SessionOptions sopts = session_options(cfg, opts);
        sopts.interval_rounds = cfg.calibrate_rounds;
        Json trace = Json::array();
        auto contrast_at = [&](double v) {
            OpticalParams phys = cfg.phys;
            phys.channel.visibility = v;
            // The same seed at every step keeps the bisection on common random numbers.
            const double c =
                run_session(cfg.calibrate_rounds, cfg.rounds, phys, nullptr, cfg.seed, sopts).matched_contrast();
            trace.push_back(Json{{"visibility", v}, {"contrast", c}});
            return c;
        };

        const double best = contrast_at(1.0);
        if (best < target - kCalibrationTolerance) {
            throw ConfigError("calibrate_target_contrast",
                              strf("calibrate_target_contrast %.6f is unreachable: the achievable contrast at "
                                   "visibility 1 is %.6f",
                                   target, best));
        }
        double v = 1.0;
        double c = best;
        if (std::abs(best - target) > 0.2 * kCalibrationTolerance) {
            double lo = 0.0;
            double hi = 1.0;
            for (int it = 0; it < 40 && hi - lo > 1e-7; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double cm = contrast_at(mid);
                if (std::abs(cm - target) < std::abs(c - target)) {
                    v = mid;
                    c = cm;
                }
                if (std::abs(cm - target) <= 0.2 * kCalibrationTolerance) break;
                (cm < target ? lo : hi) = mid;
            }
            // A short decimal keeps the written config readable.
            const double rounded = std::round(v * 1e6) / 1e6;
            if (rounded != v) {
                v = rounded;
                c = contrast_at(v);
            }
        }
        cfg.phys.channel.visibility = v;

        const bool ok = std::abs(c - target) <= kCalibrationTolerance;
        std::string cfg_text = strf("# visibility calibrated for matched contrast %.6f (achieved %.6f)\n", target, c);
        cfg_text += to_config_text(cfg);

        Json j = report_header("calibrate", cfg.seed);
        j["target_contrast"] = target;
        j["calibrate_rounds"] = cfg.calibrate_rounds;
        j["visibility"] = v;
        j["contrast"] = c;
        j["within_tolerance"] = ok;
        j["trace"] = trace;
        std::string text = strf("sqkd calibrate  seed %llu  rounds %llu\n\n", static_cast<unsigned long long>(cfg.seed),
                                static_cast<unsigned long long>(cfg.calibrate_rounds));
        text += strf("  target contrast   %.6f\n  visibility        %.6f\n  achieved contrast %.6f\n  steps             %zu\n",
                     target, v, c, trace.size());
        write_outputs(opts.out_dir,
                      {{"calibrated.cfg", cfg_text}, {"report.txt", text}, {"report.json", dump(j)}});
        out << text;
        if (!ok) {
            err << strf("calibration missed the target by %.6f\n", std::abs(c - target));
            return kAssertionFailure;
        }
        return kOk;
    });
}

}  // namespace sqkd::cli
