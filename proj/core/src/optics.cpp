#include "sqkd/optics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sqkd {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool finite_nonneg(double x) { return std::isfinite(x) && x >= 0.0; }
bool probability(double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; }

}  // namespace

void validate(const SourceParams& p) {
    require(std::isfinite(p.clock_hz) && p.clock_hz > 0.0, "clock_hz must be > 0");
    require(std::isfinite(p.mean_photons) && p.mean_photons > 0.0, "mean_photons must be > 0");
    require(finite_nonneg(p.pulse_width_s), "pulse_width_s must be >= 0");
    require(finite_nonneg(p.amzi_delay_s), "amzi_delay_s must be >= 0");
    require(p.amzi_delay_s < p.period_s(), "amzi_delay_s must be shorter than the clock period");
}

void validate(const DetectorParams& p) {
    require(probability(p.efficiency), "detector_efficiency must be in [0, 1]");
    require(probability(p.dark_prob_per_gate), "dark_prob_per_gate must be in [0, 1]");
    require(finite_nonneg(p.gate_width_s), "gate_width_s must be >= 0");
    require(finite_nonneg(p.dead_time_s), "dead_time_s must be >= 0");
}

void validate(const ChannelParams& p) {
    require(finite_nonneg(p.circulator_loss_db), "circulator_loss_db must be >= 0");
    require(finite_nonneg(p.channel_loss_db), "channel_loss_db must be >= 0");
    require(probability(p.visibility), "visibility must be in [0, 1]");
}

void validate(const ModulatorCalibration& c) {
    require(std::isfinite(c.v_pi) && c.v_pi > 0.0, "v_pi must be > 0");
    require(c.passes == 1 || c.passes == 2, "passes must be 1 or 2");
    require(std::abs(phase_from_voltage(c, c.v_pi / c.passes) - std::numbers::pi) < 1e-12,
            "modulator calibration does not map v_pi to pi");
    // Within one drive polarity, larger |voltage| must mean larger |phase|.
    for (int sign : {1, -1}) {
        std::vector<CalibrationRow> rows;
        std::copy_if(c.table.begin(), c.table.end(), std::back_inserter(rows),
                     [sign](const CalibrationRow& r) { return r.voltage * sign > 0.0; });
        std::sort(rows.begin(), rows.end(),
                  [](const CalibrationRow& a, const CalibrationRow& b) { return std::abs(a.voltage) < std::abs(b.voltage); });
        for (std::size_t i = 1; i < rows.size(); ++i) {
            require(std::abs(rows[i].intended_phase) >= std::abs(rows[i - 1].intended_phase),
                    "calibration table is not monotone in voltage");
        }
        for (const auto& r : rows) {
            require(std::isfinite(r.intended_phase) && r.intended_phase * sign >= 0.0,
                    "calibration row phase sign disagrees with drive polarity");
        }
    }
}

void validate(const OpticalParams& p) {
    validate(p.source);
    validate(p.detector);
    validate(p.channel);
    validate(p.modulators.pm1);
    validate(p.modulators.alice);
    validate(p.modulators.bob);
}

double phase_from_voltage(const ModulatorCalibration& cal, double voltage) {
    return std::numbers::pi * voltage / cal.v_pi * cal.passes;
}

double modulator_phase(const ModulatorCalibration& cal, double voltage, ModulatorModel model) {
    if (voltage == 0.0) {
        return 0.0;
    }
    if (model == ModulatorModel::Table) {
        for (const auto& row : cal.table) {
            if (row.voltage == voltage) {
                return row.intended_phase;
            }
        }
    }
    return phase_from_voltage(cal, voltage);
}

const char* to_string(ClickEvent c) {
    switch (c) {
        case ClickEvent::None: return "none";
        case ClickEvent::Spd1: return "spd1";
        case ClickEvent::Spd2: return "spd2";
        case ClickEvent::Double: return "double";
    }
    return "?";
}

double db_to_transmission(double db) { return std::pow(10.0, -db / 10.0); }

DetectionProbs route_probs(double ideal_spd1, const ChannelParams& ch) {
    const double fringe = ch.visibility * (2.0 * ideal_spd1 - 1.0);
    const double channel = db_to_transmission(ch.channel_loss_db);
    const double circulator = db_to_transmission(ch.circulator_loss_db);
    DetectionProbs p;
    p.spd1 = 0.5 * (1.0 + fringe) * channel * circulator;
    p.spd2 = 0.5 * (1.0 - fringe) * channel;
    p.loss = 1.0 - p.spd1 - p.spd2;
    return p;
}

DetectionProbs interference_probs(double delta_phi, const ChannelParams& ch) {
    return route_probs(0.5 * (1.0 + std::cos(delta_phi)), ch);
}

ClickEvent detect(const DetectionProbs& probs, int n_photons, const DetectorParams& det, StreamRng& rng) {
    bool click1 = false;
    bool click2 = false;
    for (int i = 0; i < n_photons; ++i) {
        const double route = rng.uniform();
        const double hit = rng.uniform();
        if (route < probs.spd1) {
            click1 = click1 || hit < det.efficiency;
        } else if (route < probs.spd1 + probs.spd2) {
            click2 = click2 || hit < det.efficiency;
        }
    }
    if (det.dark_prob_per_gate > 0.0) {
        click1 = (rng.uniform() < det.dark_prob_per_gate) || click1;
        click2 = (rng.uniform() < det.dark_prob_per_gate) || click2;
    }
    if (click1 && click2) return ClickEvent::Double;
    if (click1) return ClickEvent::Spd1;
    if (click2) return ClickEvent::Spd2;
    return ClickEvent::None;
}

ClickDistribution click_distribution(const DetectionProbs& probs, const SourceParams& src, const DetectorParams& det) {
    const double d = det.dark_prob_per_gate;
    const double h1 = det.efficiency * probs.spd1;
    const double h2 = det.efficiency * probs.spd2;
    ClickDistribution out;
    if (src.photon_source == PhotonSource::SinglePhoton) {
        const double miss = 1.0 - h1 - h2;
        out.spd1 = h1 * (1.0 - d) + miss * d * (1.0 - d);
        out.spd2 = h2 * (1.0 - d) + miss * d * (1.0 - d);
        out.both = (h1 + h2) * d + miss * d * d;
    } else {
        // Poisson thinning: the two detectors see independent photon streams.
        const double c1 = 1.0 - (1.0 - d) * std::exp(-src.mean_photons * h1);
        const double c2 = 1.0 - (1.0 - d) * std::exp(-src.mean_photons * h2);
        out.spd1 = c1 * (1.0 - c2);
        out.spd2 = c2 * (1.0 - c1);
        out.both = c1 * c2;
    }
    out.none = 1.0 - out.spd1 - out.spd2 - out.both;
    return out;
}

bool DeadTimeFilter::accept(int detector, double t_s) {
    if (t_s - last_click_s_[detector] < dead_time_s_) {
        ++suppressed_;
        return false;
    }
    last_click_s_[detector] = t_s;
    return true;
}

ClickEvent DeadTimeFilter::apply(ClickEvent raw, double t_s) {
    const bool c1 = (raw == ClickEvent::Spd1 || raw == ClickEvent::Double) && accept(0, t_s);
    const bool c2 = (raw == ClickEvent::Spd2 || raw == ClickEvent::Double) && accept(1, t_s);
    if (c1 && c2) return ClickEvent::Double;
    if (c1) return ClickEvent::Spd1;
    if (c2) return ClickEvent::Spd2;
    return ClickEvent::None;
}

double visibility_from_counts(std::uint64_t n_max, std::uint64_t n_min) {
    const double total = static_cast<double>(n_max) + static_cast<double>(n_min);
    if (total == 0.0) {
        throw UndefinedInputError("visibility_from_counts: no counts");
    }
    return (static_cast<double>(n_max) - static_cast<double>(n_min)) / total;
}

}  // namespace sqkd
