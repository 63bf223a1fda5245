#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "sqkd/rng.hpp"

namespace sqkd {

/// Raised when a metric is requested on input that does not define it,
/// e.g. a contrast from zero counts.
class UndefinedInputError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class PhotonSource { Poisson, SinglePhoton };

struct SourceParams {
    double clock_hz = 1e8;
    double mean_photons = 0.1;
    double pulse_width_s = 50e-12;
    double amzi_delay_s = 2.9e-9;
    PhotonSource photon_source = PhotonSource::Poisson;

    double period_s() const { return 1.0 / clock_hz; }
};

struct DetectorParams {
    double efficiency = 0.205;
    double dark_prob_per_gate = 3e-6;
    double gate_width_s = 1e-9;
    double dead_time_s = 5e-9;
};

struct ChannelParams {
    double circulator_loss_db = 0.39;  // port 2 -> 3, SPD1 path only
    double channel_loss_db = 0.0;
    double visibility = 1.0;
};

struct CalibrationRow {
    double voltage = 0.0;
    double intended_phase = 0.0;
};

/// Linear electro-optic phase modulator plus the measured drive table.
struct ModulatorCalibration {
    double v_pi = 1.0;  // volts for a pi shift in a single pass
    int passes = 1;
    std::vector<CalibrationRow> table;
};

enum class ModulatorModel {
    Table,   // each drive voltage yields its table row's intended phase
    Linear,  // phase follows the linear v_pi model, table asymmetries included
};

/// Bench drive settings. PM1 prepares |+> on Bob's side, PM3 is Alice's
/// double-pass modulator, PM2 is Bob's measurement modulator.
struct ModulatorSet {
    ModulatorModel model = ModulatorModel::Table;
    ModulatorCalibration pm1{5.90, 1, {{2.95, 1.5707963267948966}}};
    double pm1_voltage = 2.95;
    ModulatorCalibration alice{8.04, 2, {{2.01, 1.5707963267948966}, {-1.78, -1.5707963267948966}}};
    double alice_sift0_voltage = 2.01;
    double alice_sift1_voltage = -1.78;
    ModulatorCalibration bob{5.62, 1, {{2.81, 1.5707963267948966}, {-3.23, -1.5707963267948966}}};
    double bob_xplus_voltage = 2.81;
    double bob_xminus_voltage = -3.23;
};

struct OpticalParams {
    SourceParams source;
    DetectorParams detector;
    ChannelParams channel;
    ModulatorSet modulators;
};

void validate(const SourceParams& p);
void validate(const DetectorParams& p);
void validate(const ChannelParams& p);
void validate(const ModulatorCalibration& c);
void validate(const OpticalParams& p);

/// pi * voltage / v_pi * passes. Voltage sign sets phase sign.
double phase_from_voltage(const ModulatorCalibration& cal, double voltage);

/// Phase produced by `voltage` under the chosen modulator model. The table
/// model falls back to the linear map for voltages not in the table.
double modulator_phase(const ModulatorCalibration& cal, double voltage, ModulatorModel model);

enum class ClickEvent : std::uint8_t { None, Spd1, Spd2, Double };

const char* to_string(ClickEvent c);
inline bool is_conclusive(ClickEvent c) { return c == ClickEvent::Spd1 || c == ClickEvent::Spd2; }

struct DetectionProbs {
    double spd1 = 0.0;
    double spd2 = 0.0;
    double loss = 0.0;
};

double db_to_transmission(double db);

/// Per-photon routing given the ideal (unit-visibility, lossless) probability
/// of reaching SPD1. Visibility shrinks the fringe around 1/2, then the SPD1
/// branch loses the circulator attenuation and both lose the channel loss.
DetectionProbs route_probs(double ideal_spd1, const ChannelParams& ch);

/// Routing for net phase delta_phi, measured from SPD1's constructive point:
/// spd1 = (1 + V cos dphi)/2 before losses.
DetectionProbs interference_probs(double delta_phi, const ChannelParams& ch);

/// Photon number of one pulse: Poisson(mean_photons), or exactly one.
template <class Rng>
int photon_count(const SourceParams& src, Rng& rng) {
    if (src.photon_source == PhotonSource::SinglePhoton) {
        return 1;
    }
    std::poisson_distribution<int> poisson(src.mean_photons);
    return poisson(rng);
}

/// One detection gate. Each photon is routed independently and detected with
/// the detector efficiency; dark counts fire independently per detector.
ClickEvent detect(const DetectionProbs& probs, int n_photons, const DetectorParams& det, StreamRng& rng);

/// Exact per-gate distribution of detect() averaged over photon_count().
struct ClickDistribution {
    double none = 0.0;
    double spd1 = 0.0;
    double spd2 = 0.0;
    double both = 0.0;
};

ClickDistribution click_distribution(const DetectionProbs& probs, const SourceParams& src, const DetectorParams& det);

/// Non-paralyzable dead time on each detector. Gates must be fed in time order.
class DeadTimeFilter {
public:
    explicit DeadTimeFilter(double dead_time_s) : dead_time_s_(dead_time_s) {}

    /// Returns the click that survives dead time at gate time `t_s`.
    ClickEvent apply(ClickEvent raw, double t_s);

    std::uint64_t suppressed() const { return suppressed_; }

private:
    bool accept(int detector, double t_s);

    double dead_time_s_;
    double last_click_s_[2] = {-1e300, -1e300};
    std::uint64_t suppressed_ = 0;
};

/// (n_max - n_min) / (n_max + n_min). Throws UndefinedInputError on zero total.
double visibility_from_counts(std::uint64_t n_max, std::uint64_t n_min);

}  // namespace sqkd
