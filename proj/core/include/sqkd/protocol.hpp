#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sqkd/optics.hpp"
#include "sqkd/quantum.hpp"

namespace sqkd {

class AttackModel;

enum class AliceOp : std::uint8_t { Ctrl, Sift0, Sift1 };

const char* to_string(AliceOp op);
inline bool is_sift(AliceOp op) { return op != AliceOp::Ctrl; }
inline int sift_bit(AliceOp op) { return op == AliceOp::Sift1 ? 1 : 0; }

/// Round classes after the public basis/operation announcement.
enum class RoundClass : std::uint8_t { SiftZ, CtrlX, SiftX, CtrlZ };

const char* to_string(RoundClass c);
RoundClass classify(AliceOp op, Basis basis);
inline bool is_matched(RoundClass c) { return c == RoundClass::SiftZ || c == RoundClass::CtrlX; }

struct RoundConfig {
    double p_ctrl = 0.5;
    double p_sift0_given_sift = 0.5;
    double p_basis_z = 0.5;
    double p_xplus_given_x = 0.5;
};

void validate(const RoundConfig& cfg);

/// Intended phase of Alice's late-pulse modulation.
double phase_for_alice(AliceOp op);

/// Intended phase of Bob's measurement modulation (applied to the early pulse).
double phase_for_bob(Basis basis);

/// Late-minus-early phase at the beam splitter, measured from SPD1's
/// constructive point: prep + alice - bob - pi. With ideal drives this is
/// alice - bob - pi/2.
double net_phase(AliceOp op, Basis basis, const ModulatorSet& mods);

/// Detector a photon must reach for the deterministic (op, basis) pairs;
/// nullopt for the mismatched pairs, which split 50/50.
std::optional<ClickEvent> expected_detector(AliceOp op, Basis basis);

struct TrialRecord {
    std::uint64_t round_index = 0;
    AliceOp alice_op = AliceOp::Ctrl;
    Basis bob_basis = Basis::Z;
    ClickEvent click = ClickEvent::None;
    std::optional<int> decoded_bit;  // Spd1 -> 0, Spd2 -> 1
    RoundClass cls = RoundClass::CtrlZ;

    bool conclusive() const { return decoded_bit.has_value(); }

    /// Wrong outcome in a matched round. Always false for mismatched or
    /// inconclusive rounds.
    bool is_error() const;
};

struct ForcedChoice {
    AliceOp op;
    Basis basis;
};

/// Per-photon routing probabilities for every (op, basis) pair. Built once
/// per session so rounds only draw random numbers.
struct RoutingTable {
    std::array<std::array<DetectionProbs, 3>, 3> probs{};

    const DetectionProbs& at(AliceOp op, Basis basis) const {
        return probs[static_cast<std::size_t>(op)][static_cast<std::size_t>(basis)];
    }
};

/// Without an attack the routing follows interference_probs(net_phase). With
/// one, the ideal SPD1 probability comes from the exact joint-state evolution
/// and then goes through the same visibility and loss model.
RoutingTable make_routing_table(const OpticalParams& phys, const AttackModel* attack);

/// Draws the round's choices and click from the stream keyed by
/// (seed, round_index). Dead time is not applied here; run_session does that.
TrialRecord simulate_round(std::uint64_t round_index, std::uint64_t seed, const RoundConfig& cfg,
                           const SourceParams& source, const DetectorParams& detector, const RoutingTable& routing,
                           std::optional<ForcedChoice> forced = std::nullopt);

TrialRecord run_round(std::uint64_t round_index, std::uint64_t seed, const RoundConfig& cfg,
                      const OpticalParams& phys, const AttackModel* attack = nullptr,
                      std::optional<ForcedChoice> forced = std::nullopt);

/// Probability that a round picks (op, basis) under cfg.
double choice_probability(const RoundConfig& cfg, AliceOp op, Basis basis);

/// Per-round probabilities, joint with the class being drawn, before dead time.
struct ClassPrediction {
    double conclusive = 0.0;
    double errors = 0.0;

    double qber() const { return conclusive > 0.0 ? errors / conclusive : 0.0; }
};

ClassPrediction predict_class(RoundClass cls, const RoundConfig& cfg, const SourceParams& source,
                              const DetectorParams& detector, const RoutingTable& routing);

/// Click counts per (op, basis, click). Every protocol statistic is a sum of
/// these cells, so tallies merge exactly across shards and intervals.
struct Tally {
    std::array<std::array<std::array<std::uint64_t, 4>, 3>, 3> cells{};
    std::uint64_t rounds = 0;

    void add(const TrialRecord& r);
    Tally& operator+=(const Tally& other);

    std::uint64_t at(AliceOp op, Basis basis, ClickEvent click) const {
        return cells[static_cast<std::size_t>(op)][static_cast<std::size_t>(basis)][static_cast<std::size_t>(click)];
    }
    std::uint64_t class_count(RoundClass cls, ClickEvent click) const;
    std::uint64_t class_rounds(RoundClass cls) const;
    std::uint64_t conclusive(RoundClass cls) const;
    std::uint64_t errors(RoundClass cls) const;
    std::uint64_t responses(RoundClass cls) const;  // any click, doubles included

    /// errors / conclusive for the matched classes; 0 with no conclusive clicks.
    double qber(RoundClass cls) const;

    /// Matched: (expected - other)/(expected + other). Mismatched: (max - min)/(max + min)
    /// over SPD1/SPD2. 0 with no conclusive clicks.
    double contrast(RoundClass cls) const;

    /// Combined SIFT-Z + CTRL-X contrast.
    double matched_contrast() const;
};

struct SessionOptions {
    std::uint64_t interval_rounds = 0;  // 0: one minute of simulated clock
    unsigned shards = 1;
    bool keep_records = false;
};

struct SessionResult {
    std::uint64_t n_rounds = 0;
    double clock_hz = 0.0;
    std::uint64_t interval_rounds = 0;
    Tally totals;
    std::vector<Tally> intervals;
    std::vector<std::uint8_t> raw_key;    // Bob's decoded SIFT-Z bits, round order
    std::vector<std::uint8_t> alice_key;  // Alice's SIFT bits for the same rounds
    std::uint64_t double_clicks = 0;
    std::uint64_t dead_time_suppressed = 0;
    std::vector<TrialRecord> records;  // only with keep_records

    double qber_sift_z() const { return totals.qber(RoundClass::SiftZ); }
    double qber_ctrl_x() const { return totals.qber(RoundClass::CtrlX); }
    double contrast(RoundClass cls) const { return totals.contrast(cls); }
    double matched_contrast() const { return totals.matched_contrast(); }

    /// clock_hz * conclusive SIFT-Z detections / rounds.
    double raw_key_rate_bps() const;

    /// Fraction of gates with any click.
    double response_rate() const;
    double response_rate(RoundClass cls) const;
};

/// Runs n_rounds rounds split into contiguous shards. Round i depends only on
/// (seed, i, config), so any shard count yields the same result.
SessionResult run_session(std::uint64_t n_rounds, const RoundConfig& cfg, const OpticalParams& phys,
                          const AttackModel* attack, std::uint64_t seed, const SessionOptions& options = {});

enum class AbortVerdict { Continue, Abort };

struct AbortDecision {
    AbortVerdict verdict = AbortVerdict::Continue;
    double qber_ctrl_x = 0.0;
    double check_qber_sift_z = 0.0;
    std::uint64_t check_bits = 0;
    std::uint64_t check_errors = 0;
    std::vector<std::uint8_t> info_key;  // SIFT-Z bits left after the check sample
};

/// Publishes a random check_fraction of the SIFT-Z bits and aborts when
/// either error rate strictly exceeds its threshold.
AbortDecision abort_check(const SessionResult& result, double threshold_ctrl_x, double threshold_sift_z,
                          double check_fraction, std::uint64_t seed);

}  // namespace sqkd
