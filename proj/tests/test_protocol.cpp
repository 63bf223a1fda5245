#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include <sqkd/adversary.hpp>
#include <sqkd/protocol.hpp>

#include "oracles.hpp"

using namespace sqkd;

namespace {

constexpr AliceOp kOps[3] = {AliceOp::Ctrl, AliceOp::Sift0, AliceOp::Sift1};
constexpr Basis kBases[3] = {Basis::Z, Basis::Xplus, Basis::Xminus};

OpticalParams ideal_physics() {
    OpticalParams p;
    p.source.photon_source = PhotonSource::SinglePhoton;
    p.detector.efficiency = 1.0;
    p.detector.dark_prob_per_gate = 0.0;
    p.channel.circulator_loss_db = 0.0;
    p.channel.visibility = 1.0;
    return p;
}

}  // namespace

TEST(Phases, Alice) {
    EXPECT_EQ(phase_for_alice(AliceOp::Ctrl), 0.0);
    EXPECT_DOUBLE_EQ(phase_for_alice(AliceOp::Sift0), std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(phase_for_alice(AliceOp::Sift1), -std::numbers::pi / 2);
}

TEST(Phases, Bob) {
    EXPECT_EQ(phase_for_bob(Basis::Z), 0.0);
    EXPECT_DOUBLE_EQ(phase_for_bob(Basis::Xplus), std::numbers::pi / 2);
    EXPECT_DOUBLE_EQ(phase_for_bob(Basis::Xminus), -std::numbers::pi / 2);
}

TEST(Phases, NetPhaseWithBenchDrives) {
    const ModulatorSet m;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) {
            EXPECT_NEAR(net_phase(op, b, m), phase_for_alice(op) - phase_for_bob(b) - std::numbers::pi / 2, 1e-12);
        }
    }
}

TEST(ExpectedDetector, ResponseTable) {
    EXPECT_EQ(expected_detector(AliceOp::Sift0, Basis::Z), ClickEvent::Spd1);
    EXPECT_EQ(expected_detector(AliceOp::Sift1, Basis::Z), ClickEvent::Spd2);
    EXPECT_EQ(expected_detector(AliceOp::Ctrl, Basis::Xplus), ClickEvent::Spd2);
    EXPECT_EQ(expected_detector(AliceOp::Ctrl, Basis::Xminus), ClickEvent::Spd1);
    EXPECT_FALSE(expected_detector(AliceOp::Sift0, Basis::Xplus));
    EXPECT_FALSE(expected_detector(AliceOp::Ctrl, Basis::Z));
}

TEST(ExpectedDetector, MismatchedPairsSplitEvenly) {
    const ChannelParams ch = ideal_physics().channel;
    const ModulatorSet m;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) {
            if (expected_detector(op, b)) continue;
            EXPECT_NEAR(interference_probs(net_phase(op, b, m), ch).spd1, 0.5, 1e-12);
        }
    }
}

TEST(Classify, Partition) {
    EXPECT_EQ(classify(AliceOp::Sift0, Basis::Z), RoundClass::SiftZ);
    EXPECT_EQ(classify(AliceOp::Sift1, Basis::Xminus), RoundClass::SiftX);
    EXPECT_EQ(classify(AliceOp::Ctrl, Basis::Xplus), RoundClass::CtrlX);
    EXPECT_EQ(classify(AliceOp::Ctrl, Basis::Z), RoundClass::CtrlZ);
}

TEST(RunRound, ForcedDeterministicRounds) {
    const OpticalParams phys = ideal_physics();
    const RoundConfig cfg;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        const TrialRecord a = run_round(i, 1, cfg, phys, nullptr, ForcedChoice{AliceOp::Sift0, Basis::Z});
        ASSERT_EQ(a.click, ClickEvent::Spd1);
        ASSERT_EQ(a.decoded_bit, 0);
        ASSERT_EQ(a.cls, RoundClass::SiftZ);
        const TrialRecord b = run_round(i, 1, cfg, phys, nullptr, ForcedChoice{AliceOp::Ctrl, Basis::Xminus});
        ASSERT_EQ(b.click, ClickEvent::Spd1);
        ASSERT_EQ(b.cls, RoundClass::CtrlX);
        ASSERT_FALSE(b.is_error());
    }
}

TEST(RunRound, DecodedBitIffConclusive) {
    OpticalParams phys;
    phys.detector.dark_prob_per_gate = 0.05;
    const RoutingTable routing = make_routing_table(phys, nullptr);
    for (std::uint64_t i = 0; i < 20000; ++i) {
        const TrialRecord r = simulate_round(i, 2, RoundConfig{}, phys.source, phys.detector, routing);
        ASSERT_EQ(r.decoded_bit.has_value(), is_conclusive(r.click));
        ASSERT_EQ(r.cls, classify(r.alice_op, r.bob_basis));
    }
}

TEST(RunRound, ForcingKeepsPhotonDraws) {
    // Forcing only overrides the choices; the photon and detector draws match.
    const OpticalParams phys;
    const RoutingTable routing = make_routing_table(phys, nullptr);
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const TrialRecord free = simulate_round(i, 3, RoundConfig{}, phys.source, phys.detector, routing);
        const TrialRecord forced = simulate_round(i, 3, RoundConfig{}, phys.source, phys.detector, routing,
                                                  ForcedChoice{free.alice_op, free.bob_basis});
        ASSERT_EQ(free.click, forced.click);
    }
}

TEST(Session, IdealIsErrorFree) {
    const SessionResult r = run_session(200000, RoundConfig{}, ideal_physics(), nullptr, 4);
    EXPECT_EQ(r.totals.errors(RoundClass::SiftZ), 0u);
    EXPECT_EQ(r.totals.errors(RoundClass::CtrlX), 0u);
    EXPECT_EQ(r.qber_sift_z(), 0.0);
    EXPECT_EQ(r.qber_ctrl_x(), 0.0);
    EXPECT_EQ(r.matched_contrast(), 1.0);
    EXPECT_EQ(r.raw_key, r.alice_key);
}

TEST(Session, ResponseRateMatchesWcpOracle) {
    OpticalParams phys;
    phys.detector.dark_prob_per_gate = 0.0;
    phys.channel.circulator_loss_db = 0.0;
    phys.channel.visibility = 1.0;
    const std::uint64_t n = 1'000'000;
    const SessionResult r = run_session(n, RoundConfig{}, phys, nullptr, 5);
    const double p = oracle::wcp_click(0.1, 0.205, 1.0);
    EXPECT_NEAR(p, 0.02029130352548214, 1e-15);  // frozen
    EXPECT_NEAR(r.response_rate(), p, 3.0 * oracle::binomial_sigma(p, n));
    // Matched rounds route every photon to one detector, so no double clicks.
    const double nz = static_cast<double>(r.totals.class_rounds(RoundClass::SiftZ));
    EXPECT_NEAR(r.totals.conclusive(RoundClass::SiftZ) / nz, p, 3.0 * oracle::binomial_sigma(p, nz));
}

TEST(Session, DarkCountsAloneGiveHalfQber) {
    OpticalParams phys;
    phys.source.mean_photons = 1e-15;
    phys.detector.dark_prob_per_gate = 0.01;
    const SessionResult r = run_session(1'000'000, RoundConfig{}, phys, nullptr, 6);
    const double nz = static_cast<double>(r.totals.conclusive(RoundClass::SiftZ));
    const double nx = static_cast<double>(r.totals.conclusive(RoundClass::CtrlX));
    EXPECT_NEAR(r.qber_sift_z(), 0.5, 3.0 * oracle::binomial_sigma(0.5, nz));
    EXPECT_NEAR(r.qber_ctrl_x(), 0.5, 3.0 * oracle::binomial_sigma(0.5, nx));
}

TEST(Session, MismatchedClassesAreBalanced) {
    const SessionResult r = run_session(400000, RoundConfig{}, ideal_physics(), nullptr, 7);
    for (RoundClass c : {RoundClass::SiftX, RoundClass::CtrlZ}) {
        const double n = static_cast<double>(r.totals.conclusive(c));
        const double f = r.totals.class_count(c, ClickEvent::Spd1) / n;
        EXPECT_NEAR(f, 0.5, 3.0 * oracle::binomial_sigma(0.5, n)) << to_string(c);
    }
}

TEST(Session, RawKeyRateIdentity) {
    const OpticalParams phys;
    const SessionResult r = run_session(300000, RoundConfig{}, phys, nullptr, 8);
    EXPECT_EQ(r.raw_key.size(), r.totals.conclusive(RoundClass::SiftZ));
    EXPECT_DOUBLE_EQ(r.raw_key_rate_bps() * static_cast<double>(r.n_rounds) / r.clock_hz,
                     static_cast<double>(r.raw_key.size()));
}

TEST(Session, ShardedEqualsSerial) {
    const OpticalParams phys;
    SessionOptions serial;
    serial.interval_rounds = 7000;
    serial.keep_records = true;
    SessionOptions sharded = serial;
    sharded.shards = 8;
    const SessionResult a = run_session(100003, RoundConfig{}, phys, nullptr, 9, serial);
    const SessionResult b = run_session(100003, RoundConfig{}, phys, nullptr, 9, sharded);
    EXPECT_EQ(a.totals.cells, b.totals.cells);
    EXPECT_EQ(a.raw_key, b.raw_key);
    EXPECT_EQ(a.alice_key, b.alice_key);
    ASSERT_EQ(a.intervals.size(), b.intervals.size());
    for (std::size_t i = 0; i < a.intervals.size(); ++i) EXPECT_EQ(a.intervals[i].cells, b.intervals[i].cells);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        ASSERT_EQ(a.records[i].round_index, i);
        ASSERT_EQ(a.records[i].click, b.records[i].click);
    }
}

TEST(Session, LongDeadTimeFallsBackToSerial) {
    OpticalParams phys;
    phys.detector.dead_time_s = 25e-9;
    phys.detector.dark_prob_per_gate = 0.05;
    SessionOptions sharded;
    sharded.shards = 4;
    const SessionResult a = run_session(50000, RoundConfig{}, phys, nullptr, 10);
    const SessionResult b = run_session(50000, RoundConfig{}, phys, nullptr, 10, sharded);
    EXPECT_GT(a.dead_time_suppressed, 0u);
    EXPECT_EQ(a.dead_time_suppressed, b.dead_time_suppressed);
    EXPECT_EQ(a.totals.cells, b.totals.cells);
}

TEST(Session, QberConvergesWithRounds) {
    OpticalParams phys;
    phys.channel.visibility = 0.9;
    const RoutingTable routing = make_routing_table(phys, nullptr);
    const double p = predict_class(RoundClass::SiftZ, RoundConfig{}, phys.source, phys.detector, routing).qber();
    double previous_band = 1.0;
    for (std::uint64_t n : {100'000ULL, 400'000ULL, 1'600'000ULL}) {
        const SessionResult r = run_session(n, RoundConfig{}, phys, nullptr, 11);
        const double nz = static_cast<double>(r.totals.conclusive(RoundClass::SiftZ));
        const double band = 3.0 * oracle::binomial_sigma(p, nz);
        EXPECT_NEAR(r.qber_sift_z(), p, band) << n;
        EXPECT_LT(band, previous_band);
        previous_band = band;
    }
}

TEST(Session, RejectsZeroRounds) {
    EXPECT_THROW(run_session(0, RoundConfig{}, OpticalParams{}, nullptr, 1), std::invalid_argument);
}

TEST(Tally, ContrastDefinitions) {
    Tally t;
    t.cells[static_cast<int>(AliceOp::Sift0)][static_cast<int>(Basis::Z)][static_cast<int>(ClickEvent::Spd1)] = 987;
    t.cells[static_cast<int>(AliceOp::Sift0)][static_cast<int>(Basis::Z)][static_cast<int>(ClickEvent::Spd2)] = 13;
    EXPECT_NEAR(t.contrast(RoundClass::SiftZ), 0.974, 1e-15);
    EXPECT_NEAR(t.qber(RoundClass::SiftZ), 0.013, 1e-15);
    t.cells[static_cast<int>(AliceOp::Ctrl)][static_cast<int>(Basis::Z)][static_cast<int>(ClickEvent::Spd1)] = 40;
    t.cells[static_cast<int>(AliceOp::Ctrl)][static_cast<int>(Basis::Z)][static_cast<int>(ClickEvent::Spd2)] = 60;
    EXPECT_NEAR(t.contrast(RoundClass::CtrlZ), 0.2, 1e-15);
    EXPECT_EQ(t.errors(RoundClass::CtrlZ), 0u);
    EXPECT_EQ(t.qber(RoundClass::CtrlX), 0.0);
    EXPECT_EQ(t.contrast(RoundClass::CtrlX), 0.0);
}

TEST(AbortCheck, Thresholds) {
    SessionResult r = run_session(100000, RoundConfig{}, ideal_physics(), nullptr, 12);
    const AbortDecision ok = abort_check(r, 0.05, 0.05, 0.1, 1);
    EXPECT_EQ(ok.verdict, AbortVerdict::Continue);
    EXPECT_EQ(ok.check_bits, static_cast<std::uint64_t>(std::llround(0.1 * r.raw_key.size())));
    EXPECT_EQ(ok.info_key.size(), r.raw_key.size() - ok.check_bits);
    EXPECT_THROW(abort_check(r, 1.5, 0.05, 0.1, 1), std::invalid_argument);
}

TEST(AbortCheck, StrictInequalityAtBoundary) {
    SessionResult r;
    r.n_rounds = 4;
    auto& cell = r.totals.cells[static_cast<int>(AliceOp::Ctrl)][static_cast<int>(Basis::Xplus)];
    cell[static_cast<int>(ClickEvent::Spd2)] = 3;
    cell[static_cast<int>(ClickEvent::Spd1)] = 1;
    EXPECT_DOUBLE_EQ(r.qber_ctrl_x(), 0.25);
    EXPECT_EQ(abort_check(r, 0.25, 0.05, 0.1, 1).verdict, AbortVerdict::Continue);
    EXPECT_EQ(abort_check(r, 0.2499, 0.05, 0.1, 1).verdict, AbortVerdict::Abort);
}

TEST(AbortCheck, InterceptResendAborts) {
    const AttackModel eve = named_attack(NamedAttack::BackwardZInterceptResend);
    const SessionResult r = run_session(100000, RoundConfig{}, ideal_physics(), &eve, 13);
    const AbortDecision d = abort_check(r, 0.05, 0.05, 0.1, 1);
    EXPECT_NEAR(d.qber_ctrl_x, 0.5, 0.02);
    EXPECT_EQ(d.verdict, AbortVerdict::Abort);
}

TEST(Prediction, ChoiceProbabilitiesSumToOne) {
    RoundConfig cfg{0.3, 0.7, 0.4, 0.2};
    double total = 0.0;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) total += choice_probability(cfg, op, b);
    }
    EXPECT_NEAR(total, 1.0, 1e-15);
    EXPECT_NEAR(choice_probability(cfg, AliceOp::Sift1, Basis::Xminus), 0.7 * 0.3 * 0.6 * 0.8, 1e-15);
}
