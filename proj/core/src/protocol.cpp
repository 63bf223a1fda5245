#include "sqkd/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "sqkd/adversary.hpp"

namespace sqkd {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

constexpr AliceOp kOps[3] = {AliceOp::Ctrl, AliceOp::Sift0, AliceOp::Sift1};
constexpr Basis kBases[3] = {Basis::Z, Basis::Xplus, Basis::Xminus};

void check_probability(double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument(std::string(name) + " must be in [0, 1]");
    }
}

/// Probability that an ideal detector pair sends the photon to SPD1, from
/// Bob's exact measurement statistics. X+ reads |+> on SPD2, X- reads it on SPD1.
double ideal_spd1_from_state(const JointState& state, Basis basis) {
    const auto [p0, p1] = born_probabilities(state, basis);
    return basis == Basis::Xplus ? p1 : p0;
}

}  // namespace

const char* to_string(AliceOp op) {
    switch (op) {
        case AliceOp::Ctrl: return "ctrl";
        case AliceOp::Sift0: return "sift0";
        case AliceOp::Sift1: return "sift1";
    }
    return "?";
}

const char* to_string(RoundClass c) {
    switch (c) {
        case RoundClass::SiftZ: return "sift_z";
        case RoundClass::CtrlX: return "ctrl_x";
        case RoundClass::SiftX: return "sift_x";
        case RoundClass::CtrlZ: return "ctrl_z";
    }
    return "?";
}

RoundClass classify(AliceOp op, Basis basis) {
    if (is_sift(op)) return basis == Basis::Z ? RoundClass::SiftZ : RoundClass::SiftX;
    return basis == Basis::Z ? RoundClass::CtrlZ : RoundClass::CtrlX;
}

void validate(const RoundConfig& cfg) {
    check_probability(cfg.p_ctrl, "p_ctrl");
    check_probability(cfg.p_sift0_given_sift, "p_sift0_given_sift");
    check_probability(cfg.p_basis_z, "p_basis_z");
    check_probability(cfg.p_xplus_given_x, "p_xplus_given_x");
}

double phase_for_alice(AliceOp op) {
    switch (op) {
        case AliceOp::Ctrl: return 0.0;
        case AliceOp::Sift0: return kHalfPi;
        case AliceOp::Sift1: return -kHalfPi;
    }
    return 0.0;
}

double phase_for_bob(Basis basis) {
    switch (basis) {
        case Basis::Z: return 0.0;
        case Basis::Xplus: return kHalfPi;
        case Basis::Xminus: return -kHalfPi;
    }
    return 0.0;
}

double net_phase(AliceOp op, Basis basis, const ModulatorSet& mods) {
    const double prep = modulator_phase(mods.pm1, mods.pm1_voltage, mods.model);
    double alice = 0.0;
    if (op == AliceOp::Sift0) alice = modulator_phase(mods.alice, mods.alice_sift0_voltage, mods.model);
    if (op == AliceOp::Sift1) alice = modulator_phase(mods.alice, mods.alice_sift1_voltage, mods.model);
    double bob = 0.0;
    if (basis == Basis::Xplus) bob = modulator_phase(mods.bob, mods.bob_xplus_voltage, mods.model);
    if (basis == Basis::Xminus) bob = modulator_phase(mods.bob, mods.bob_xminus_voltage, mods.model);
    return prep + alice - bob - std::numbers::pi;
}

std::optional<ClickEvent> expected_detector(AliceOp op, Basis basis) {
    switch (classify(op, basis)) {
        case RoundClass::SiftZ: return op == AliceOp::Sift0 ? ClickEvent::Spd1 : ClickEvent::Spd2;
        case RoundClass::CtrlX: return basis == Basis::Xplus ? ClickEvent::Spd2 : ClickEvent::Spd1;
        default: return std::nullopt;
    }
}

bool TrialRecord::is_error() const {
    if (!conclusive() || !is_matched(cls)) return false;
    return click != *expected_detector(alice_op, bob_basis);
}

RoutingTable make_routing_table(const OpticalParams& phys, const AttackModel* attack) {
    RoutingTable table;
    for (AliceOp op : kOps) {
        const auto i = static_cast<std::size_t>(op);
        if (attack == nullptr) {
            for (Basis b : kBases) {
                table.probs[i][static_cast<std::size_t>(b)] =
                    interference_probs(net_phase(op, b, phys.modulators), phys.channel);
            }
            continue;
        }
        const JointState final_state = evolve_round(*attack, op);
        for (Basis b : kBases) {
            table.probs[i][static_cast<std::size_t>(b)] =
                route_probs(ideal_spd1_from_state(final_state, b), phys.channel);
        }
    }
    return table;
}

TrialRecord simulate_round(std::uint64_t round_index, std::uint64_t seed, const RoundConfig& cfg,
                           const SourceParams& source, const DetectorParams& detector, const RoutingTable& routing,
                           std::optional<ForcedChoice> forced) {
    StreamRng rng(seed, round_index, streams::kRounds);
    // The four choice uniforms are always consumed so forcing a round does not
    // shift the photon and detector draws.
    const double u_ctrl = rng.uniform();
    const double u_bit = rng.uniform();
    const double u_basis = rng.uniform();
    const double u_sign = rng.uniform();

    TrialRecord r;
    r.round_index = round_index;
    if (forced) {
        r.alice_op = forced->op;
        r.bob_basis = forced->basis;
    } else {
        r.alice_op = u_ctrl < cfg.p_ctrl ? AliceOp::Ctrl
                     : u_bit < cfg.p_sift0_given_sift ? AliceOp::Sift0
                                                      : AliceOp::Sift1;
        r.bob_basis = u_basis < cfg.p_basis_z ? Basis::Z
                      : u_sign < cfg.p_xplus_given_x ? Basis::Xplus
                                                     : Basis::Xminus;
    }
    r.cls = classify(r.alice_op, r.bob_basis);

    const int n = photon_count(source, rng);
    r.click = detect(routing.at(r.alice_op, r.bob_basis), n, detector, rng);
    if (is_conclusive(r.click)) r.decoded_bit = r.click == ClickEvent::Spd1 ? 0 : 1;
    return r;
}

TrialRecord run_round(std::uint64_t round_index, std::uint64_t seed, const RoundConfig& cfg,
                      const OpticalParams& phys, const AttackModel* attack, std::optional<ForcedChoice> forced) {
    const RoutingTable routing = make_routing_table(phys, attack);
    return simulate_round(round_index, seed, cfg, phys.source, phys.detector, routing, forced);
}

double choice_probability(const RoundConfig& cfg, AliceOp op, Basis basis) {
    double p_op = cfg.p_ctrl;
    if (op == AliceOp::Sift0) p_op = (1.0 - cfg.p_ctrl) * cfg.p_sift0_given_sift;
    if (op == AliceOp::Sift1) p_op = (1.0 - cfg.p_ctrl) * (1.0 - cfg.p_sift0_given_sift);
    double p_basis = cfg.p_basis_z;
    if (basis == Basis::Xplus) p_basis = (1.0 - cfg.p_basis_z) * cfg.p_xplus_given_x;
    if (basis == Basis::Xminus) p_basis = (1.0 - cfg.p_basis_z) * (1.0 - cfg.p_xplus_given_x);
    return p_op * p_basis;
}

ClassPrediction predict_class(RoundClass cls, const RoundConfig& cfg, const SourceParams& source,
                              const DetectorParams& detector, const RoutingTable& routing) {
    ClassPrediction out;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) {
            if (classify(op, b) != cls) continue;
            const double w = choice_probability(cfg, op, b);
            const ClickDistribution c = click_distribution(routing.at(op, b), source, detector);
            out.conclusive += w * (c.spd1 + c.spd2);
            if (is_matched(cls)) out.errors += w * (*expected_detector(op, b) == ClickEvent::Spd1 ? c.spd2 : c.spd1);
        }
    }
    return out;
}

void Tally::add(const TrialRecord& r) {
    ++cells[static_cast<std::size_t>(r.alice_op)][static_cast<std::size_t>(r.bob_basis)]
           [static_cast<std::size_t>(r.click)];
    ++rounds;
}

Tally& Tally::operator+=(const Tally& other) {
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            for (std::size_t k = 0; k < 4; ++k) cells[i][j][k] += other.cells[i][j][k];
        }
    }
    rounds += other.rounds;
    return *this;
}

std::uint64_t Tally::class_count(RoundClass cls, ClickEvent click) const {
    std::uint64_t n = 0;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) {
            if (classify(op, b) == cls) n += at(op, b, click);
        }
    }
    return n;
}

std::uint64_t Tally::class_rounds(RoundClass cls) const {
    return class_count(cls, ClickEvent::None) + class_count(cls, ClickEvent::Spd1) +
           class_count(cls, ClickEvent::Spd2) + class_count(cls, ClickEvent::Double);
}

std::uint64_t Tally::conclusive(RoundClass cls) const {
    return class_count(cls, ClickEvent::Spd1) + class_count(cls, ClickEvent::Spd2);
}

std::uint64_t Tally::errors(RoundClass cls) const {
    if (!is_matched(cls)) return 0;
    std::uint64_t n = 0;
    for (AliceOp op : kOps) {
        for (Basis b : kBases) {
            if (classify(op, b) != cls) continue;
            const ClickEvent wrong = *expected_detector(op, b) == ClickEvent::Spd1 ? ClickEvent::Spd2 : ClickEvent::Spd1;
            n += at(op, b, wrong);
        }
    }
    return n;
}

std::uint64_t Tally::responses(RoundClass cls) const { return class_rounds(cls) - class_count(cls, ClickEvent::None); }

double Tally::qber(RoundClass cls) const {
    const std::uint64_t n = conclusive(cls);
    return n == 0 ? 0.0 : static_cast<double>(errors(cls)) / static_cast<double>(n);
}

double Tally::contrast(RoundClass cls) const {
    const std::uint64_t n = conclusive(cls);
    if (n == 0) return 0.0;
    if (is_matched(cls)) {
        const std::uint64_t e = errors(cls);
        return visibility_from_counts(n - e, e);
    }
    const std::uint64_t a = class_count(cls, ClickEvent::Spd1);
    const std::uint64_t b = class_count(cls, ClickEvent::Spd2);
    return visibility_from_counts(std::max(a, b), std::min(a, b));
}

double Tally::matched_contrast() const {
    const std::uint64_t n = conclusive(RoundClass::SiftZ) + conclusive(RoundClass::CtrlX);
    if (n == 0) return 0.0;
    const std::uint64_t e = errors(RoundClass::SiftZ) + errors(RoundClass::CtrlX);
    return visibility_from_counts(n - e, e);
}

double SessionResult::raw_key_rate_bps() const {
    if (n_rounds == 0) return 0.0;
    return clock_hz * static_cast<double>(raw_key.size()) / static_cast<double>(n_rounds);
}

double SessionResult::response_rate() const {
    if (totals.rounds == 0) return 0.0;
    std::uint64_t n = 0;
    for (RoundClass c : {RoundClass::SiftZ, RoundClass::CtrlX, RoundClass::SiftX, RoundClass::CtrlZ}) {
        n += totals.responses(c);
    }
    return static_cast<double>(n) / static_cast<double>(totals.rounds);
}

double SessionResult::response_rate(RoundClass cls) const {
    const std::uint64_t n = totals.class_rounds(cls);
    return n == 0 ? 0.0 : static_cast<double>(totals.responses(cls)) / static_cast<double>(n);
}

namespace {

struct Shard {
    std::vector<Tally> intervals;
    std::vector<std::uint8_t> raw_key;
    std::vector<std::uint8_t> alice_key;
    std::vector<TrialRecord> records;
    std::uint64_t suppressed = 0;
};

}  // namespace

SessionResult run_session(std::uint64_t n_rounds, const RoundConfig& cfg, const OpticalParams& phys,
                          const AttackModel* attack, std::uint64_t seed, const SessionOptions& options) {
    if (n_rounds < 1) throw std::invalid_argument("n_rounds must be >= 1");
    validate(cfg);
    validate(phys);

    SessionResult res;
    res.n_rounds = n_rounds;
    res.clock_hz = phys.source.clock_hz;
    res.interval_rounds = options.interval_rounds;
    if (res.interval_rounds == 0) {
        res.interval_rounds = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(60.0 * res.clock_hz)));
    }
    const std::uint64_t n_intervals = (n_rounds + res.interval_rounds - 1) / res.interval_rounds;

    const RoutingTable routing = make_routing_table(phys, attack);
    const double period = phys.source.period_s();

    // Dead time reaching past one period couples consecutive gates, which a
    // shard boundary would cut; such sessions run serially.
    unsigned shards = std::max(1u, options.shards);
    if (phys.detector.dead_time_s >= period) shards = 1;
    shards = static_cast<unsigned>(std::min<std::uint64_t>(shards, n_rounds));

    std::vector<Shard> parts(shards);
    auto work = [&](unsigned s) {
        const std::uint64_t begin = n_rounds * s / shards;
        const std::uint64_t end = n_rounds * (s + 1) / shards;
        Shard& part = parts[s];
        const std::uint64_t first_interval = begin / res.interval_rounds;
        const std::uint64_t last_interval = (end - 1) / res.interval_rounds;
        part.intervals.resize(last_interval - first_interval + 1);
        DeadTimeFilter filter(phys.detector.dead_time_s);
        for (std::uint64_t i = begin; i < end; ++i) {
            TrialRecord r = simulate_round(i, seed, cfg, phys.source, phys.detector, routing);
            const ClickEvent kept = filter.apply(r.click, static_cast<double>(i) * period);
            if (kept != r.click) {
                r.click = kept;
                r.decoded_bit.reset();
                if (is_conclusive(kept)) r.decoded_bit = kept == ClickEvent::Spd1 ? 0 : 1;
            }
            part.intervals[i / res.interval_rounds - first_interval].add(r);
            if (r.cls == RoundClass::SiftZ && r.decoded_bit) {
                part.raw_key.push_back(static_cast<std::uint8_t>(*r.decoded_bit));
                part.alice_key.push_back(static_cast<std::uint8_t>(sift_bit(r.alice_op)));
            }
            if (options.keep_records) part.records.push_back(r);
        }
        part.suppressed = filter.suppressed();
    };

    if (shards == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(shards);
        for (unsigned s = 0; s < shards; ++s) pool.emplace_back(work, s);
    }

    res.intervals.resize(n_intervals);
    for (unsigned s = 0; s < shards; ++s) {
        Shard& part = parts[s];
        const std::uint64_t first_interval = (n_rounds * s / shards) / res.interval_rounds;
        for (std::size_t k = 0; k < part.intervals.size(); ++k) res.intervals[first_interval + k] += part.intervals[k];
        res.raw_key.insert(res.raw_key.end(), part.raw_key.begin(), part.raw_key.end());
        res.alice_key.insert(res.alice_key.end(), part.alice_key.begin(), part.alice_key.end());
        res.records.insert(res.records.end(), part.records.begin(), part.records.end());
        res.dead_time_suppressed += part.suppressed;
    }
    for (const Tally& t : res.intervals) res.totals += t;
    for (RoundClass c : {RoundClass::SiftZ, RoundClass::CtrlX, RoundClass::SiftX, RoundClass::CtrlZ}) {
        res.double_clicks += res.totals.class_count(c, ClickEvent::Double);
    }
    return res;
}

AbortDecision abort_check(const SessionResult& result, double threshold_ctrl_x, double threshold_sift_z,
                          double check_fraction, std::uint64_t seed) {
    check_probability(threshold_ctrl_x, "abort_threshold_ctrl_x");
    check_probability(threshold_sift_z, "abort_threshold_sift_z");
    check_probability(check_fraction, "check_fraction");
    if (result.raw_key.size() != result.alice_key.size()) {
        throw std::invalid_argument("abort_check: raw and reference keys differ in length");
    }

    AbortDecision d;
    d.qber_ctrl_x = result.qber_ctrl_x();

    const std::size_t n = result.raw_key.size();
    const auto k = static_cast<std::size_t>(std::llround(check_fraction * static_cast<double>(n)));
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    StreamRng rng(seed, 0, streams::kCheckSample);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
        std::swap(idx[i], idx[std::min(j, n - 1)]);
    }
    std::vector<bool> checked(n, false);
    for (std::size_t i = 0; i < k; ++i) {
        checked[idx[i]] = true;
        if (result.raw_key[idx[i]] != result.alice_key[idx[i]]) ++d.check_errors;
    }
    d.check_bits = k;
    d.check_qber_sift_z = k == 0 ? 0.0 : static_cast<double>(d.check_errors) / static_cast<double>(k);
    d.info_key.reserve(n - k);
    for (std::size_t i = 0; i < n; ++i) {
        if (!checked[i]) d.info_key.push_back(result.raw_key[i]);
    }
    const bool abort = d.qber_ctrl_x > threshold_ctrl_x || d.check_qber_sift_z > threshold_sift_z;
    d.verdict = abort ? AbortVerdict::Abort : AbortVerdict::Continue;
    return d;
}

}  // namespace sqkd
