#include "cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

namespace sqkd::cli {

namespace {

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, std::string_view v) {
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw ConfigError(key, key + ": expected a finite number, got '" + std::string(v) + "'");
    }
    return out;
}

std::uint64_t parse_u64(const std::string& key, std::string_view v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec == std::errc() && ptr == v.data() + v.size()) return out;
    // Accept integral values written in exponent form, e.g. 1e7.
    const double d = parse_double(key, v);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
        throw ConfigError(key, key + ": expected a non-negative integer, got '" + std::string(v) + "'");
    }
    return static_cast<std::uint64_t>(d);
}

std::vector<double> parse_list(const std::string& key, std::string_view v) {
    std::vector<double> out;
    if (trim(v).empty()) return out;
    std::size_t pos = 0;
    while (pos <= v.size()) {
        const auto comma = v.find(',', pos);
        const auto item = trim(v.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos));
        out.push_back(parse_double(key, item));
        if (comma == std::string_view::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) out += ",";
        out += format_double(v[i]);
    }
    return out;
}

struct Key {
    const char* name;
    std::function<void(ScenarioConfig&, const std::string&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class Field>
Key real(const char* name, Field field) {
    return {name,
            [field](ScenarioConfig& c, const std::string& k, std::string_view v) { field(c) = parse_double(k, v); },
            [field](const ScenarioConfig& c) { return format_double(field(const_cast<ScenarioConfig&>(c))); }};
}

template <class T, class Field>
Key integer(const char* name, Field field) {
    return {name,
            [field](ScenarioConfig& c, const std::string& k, std::string_view v) {
                const std::uint64_t x = parse_u64(k, v);
                if (x > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
                    throw ConfigError(k, k + ": value too large");
                }
                field(c) = static_cast<T>(x);
            },
            [field](const ScenarioConfig& c) { return std::to_string(field(const_cast<ScenarioConfig&>(c))); }};
}

const std::vector<Key>& keys() {
    static const std::vector<Key> table = [] {
        std::vector<Key> k;
        k.push_back(real("clock_hz", [](ScenarioConfig& c) -> double& { return c.phys.source.clock_hz; }));
        k.push_back(real("mean_photons", [](ScenarioConfig& c) -> double& { return c.phys.source.mean_photons; }));
        k.push_back(real("pulse_width_s", [](ScenarioConfig& c) -> double& { return c.phys.source.pulse_width_s; }));
        k.push_back(real("amzi_delay_s", [](ScenarioConfig& c) -> double& { return c.phys.source.amzi_delay_s; }));
        k.push_back({"photon_source",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) {
                         if (v == "poisson") c.phys.source.photon_source = PhotonSource::Poisson;
                         else if (v == "single") c.phys.source.photon_source = PhotonSource::SinglePhoton;
                         else throw ConfigError(key, key + ": expected 'poisson' or 'single'");
                     },
                     [](const ScenarioConfig& c) {
                         return std::string(c.phys.source.photon_source == PhotonSource::Poisson ? "poisson" : "single");
                     }});
        k.push_back(real("detector_efficiency", [](ScenarioConfig& c) -> double& { return c.phys.detector.efficiency; }));
        k.push_back(real("dark_prob_per_gate",
                         [](ScenarioConfig& c) -> double& { return c.phys.detector.dark_prob_per_gate; }));
        k.push_back(real("gate_width_s", [](ScenarioConfig& c) -> double& { return c.phys.detector.gate_width_s; }));
        k.push_back(real("dead_time_s", [](ScenarioConfig& c) -> double& { return c.phys.detector.dead_time_s; }));
        k.push_back(real("circulator_loss_db",
                         [](ScenarioConfig& c) -> double& { return c.phys.channel.circulator_loss_db; }));
        k.push_back(real("channel_loss_db", [](ScenarioConfig& c) -> double& { return c.phys.channel.channel_loss_db; }));
        k.push_back(real("visibility", [](ScenarioConfig& c) -> double& { return c.phys.channel.visibility; }));
        k.push_back({"modulator_model",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) {
                         if (v == "table") c.phys.modulators.model = ModulatorModel::Table;
                         else if (v == "linear") c.phys.modulators.model = ModulatorModel::Linear;
                         else throw ConfigError(key, key + ": expected 'table' or 'linear'");
                     },
                     [](const ScenarioConfig& c) {
                         return std::string(c.phys.modulators.model == ModulatorModel::Table ? "table" : "linear");
                     }});
        k.push_back(real("bob_pm1_v_pi_v", [](ScenarioConfig& c) -> double& { return c.phys.modulators.pm1.v_pi; }));
        k.push_back(real("bob_pm1_voltage_v", [](ScenarioConfig& c) -> double& { return c.phys.modulators.pm1_voltage; }));
        k.push_back(real("alice_v_pi_v", [](ScenarioConfig& c) -> double& { return c.phys.modulators.alice.v_pi; }));
        k.push_back(integer<int>("alice_passes", [](ScenarioConfig& c) -> int& { return c.phys.modulators.alice.passes; }));
        k.push_back(real("alice_sift0_voltage_v",
                         [](ScenarioConfig& c) -> double& { return c.phys.modulators.alice_sift0_voltage; }));
        k.push_back(real("alice_sift1_voltage_v",
                         [](ScenarioConfig& c) -> double& { return c.phys.modulators.alice_sift1_voltage; }));
        k.push_back(real("bob_pm2_v_pi_v", [](ScenarioConfig& c) -> double& { return c.phys.modulators.bob.v_pi; }));
        k.push_back(real("bob_xplus_voltage_v",
                         [](ScenarioConfig& c) -> double& { return c.phys.modulators.bob_xplus_voltage; }));
        k.push_back(real("bob_xminus_voltage_v",
                         [](ScenarioConfig& c) -> double& { return c.phys.modulators.bob_xminus_voltage; }));
        k.push_back(real("p_ctrl", [](ScenarioConfig& c) -> double& { return c.rounds.p_ctrl; }));
        k.push_back(real("p_sift0_given_sift", [](ScenarioConfig& c) -> double& { return c.rounds.p_sift0_given_sift; }));
        k.push_back(real("p_basis_z", [](ScenarioConfig& c) -> double& { return c.rounds.p_basis_z; }));
        k.push_back(real("p_xplus_given_x", [](ScenarioConfig& c) -> double& { return c.rounds.p_xplus_given_x; }));
        k.push_back(integer<std::uint64_t>("n_rounds", [](ScenarioConfig& c) -> std::uint64_t& { return c.n_rounds; }));
        k.push_back(integer<std::uint64_t>("seed", [](ScenarioConfig& c) -> std::uint64_t& { return c.seed; }));
        k.push_back(integer<std::uint64_t>("interval_rounds",
                                           [](ScenarioConfig& c) -> std::uint64_t& { return c.interval_rounds; }));
        k.push_back(real("abort_threshold_ctrl_x", [](ScenarioConfig& c) -> double& { return c.abort_threshold_ctrl_x; }));
        k.push_back(real("abort_threshold_sift_z", [](ScenarioConfig& c) -> double& { return c.abort_threshold_sift_z; }));
        k.push_back(real("check_fraction", [](ScenarioConfig& c) -> double& { return c.check_fraction; }));
        k.push_back({"attack",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) {
                         if (v == "none") {
                             c.attack = AttackChoice::None;
                         } else if (v == "generator") {
                             c.attack = AttackChoice::Generator;
                         } else if (auto n = parse_named_attack(v)) {
                             c.attack = AttackChoice::Named;
                             c.named = *n;
                         } else {
                             std::string valid = "none, generator";
                             for (NamedAttack a : all_named_attacks()) valid += ", " + std::string(to_string(a));
                             throw ConfigError(key, key + ": unknown attack '" + std::string(v) + "' (valid: " + valid + ")");
                         }
                     },
                     [](const ScenarioConfig& c) { return attack_name(c); }});
        k.push_back({"attack_theta",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) { c.attack_theta = parse_list(key, v); },
                     [](const ScenarioConfig& c) { return format_list(c.attack_theta); }});
        k.push_back(integer<std::size_t>("ancilla_dim", [](ScenarioConfig& c) -> std::size_t& { return c.ancilla_dim; }));
        k.push_back(integer<unsigned>("optimizer_starts", [](ScenarioConfig& c) -> unsigned& { return c.optimizer.starts; }));
        k.push_back(integer<unsigned>("optimizer_ascent_iterations",
                                      [](ScenarioConfig& c) -> unsigned& { return c.optimizer.ascent_iterations; }));
        k.push_back(integer<unsigned>("optimizer_restore_iterations",
                                      [](ScenarioConfig& c) -> unsigned& { return c.optimizer.restore_iterations; }));
        k.push_back({"optimizer_penalties",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) {
                         c.optimizer.penalty_schedule = parse_list(key, v);
                     },
                     [](const ScenarioConfig& c) { return format_list(c.optimizer.penalty_schedule); }});
        k.push_back(real("optimizer_fd_step", [](ScenarioConfig& c) -> double& { return c.optimizer.fd_step; }));
        k.push_back(real("optimizer_init_scale", [](ScenarioConfig& c) -> double& { return c.optimizer.init_scale; }));
        k.push_back(integer<std::uint64_t>("optimizer_seed",
                                           [](ScenarioConfig& c) -> std::uint64_t& { return c.optimizer.seed; }));
        k.push_back({"sweep_epsilons",
                     [](ScenarioConfig& c, const std::string& key, std::string_view v) { c.sweep_epsilons = parse_list(key, v); },
                     [](const ScenarioConfig& c) { return format_list(c.sweep_epsilons); }});
        k.push_back(real("calibrate_target_contrast",
                         [](ScenarioConfig& c) -> double& { return c.calibrate_target_contrast; }));
        k.push_back(integer<std::uint64_t>("calibrate_rounds",
                                           [](ScenarioConfig& c) -> std::uint64_t& { return c.calibrate_rounds; }));
        k.push_back(real("reference_raw_key_rate_bps",
                         [](ScenarioConfig& c) -> double& { return c.reference_raw_key_rate_bps; }));
        return k;
    }();
    return table;
}

void require(bool ok, const char* key, const std::string& message) {
    if (!ok) throw ConfigError(key, std::string(key) + " " + message);
}

bool unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string attack_name(const ScenarioConfig& cfg) {
    switch (cfg.attack) {
        case AttackChoice::None: return "none";
        case AttackChoice::Generator: return "generator";
        case AttackChoice::Named: return std::string(to_string(cfg.named));
    }
    return "none";
}

std::optional<AttackModel> ScenarioConfig::attack_model() const {
    switch (attack) {
        case AttackChoice::None: return std::nullopt;
        case AttackChoice::Named: return named_attack(named, ancilla_dim);
        case AttackChoice::Generator: return attack_from_params(attack_theta, ancilla_dim);
    }
    return std::nullopt;
}

void validate(const ScenarioConfig& c) {
    const auto& s = c.phys.source;
    require(s.clock_hz > 0.0, "clock_hz", "must be > 0");
    require(s.mean_photons > 0.0, "mean_photons", "must be > 0");
    require(s.pulse_width_s >= 0.0, "pulse_width_s", "must be >= 0");
    require(s.amzi_delay_s >= 0.0 && s.amzi_delay_s < s.period_s(), "amzi_delay_s",
            "must be >= 0 and shorter than the clock period");
    const auto& d = c.phys.detector;
    require(unit_interval(d.efficiency), "detector_efficiency", "must be in [0, 1]");
    require(unit_interval(d.dark_prob_per_gate), "dark_prob_per_gate", "must be in [0, 1]");
    require(d.gate_width_s >= 0.0, "gate_width_s", "must be >= 0");
    require(d.dead_time_s >= 0.0, "dead_time_s", "must be >= 0");
    require(c.phys.channel.circulator_loss_db >= 0.0, "circulator_loss_db", "must be >= 0");
    require(c.phys.channel.channel_loss_db >= 0.0, "channel_loss_db", "must be >= 0");
    require(unit_interval(c.phys.channel.visibility), "visibility", "must be in [0, 1]");
    const auto& m = c.phys.modulators;
    require(m.pm1.v_pi > 0.0, "bob_pm1_v_pi_v", "must be > 0");
    require(m.alice.v_pi > 0.0, "alice_v_pi_v", "must be > 0");
    require(m.alice.passes == 1 || m.alice.passes == 2, "alice_passes", "must be 1 or 2");
    require(m.bob.v_pi > 0.0, "bob_pm2_v_pi_v", "must be > 0");
    require(unit_interval(c.rounds.p_ctrl), "p_ctrl", "must be in [0, 1]");
    require(unit_interval(c.rounds.p_sift0_given_sift), "p_sift0_given_sift", "must be in [0, 1]");
    require(unit_interval(c.rounds.p_basis_z), "p_basis_z", "must be in [0, 1]");
    require(unit_interval(c.rounds.p_xplus_given_x), "p_xplus_given_x", "must be in [0, 1]");
    require(unit_interval(c.abort_threshold_ctrl_x), "abort_threshold_ctrl_x", "must be in [0, 1]");
    require(unit_interval(c.abort_threshold_sift_z), "abort_threshold_sift_z", "must be in [0, 1]");
    require(unit_interval(c.check_fraction), "check_fraction", "must be in [0, 1]");
    require(c.ancilla_dim >= 2, "ancilla_dim", "must be >= 2");
    if (c.attack == AttackChoice::Named && c.named == NamedAttack::BothZInterceptResend) {
        require(c.ancilla_dim >= 4, "ancilla_dim", "must be >= 4 for both_z_intercept_resend");
    }
    if (c.attack == AttackChoice::Generator) {
        require(c.attack_theta.size() == 2 * generator_size(c.ancilla_dim), "attack_theta",
                "must hold 2 (2 ancilla_dim)^2 = " + std::to_string(2 * generator_size(c.ancilla_dim)) + " values");
    }
    require(c.optimizer.starts >= 1, "optimizer_starts", "must be >= 1");
    require(c.optimizer.fd_step > 0.0, "optimizer_fd_step", "must be > 0");
    require(c.optimizer.init_scale > 0.0, "optimizer_init_scale", "must be > 0");
    require(!c.optimizer.penalty_schedule.empty(), "optimizer_penalties", "must not be empty");
    for (double mu : c.optimizer.penalty_schedule) require(mu > 0.0, "optimizer_penalties", "must all be > 0");
    for (double e : c.sweep_epsilons) require(e >= 0.0 && e <= 0.5, "sweep_epsilons", "must all be in [0, 0.5]");
    require(c.calibrate_target_contrast > 0.0 && c.calibrate_target_contrast <= 1.0, "calibrate_target_contrast",
            "must be in (0, 1]");
    require(c.calibrate_rounds >= 1, "calibrate_rounds", "must be >= 1");
    require(c.reference_raw_key_rate_bps > 0.0, "reference_raw_key_rate_bps", "must be > 0");

    // Cross-field checks owned by the core (modulator tables and the like).
    try {
        sqkd::validate(c.phys);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
}

ScenarioConfig parse_config(std::string_view text) {
    ScenarioConfig cfg;
    std::set<std::string, std::less<>> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ConfigError("", "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        const std::string key(trim(line.substr(0, eq)));
        const auto value = trim(line.substr(eq + 1));
        const auto& table = keys();
        const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return key == k.name; });
        if (it == table.end()) throw ConfigError(key, "unknown config key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(key, "duplicate config key '" + key + "'");
        it->set(cfg, key, value);
    }
    validate(cfg);
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("", "cannot read config file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string to_config_text(const ScenarioConfig& cfg) {
    std::string out;
    for (const Key& k : keys()) {
        out += k.name;
        out += " = ";
        out += k.get(cfg);
        out += '\n';
    }
    return out;
}

}  // namespace sqkd::cli
