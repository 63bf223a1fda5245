#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <string>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "cli/commands.hpp"
#include "cli/config.hpp"

using namespace sqkd;
using namespace sqkd::cli;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = SQKD_SCENARIO_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

/// Fresh scratch directory under the system temp dir, removed on destruction.
struct Scratch {
    fs::path dir;

    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("sqkd_test_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    fs::path write(const std::string& file, const std::string& text) const {
        std::ofstream(dir / file) << text;
        return dir / file;
    }
};

/// Bundled scenario text with `key = value` lines replaced or appended.
std::string scenario_with(const std::string& name, const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::istringstream in(slurp(kScenarios / name));
    std::string out;
    for (std::string line; std::getline(in, line);) {
        bool replaced = false;
        for (const auto& [k, v] : overrides) replaced = replaced || line.rfind(k + " ", 0) == 0;
        if (!replaced) out += line + "\n";
    }
    for (const auto& [k, v] : overrides) out += k + " = " + v + "\n";
    return out;
}

ConfigError config_error(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e;
    }
    ADD_FAILURE() << "no ConfigError for: " << text;
    return ConfigError("", "");
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
    const ScenarioConfig a;
    const std::string text = to_config_text(a);
    const ScenarioConfig b = parse_config(text);
    EXPECT_EQ(to_config_text(b), text);
}

TEST(Config, BundledScenariosParseAndRoundTrip) {
    for (const auto& entry : fs::directory_iterator(kScenarios)) {
        const ScenarioConfig a = load_config(entry.path());
        const std::string text = to_config_text(a);
        EXPECT_EQ(to_config_text(parse_config(text)), text) << entry.path();
    }
}

TEST(Config, ParsesValuesAndComments) {
    const ScenarioConfig c = parse_config(
        "# comment\n"
        "mean_photons = 0.2   # trailing\n"
        "n_rounds = 1e7\n"
        "attack = backward_z_intercept_resend\n"
        "sweep_epsilons = 0, 0.1\n");
    EXPECT_EQ(c.phys.source.mean_photons, 0.2);
    EXPECT_EQ(c.n_rounds, 10'000'000u);
    EXPECT_EQ(c.attack, AttackChoice::Named);
    EXPECT_EQ(c.named, NamedAttack::BackwardZInterceptResend);
    EXPECT_EQ(c.sweep_epsilons, (std::vector<double>{0.0, 0.1}));
}

TEST(Config, FormatDoubleRoundTrips) {
    for (double v : {0.1, 0.975586, 1e-300, 3e-6, 1.0 / 3.0}) {
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(0.39), "0.39");
}

TEST(Config, UnknownKeyIsNamed) {
    const ConfigError e = config_error("mean_photon = 0.1\n");
    EXPECT_EQ(e.key(), "mean_photon");
    EXPECT_NE(std::string(e.what()).find("mean_photon"), std::string::npos);
}

TEST(Config, DuplicateKeyIsRejected) {
    EXPECT_EQ(config_error("seed = 1\nseed = 2\n").key(), "seed");
}

TEST(Config, OutOfRangeValuesNameTheKey) {
    EXPECT_EQ(config_error("visibility = 1.2\n").key(), "visibility");
    EXPECT_EQ(config_error("mean_photons = -1\n").key(), "mean_photons");
    EXPECT_EQ(config_error("detector_efficiency = abc\n").key(), "detector_efficiency");
    EXPECT_EQ(config_error("attack = eavesdrop\n").key(), "attack");
    EXPECT_EQ(config_error("attack = generator\nancilla_dim = 2\nattack_theta = 1, 2\n").key(), "attack_theta");
    EXPECT_EQ(config_error("sweep_epsilons = 0.6\n").key(), "sweep_epsilons");
    EXPECT_EQ(config_error("calibrate_target_contrast = 0\n").key(), "calibrate_target_contrast");
}

TEST(Config, MalformedLine) {
    EXPECT_THROW(parse_config("just words\n"), ConfigError);
}

TEST(Config, GeneratorAttackBuildsModel) {
    std::string theta;
    for (std::size_t i = 0; i < 2 * generator_size(2); ++i) theta += (i ? ", " : "") + std::to_string(0.01 * i);
    const ScenarioConfig c = parse_config("attack = generator\nancilla_dim = 2\nattack_theta = " + theta + "\n");
    const auto model = c.attack_model();
    ASSERT_TRUE(model);
    EXPECT_EQ(model->ancilla_dim(), 2u);
}

TEST(Commands, SimulateIdealWritesReports) {
    Scratch s("simulate_ideal");
    const fs::path cfg = s.write("c.cfg", scenario_with("ideal.cfg", {{"n_rounds", "200000"}, {"interval_rounds", "50000"}}));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate({cfg, {}, s.dir, 1, {}, {}}, out, err), kOk) << err.str();
    EXPECT_TRUE(fs::exists(s.dir / "report.txt"));
    EXPECT_TRUE(fs::exists(s.dir / "report.json"));
    const std::string csv = slurp(s.dir / "intervals.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(out.str().find("qber_sift_z 0.000000  qber_ctrl_x 0.000000"), std::string::npos);
}

TEST(Commands, SimulateIsIndependentOfThreads) {
    Scratch a("threads_1");
    Scratch b("threads_8");
    const fs::path cfg = a.write("c.cfg", scenario_with("paper.cfg", {{"n_rounds", "300000"}, {"interval_rounds", "70000"}}));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate({cfg, {}, a.dir / "out", 1, {}, {}}, out, err), kOk) << err.str();
    ASSERT_EQ(cmd_simulate({cfg, {}, b.dir, 8, {}, {}}, out, err), kOk) << err.str();
    for (const char* f : {"report.txt", "report.json", "intervals.csv"}) {
        EXPECT_EQ(slurp(a.dir / "out" / f), slurp(b.dir / f)) << f;
    }
}

TEST(Commands, SeedOverrideChangesOutput) {
    Scratch s("seed");
    const fs::path cfg = s.write("c.cfg", "n_rounds = 50000\n");
    std::ostringstream out1, out2, err;
    ASSERT_EQ(cmd_simulate({cfg, 5u, s.dir, 1, {}, {}}, out1, err), kOk);
    ASSERT_EQ(cmd_simulate({cfg, 6u, s.dir, 1, {}, {}}, out2, err), kOk);
    EXPECT_NE(out1.str(), out2.str());
}

TEST(Commands, BadConfigExitsTwo) {
    Scratch s("bad");
    const fs::path cfg = s.write("c.cfg", "visibility = 2\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_simulate({cfg, {}, s.dir, 1, {}, {}}, out, err), kConfigError);
    EXPECT_NE(err.str().find("visibility"), std::string::npos);
    EXPECT_EQ(cmd_simulate({s.dir / "missing.cfg", {}, s.dir, 1, {}, {}}, out, err), kConfigError);
}

TEST(Commands, AttackEvalNeedsAttack) {
    Scratch s("attack_none");
    const fs::path cfg = s.write("c.cfg", "n_rounds = 1000\n");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_attack_eval({cfg, {}, s.dir, 1, {}, {}}, out, err), kConfigError);
}

TEST(Commands, AttackEvalBackwardZ) {
    Scratch s("attack_bz");
    const fs::path cfg = s.write("c.cfg", scenario_with("attack_backward_z.cfg", {{"n_rounds", "100000"}}));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_attack_eval({cfg, {}, s.dir, 2, {}, {}}, out, err), kOk) << err.str();
    const std::string report = slurp(s.dir / "report.json");
    EXPECT_NE(report.find("\"sift_only_counterexample\": true"), std::string::npos);
}

TEST(Commands, SweepRejectsBadEpsilon) {
    Scratch s("sweep_bad");
    std::ostringstream out, err;
    RunOptions o{{}, {}, s.dir, 1, std::vector<double>{0.7}, {}};
    EXPECT_EQ(cmd_robustness_sweep(o, out, err), kConfigError);
}

TEST(Commands, CalibrateTargetZeroExitsTwo) {
    Scratch s("cal_zero");
    std::ostringstream out, err;
    EXPECT_EQ(cmd_calibrate({{}, {}, s.dir, 1, {}, 0.0}, out, err), kConfigError);
}

TEST(Commands, CalibrateUnreachableTargetReportsBound) {
    Scratch s("cal_unreachable");
    const fs::path cfg = s.write("c.cfg", scenario_with("paper.cfg", {{"calibrate_rounds", "200000"}, {"dark_prob_per_gate", "1e-3"}}));
    std::ostringstream out, err;
    EXPECT_EQ(cmd_calibrate({cfg, {}, s.dir, 1, {}, 0.99}, out, err), kConfigError);
    EXPECT_NE(err.str().find("achievable contrast"), std::string::npos);
}

TEST(Commands, CalibrateLosslessToOne) {
    Scratch s("cal_one");
    const fs::path cfg = s.write("c.cfg", scenario_with("ideal.cfg", {{"calibrate_rounds", "100000"}}));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_calibrate({cfg, {}, s.dir, 1, {}, 1.0}, out, err), kOk) << err.str();
    const ScenarioConfig c = load_config(s.dir / "calibrated.cfg");
    EXPECT_EQ(c.phys.channel.visibility, 1.0);
}

TEST(Commands, CalibratedConfigIsAccepted) {
    Scratch s("cal_mid");
    const fs::path cfg = s.write("c.cfg", scenario_with("ideal.cfg", {{"calibrate_rounds", "200000"}, {"n_rounds", "100000"}}));
    std::ostringstream out, err;
    ASSERT_EQ(cmd_calibrate({cfg, {}, s.dir, 1, {}, 0.9}, out, err), kOk) << err.str();
    const ScenarioConfig c = load_config(s.dir / "calibrated.cfg");
    EXPECT_NEAR(c.phys.channel.visibility, 0.9, 0.01);
    RunOptions o{s.dir / "calibrated.cfg", {}, s.dir / "sim", 1, {}, {}};
    EXPECT_EQ(cmd_simulate(o, out, err), kOk) << err.str();
}

TEST(Binary, ExitCodes) {
    const std::string bin = SQKD_BINARY;
    const auto run = [&](const std::string& args) {
        const int status = std::system((bin + " " + args + " > /dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    EXPECT_EQ(run("--help"), 0);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("simulate --no-such-flag"), 2);
    EXPECT_EQ(run("simulate --threads 0"), 2);
    EXPECT_EQ(run("calibrate --target 0"), 2);
}
