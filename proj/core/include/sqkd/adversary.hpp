#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sqkd/protocol.hpp"
#include "sqkd/quantum.hpp"

namespace sqkd {

/// Eve's two-way attack: U_F acts on (Bob qubit, ancilla) on the way to Alice,
/// U_R on the way back. Both are 2d x 2d unitaries in the Bob-major layout of
/// JointState. The ancilla starts fresh in `ancilla_init` every round.
class AttackModel {
public:
    /// Throws std::invalid_argument on shape mismatch, non-unitary matrices
    /// (tolerance 1e-10) or a non-normalized ancilla.
    AttackModel(Eigen::MatrixXcd u_forward, Eigen::MatrixXcd u_backward, Eigen::VectorXcd ancilla_init);

    static AttackModel identity(std::size_t ancilla_dim);

    std::size_t ancilla_dim() const { return static_cast<std::size_t>(init_.size()); }
    const Eigen::MatrixXcd& forward() const { return u_f_; }
    const Eigen::MatrixXcd& backward() const { return u_r_; }
    const Eigen::VectorXcd& ancilla_init() const { return init_; }

private:
    Eigen::MatrixXcd u_f_;
    Eigen::MatrixXcd u_r_;
    Eigen::VectorXcd init_;
};

/// Basis vector e_0 of dimension d.
Eigen::VectorXcd ancilla_ground(std::size_t d);

/// U_R (A x I_E) U_F (|+> x |chi>), with A = I, S0 or S1.
JointState evolve_round(const AttackModel& attack, AliceOp op);

/// Same evolution applied to JointStates directly. Throws
/// std::invalid_argument when the dimensions disagree.
JointState apply_joint(const Eigen::MatrixXcd& u, const JointState& state);

struct ErrorRates {
    double e_ctrl_x = 0.0;  // P(|->) in CTRL rounds measured in X
    double e_sift_z = 0.0;  // mean over SIFT(0)/SIFT(1) of P(wrong Z outcome)
};

ErrorRates induced_error_rates(const AttackModel& attack);

/// Eve's reduced state for Alice's SIFT bit 0 and 1.
std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> eve_conditional_states(const AttackModel& attack);

struct EveInformation {
    double trace_distance = 0.0;
    double holevo_bits = 0.0;
};

double von_neumann_entropy_bits(const Eigen::MatrixXcd& rho);
double trace_distance(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho1);
double binary_entropy(double p);

/// Trace distance and Holevo quantity of the equiprobable ensemble {rho0, rho1}.
EveInformation eve_information(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho1);
EveInformation eve_information(const AttackModel& attack);

struct AttackOutcome {
    double e_ctrl_x = 0.0;
    double e_sift_z = 0.0;
    double eve_trace_distance = 0.0;
    double eve_holevo_bits = 0.0;
};

AttackOutcome assess(const AttackModel& attack);

/// Residuals of the no-error conditions, read off the sub-state decomposition
///   U_F |i>|chi> = sum_j |j> chi_ij,   U_R |k> chi_ij = sum_l |l> chi_ijkl.
struct ConstraintReport {
    double tol = 0.0;

    /// || sum_ij chi_ij j0 - chi_ij j1 ||; equals 2 sqrt(e_ctrl_x).
    double ctrl_residual = 0.0;
    /// Error-branch sums: the Bob=1 part after SIFT(0) and the Bob=0 part
    /// after SIFT(1), without the 1/2 prefactor.
    double sift0_residual = 0.0;
    double sift1_residual = 0.0;
    /// ||chi_ijkl|| indexed by 8i + 4j + 2k + l.
    std::array<double, 16> component_norms{};

    /// U_F leaves |b>|chi> unchanged for both b.
    bool backward_only = false;
    /// Backward channel alone: U_R |k>|chi> = sum_l |l> chi_kl.
    /// sqrt(||chi_01||^2 + ||chi_10||^2) and ||chi_00 - chi_11||.
    double backward_flip_residual = 0.0;
    double backward_equal_residual = 0.0;

    double trace_distance = 0.0;
    /// ||C|| + (||E0|| + ||E1||)/2 + (||E0||^2 + ||E1||^2)/8 >= trace distance.
    double info_bound = 0.0;

    bool within_tol = false;
    /// trace_distance <= info_bound, and within_tol => trace_distance <= 2.25 tol.
    bool implication_holds = false;
    /// SIFT-Z residuals vanish while the CTRL residual does not: zero SIFT-Z
    /// error alone does not force the CTRL condition.
    bool sift_only_counterexample = false;
};

/// Linear bound on Eve's trace distance when every residual is <= tol (tol <= 1).
inline double info_bound_for_tol(double tol) { return 2.25 * tol; }

ConstraintReport verify_no_error_constraints(const AttackModel& attack, double tol);

enum class NamedAttack {
    Identity,
    ForwardZInterceptResend,
    BackwardZInterceptResend,
    BothZInterceptResend,
    ForwardXInterceptResend,
};

const std::vector<NamedAttack>& all_named_attacks();
std::string_view to_string(NamedAttack kind);
std::optional<NamedAttack> parse_named_attack(std::string_view name);

/// Measure-and-resend attacks as unitary dilations: the measured value is
/// copied (CNOT) into an ancilla qubit register. The forward copy goes to
/// ancilla bit 0, the backward copy to ancilla bit 1. Requires d >= 2, and
/// d >= 4 for BothZInterceptResend.
AttackModel named_attack(NamedAttack kind, std::size_t ancilla_dim = 4);

/// Hermitian generator from n^2 reals: n diagonal entries, then the real and
/// imaginary parts of each upper off-diagonal entry in row-major order.
Eigen::MatrixXcd hermitian_from_params(std::span<const double> theta, std::size_t n);

/// exp(iH) via the Hermitian eigendecomposition; exactly unitary up to rounding.
Eigen::MatrixXcd unitary_from_params(std::span<const double> theta, std::size_t n);

/// Number of reals for one channel: (2d)^2.
inline std::size_t generator_size(std::size_t d) { return 4 * d * d; }

/// theta = [forward generator | backward generator]; ancilla starts in e_0.
AttackModel attack_from_params(std::span<const double> theta, std::size_t d);

/// Random attack with every no-error residual zero by construction. U_F
/// entangles the ancilla with Bob's X value only; U_R applies W on the |0>
/// branch and W R on the |1> branch, where R fixes the ancilla state U_F leaves
/// behind for |+>. Drawn from the (seed, index) stream.
AttackModel no_error_attack(std::size_t d, std::uint64_t seed, std::uint64_t index);

struct OptimizerConfig {
    unsigned starts = 32;
    unsigned ascent_iterations = 90;  // split evenly over the penalty schedule
    unsigned restore_iterations = 40;
    std::vector<double> penalty_schedule{5.0, 50.0, 500.0};
    double fd_step = 1e-6;
    double init_scale = 1.0;
    std::uint64_t seed = 1;
    /// A point is feasible when max(e_ctrl_x, e_sift_z) <= epsilon + slack.
    double feasibility_slack = 1e-14;
    unsigned threads = 1;
};

void validate(const OptimizerConfig& cfg);

struct StartSummary {
    bool warm = false;
    bool feasible = false;
    unsigned iterations = 0;
    AttackOutcome outcome;
};

struct SearchResult {
    double epsilon = 0.0;
    std::size_t ancilla_dim = 0;
    double info = 0.0;  // best feasible trace distance
    AttackOutcome best;
    std::vector<double> best_theta;  // empty when the identity baseline wins
    std::vector<StartSummary> starts;
    unsigned feasible_starts = 0;
    unsigned iterations = 0;  // ascent + restoration iterations over all starts
    std::uint64_t evaluations = 0;
    bool diverged = false;  // a non-finite objective was seen

    AttackModel best_attack() const;
};

/// Multi-start penalty ascent on Eve's trace distance subject to
/// max(e_ctrl_x, e_sift_z) <= epsilon, each start finished by a
/// Levenberg-Marquardt feasibility restoration. Only restored, feasible points
/// (plus feasible warm starts and the identity baseline) are reported.
/// Deterministic for a given config. Throws std::invalid_argument for
/// epsilon outside [0, 0.5] or d < 2.
SearchResult max_info_at_error_budget(double epsilon, std::size_t d, const OptimizerConfig& cfg,
                                      std::span<const std::vector<double>> warm_starts = {});

/// Runs the epsilons in ascending order, warm-starting each with the best
/// point of the previous one. Results are returned in the caller's order.
std::vector<SearchResult> robustness_sweep(std::span<const double> epsilons, std::size_t d,
                                           const OptimizerConfig& cfg);

}  // namespace sqkd
