#include "sqkd/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "sqkd/rng.hpp"

namespace sqkd {

namespace {

constexpr double kUnitaryTol = 1e-10;

double unitarity_error(const Eigen::MatrixXcd& u) {
    const auto n = u.rows();
    return (u.adjoint() * u - Eigen::MatrixXcd::Identity(n, n)).cwiseAbs().maxCoeff();
}

/// CNOT from Bob's Z value onto ancilla bit `bit`.
Eigen::MatrixXcd z_copy(std::size_t d, unsigned bit) {
    const auto n = static_cast<Eigen::Index>(2 * d);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t b = 0; b < 2; ++b) {
        for (std::size_t e = 0; e < d; ++e) {
            std::size_t target = e;
            if (b == 1 && (e ^ (std::size_t{1} << bit)) < d) {
                target = e ^ (std::size_t{1} << bit);
            }
            u(static_cast<Eigen::Index>(b * d + target), static_cast<Eigen::Index>(b * d + e)) = 1.0;
        }
    }
    return u;
}

/// Same copy in the X basis: (H x I) CNOT (H x I).
Eigen::MatrixXcd x_copy(std::size_t d, unsigned bit) {
    const auto n = static_cast<Eigen::Index>(2 * d);
    Eigen::Matrix2cd h;
    const double s = std::numbers::sqrt2 / 2.0;
    h << s, s, s, -s;
    Eigen::MatrixXcd hh = Eigen::MatrixXcd::Zero(n, n);
    const auto di = static_cast<Eigen::Index>(d);
    for (Eigen::Index e = 0; e < di; ++e) {
        for (int r = 0; r < 2; ++r) {
            for (int c = 0; c < 2; ++c) {
                hh(r * di + e, c * di + e) = h(r, c);
            }
        }
    }
    return hh * z_copy(d, bit) * hh;
}

}  // namespace

AttackModel::AttackModel(Eigen::MatrixXcd u_forward, Eigen::MatrixXcd u_backward, Eigen::VectorXcd ancilla_init)
    : u_f_(std::move(u_forward)), u_r_(std::move(u_backward)), init_(std::move(ancilla_init)) {
    const auto n = 2 * init_.size();
    if (init_.size() < 1) {
        throw std::invalid_argument("AttackModel: ancilla dimension must be >= 1");
    }
    if (u_f_.rows() != n || u_f_.cols() != n || u_r_.rows() != n || u_r_.cols() != n) {
        throw std::invalid_argument("AttackModel: unitaries must be (2d x 2d) for ancilla dimension d");
    }
    if (!u_f_.allFinite() || !u_r_.allFinite() || unitarity_error(u_f_) > kUnitaryTol ||
        unitarity_error(u_r_) > kUnitaryTol) {
        throw std::invalid_argument("AttackModel: forward and backward operators must be unitary");
    }
    if (std::abs(init_.norm() - 1.0) > kUnitaryTol) {
        throw std::invalid_argument("AttackModel: ancilla_init must be normalized");
    }
}

AttackModel AttackModel::identity(std::size_t ancilla_dim) {
    const auto n = static_cast<Eigen::Index>(2 * ancilla_dim);
    return AttackModel{Eigen::MatrixXcd::Identity(n, n), Eigen::MatrixXcd::Identity(n, n),
                       ancilla_ground(ancilla_dim)};
}

Eigen::VectorXcd ancilla_ground(std::size_t d) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
    v(0) = 1.0;
    return v;
}

JointState apply_joint(const Eigen::MatrixXcd& u, const JointState& state) {
    if (u.rows() != static_cast<Eigen::Index>(state.size()) || u.cols() != u.rows()) {
        throw std::invalid_argument("apply_joint: dimension mismatch");
    }
    return JointState{state.ancilla_dim(), u * state.amps(), state.alice_bit()};
}

JointState evolve_round(const AttackModel& attack, AliceOp op) {
    JointState s = apply_joint(attack.forward(), JointState::product(make_plus(), attack.ancilla_init()));
    if (is_sift(op)) {
        s = apply_on_qubit(sift_operator(sift_bit(op)), s);
        s.set_alice_bit(sift_bit(op));
    }
    return apply_joint(attack.backward(), s);
}

ErrorRates induced_error_rates(const AttackModel& attack) {
    ErrorRates r;
    r.e_ctrl_x = born_probabilities(evolve_round(attack, AliceOp::Ctrl), Basis::Xplus).second;
    const double wrong0 = born_probabilities(evolve_round(attack, AliceOp::Sift0), Basis::Z).second;
    const double wrong1 = born_probabilities(evolve_round(attack, AliceOp::Sift1), Basis::Z).first;
    r.e_sift_z = 0.5 * (wrong0 + wrong1);
    return r;
}

std::pair<Eigen::MatrixXcd, Eigen::MatrixXcd> eve_conditional_states(const AttackModel& attack) {
    return {evolve_round(attack, AliceOp::Sift0).ancilla_density(),
            evolve_round(attack, AliceOp::Sift1).ancilla_density()};
}

double von_neumann_entropy_bits(const Eigen::MatrixXcd& rho) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    double s = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double p = es.eigenvalues()(i);
        if (p > 1e-300) {
            s -= p * std::log2(p);
        }
    }
    return s;
}

double trace_distance(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho1) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho0 - rho1, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double binary_entropy(double p) {
    if (p <= 0.0 || p >= 1.0) {
        return 0.0;
    }
    return -p * std::log2(p) - (1.0 - p) * std::log2(1.0 - p);
}

EveInformation eve_information(const Eigen::MatrixXcd& rho0, const Eigen::MatrixXcd& rho1) {
    EveInformation info;
    info.trace_distance = trace_distance(rho0, rho1);
    const Eigen::MatrixXcd avg = 0.5 * (rho0 + rho1);
    const double chi = von_neumann_entropy_bits(avg) - 0.5 * von_neumann_entropy_bits(rho0) -
                       0.5 * von_neumann_entropy_bits(rho1);
    info.holevo_bits = std::max(0.0, chi);
    return info;
}

EveInformation eve_information(const AttackModel& attack) {
    const auto [rho0, rho1] = eve_conditional_states(attack);
    return eve_information(rho0, rho1);
}

AttackOutcome assess(const AttackModel& attack) {
    const ErrorRates e = induced_error_rates(attack);
    const EveInformation info = eve_information(attack);
    return {e.e_ctrl_x, e.e_sift_z, info.trace_distance, info.holevo_bits};
}

ConstraintReport verify_no_error_constraints(const AttackModel& attack, double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("verify_no_error_constraints: tol must be > 0");
    }
    const std::size_t d = attack.ancilla_dim();
    const auto& chi = attack.ancilla_init();

    // chi_ij = <j| U_F |i>|chi>
    std::array<std::array<Eigen::VectorXcd, 2>, 2> fwd;
    for (int i = 0; i < 2; ++i) {
        const JointState out = apply_joint(attack.forward(), JointState::product(i == 0 ? make_zero() : make_one(), chi));
        for (int j = 0; j < 2; ++j) {
            fwd[i][j] = out.ancilla_branch(j);
        }
    }
    // chi_ijkl = <l| U_R |k> chi_ij
    auto backward_branch = [&](int k, const Eigen::VectorXcd& v, int l) {
        Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(2 * d));
        amps.segment(k == 0 ? 0 : static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)) = v;
        return apply_joint(attack.backward(), JointState{d, amps}).ancilla_branch(l);
    };
    std::array<Eigen::VectorXcd, 16> comp;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l) comp[8 * i + 4 * j + 2 * k + l] = backward_branch(k, fwd[i][j], l);
    auto at = [&](int i, int j, int k, int l) -> const Eigen::VectorXcd& { return comp[8 * i + 4 * j + 2 * k + l]; };

    ConstraintReport rep;
    rep.tol = tol;
    for (std::size_t n = 0; n < comp.size(); ++n) rep.component_norms[n] = comp[n].norm();

    const Eigen::VectorXcd zero = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(d));
    Eigen::VectorXcd ctrl = zero;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) ctrl += at(i, j, j, 0) - at(i, j, j, 1);
    rep.ctrl_residual = ctrl.norm();

    // SIFT(b) takes |j> to sum_k S_b[k][j] |k>; entries are +-1/sqrt2, so
    // sqrt2 * S_b gives the integer signs of the expanded final states.
    auto sift_error = [&](int bit) {
        const Eigen::Matrix2cd s = std::numbers::sqrt2 * sift_operator(bit).matrix();
        const int wrong = 1 - bit;
        Eigen::VectorXcd err = zero;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) err += s(k, j) * at(i, j, k, wrong);
        return err;
    };
    const Eigen::VectorXcd e0 = sift_error(0);
    const Eigen::VectorXcd e1 = sift_error(1);
    rep.sift0_residual = e0.norm();
    rep.sift1_residual = e1.norm();

    const Eigen::VectorXcd plain0 = JointState::product(make_zero(), chi).amps();
    const Eigen::VectorXcd plain1 = JointState::product(make_one(), chi).amps();
    rep.backward_only = (attack.forward() * plain0 - plain0).norm() <= tol &&
                        (attack.forward() * plain1 - plain1).norm() <= tol;
    const Eigen::VectorXcd b00 = backward_branch(0, chi, 0);
    const Eigen::VectorXcd b01 = backward_branch(0, chi, 1);
    const Eigen::VectorXcd b10 = backward_branch(1, chi, 0);
    const Eigen::VectorXcd b11 = backward_branch(1, chi, 1);
    rep.backward_flip_residual = std::sqrt(b01.squaredNorm() + b10.squaredNorm());
    rep.backward_equal_residual = (b00 - b11).norm();

    rep.trace_distance = eve_information(attack).trace_distance;
    rep.info_bound = rep.ctrl_residual + 0.5 * (rep.sift0_residual + rep.sift1_residual) +
                     (e0.squaredNorm() + e1.squaredNorm()) / 8.0;
    rep.within_tol = rep.ctrl_residual <= tol && rep.sift0_residual <= tol && rep.sift1_residual <= tol;
    const bool bound_ok = rep.trace_distance <= rep.info_bound + 1e-12;
    const bool tol_ok = !rep.within_tol || tol > 1.0 || rep.trace_distance <= info_bound_for_tol(tol) + 1e-12;
    rep.implication_holds = bound_ok && tol_ok;
    rep.sift_only_counterexample =
        rep.sift0_residual <= tol && rep.sift1_residual <= tol && rep.ctrl_residual > tol;
    return rep;
}

const std::vector<NamedAttack>& all_named_attacks() {
    static const std::vector<NamedAttack> kinds{
        NamedAttack::Identity,
        NamedAttack::ForwardZInterceptResend,
        NamedAttack::BackwardZInterceptResend,
        NamedAttack::BothZInterceptResend,
        NamedAttack::ForwardXInterceptResend,
    };
    return kinds;
}

std::string_view to_string(NamedAttack kind) {
    switch (kind) {
        case NamedAttack::Identity: return "identity";
        case NamedAttack::ForwardZInterceptResend: return "forward_z_intercept_resend";
        case NamedAttack::BackwardZInterceptResend: return "backward_z_intercept_resend";
        case NamedAttack::BothZInterceptResend: return "both_z_intercept_resend";
        case NamedAttack::ForwardXInterceptResend: return "forward_x_intercept_resend";
    }
    return "?";
}

std::optional<NamedAttack> parse_named_attack(std::string_view name) {
    for (NamedAttack k : all_named_attacks()) {
        if (to_string(k) == name) {
            return k;
        }
    }
    return std::nullopt;
}

AttackModel named_attack(NamedAttack kind, std::size_t ancilla_dim) {
    const std::size_t d = ancilla_dim;
    if (d < 2) {
        throw std::invalid_argument("named_attack: ancilla dimension must be >= 2");
    }
    if (kind == NamedAttack::BothZInterceptResend && d < 4) {
        throw std::invalid_argument("named_attack: both_z_intercept_resend needs ancilla dimension >= 4");
    }
    const auto n = static_cast<Eigen::Index>(2 * d);
    const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
    switch (kind) {
        case NamedAttack::Identity: return AttackModel{id, id, ancilla_ground(d)};
        case NamedAttack::ForwardZInterceptResend: return AttackModel{z_copy(d, 0), id, ancilla_ground(d)};
        case NamedAttack::BackwardZInterceptResend: return AttackModel{id, z_copy(d, d > 2 ? 1u : 0u), ancilla_ground(d)};
        case NamedAttack::BothZInterceptResend: return AttackModel{z_copy(d, 0), z_copy(d, 1), ancilla_ground(d)};
        case NamedAttack::ForwardXInterceptResend: return AttackModel{x_copy(d, 0), id, ancilla_ground(d)};
    }
    throw std::invalid_argument("named_attack: unknown kind");
}

Eigen::MatrixXcd hermitian_from_params(std::span<const double> theta, std::size_t n) {
    if (theta.size() != n * n) {
        throw std::invalid_argument("hermitian_from_params: expected n^2 parameters");
    }
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(ni, ni);
    std::size_t p = 0;
    for (Eigen::Index i = 0; i < ni; ++i) h(i, i) = theta[p++];
    for (Eigen::Index i = 0; i < ni; ++i) {
        for (Eigen::Index j = i + 1; j < ni; ++j) {
            h(i, j) = Complex{theta[p], theta[p + 1]};
            h(j, i) = std::conj(h(i, j));
            p += 2;
        }
    }
    return h;
}

Eigen::MatrixXcd unitary_from_params(std::span<const double> theta, std::size_t n) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hermitian_from_params(theta, n));
    Eigen::VectorXcd phases(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < phases.size(); ++i) {
        phases(i) = std::polar(1.0, es.eigenvalues()(i));
    }
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

AttackModel attack_from_params(std::span<const double> theta, std::size_t d) {
    const std::size_t m = generator_size(d);
    if (theta.size() != 2 * m) {
        throw std::invalid_argument("attack_from_params: expected 2 (2d)^2 parameters");
    }
    return AttackModel{unitary_from_params(theta.subspan(0, m), 2 * d),
                       unitary_from_params(theta.subspan(m, m), 2 * d), ancilla_ground(d)};
}

namespace {

Eigen::MatrixXcd random_unitary(std::size_t n, StreamRng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> theta(n * n);
    for (double& t : theta) t = normal(rng);
    return unitary_from_params(theta, n);
}

}  // namespace

AttackModel no_error_attack(std::size_t d, std::uint64_t seed, std::uint64_t index) {
    if (d < 2) throw std::invalid_argument("no_error_attack: ancilla dimension must be >= 2");
    StreamRng rng(seed, index, streams::kAttackFamily);
    const auto n = static_cast<Eigen::Index>(d);
    const double h = std::numbers::sqrt2 / 2.0;

    const Eigen::MatrixXcd v_plus = random_unitary(d, rng);
    const Eigen::MatrixXcd v_minus = random_unitary(d, rng);
    Eigen::MatrixXcd had(2, 2);
    had << h, h, h, -h;
    // X-controlled: |+><+| (x) V+ + |-><-| (x) V-, in the Bob-major layout.
    Eigen::MatrixXcd uf = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    for (int b = 0; b < 2; ++b) {
        for (int c = 0; c < 2; ++c) {
            uf.block(b * n, c * n, n, n) = had(b, 0) * had(c, 0) * v_plus + had(b, 1) * had(c, 1) * v_minus;
        }
    }

    // R = Q diag(1, U') Q^dagger with Q's first column the |+> ancilla branch.
    const Eigen::VectorXcd psi = v_plus.col(0);
    Eigen::MatrixXcd seed_basis = random_unitary(d, rng);
    seed_basis.col(0) = psi;
    const Eigen::MatrixXcd q = Eigen::HouseholderQR<Eigen::MatrixXcd>(seed_basis).householderQ();
    Eigen::MatrixXcd inner = Eigen::MatrixXcd::Identity(n, n);
    inner.bottomRightCorner(n - 1, n - 1) = random_unitary(d - 1, rng);
    const Eigen::MatrixXcd r = q * inner * q.adjoint();

    const Eigen::MatrixXcd w = random_unitary(d, rng);
    Eigen::MatrixXcd ur = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
    ur.topLeftCorner(n, n) = w;
    ur.bottomRightCorner(n, n) = w * r;
    return AttackModel(uf, ur, ancilla_ground(d));
}

}  // namespace sqkd
