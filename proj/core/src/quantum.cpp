#include "sqkd/quantum.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sqkd {

const char* to_string(Basis b) {
    switch (b) {
        case Basis::Z: return "Z";
        case Basis::Xplus: return "X+";
        case Basis::Xminus: return "X-";
    }
    return "?";
}

QubitState make_zero() { return {{1.0, 0.0}, {0.0, 0.0}}; }
QubitState make_one() { return {{0.0, 0.0}, {1.0, 0.0}}; }

QubitState make_plus() {
    const double h = std::numbers::sqrt2 / 2.0;
    return {{h, 0.0}, {h, 0.0}};
}

QubitState make_minus() {
    const double h = std::numbers::sqrt2 / 2.0;
    return {{h, 0.0}, {-h, 0.0}};
}

QubitState make_plus_equatorial() { return {{0.5, 0.5}, {0.5, -0.5}}; }

Complex inner(const QubitState& bra, const QubitState& ket) {
    return std::conj(bra.a0) * ket.a0 + std::conj(bra.a1) * ket.a1;
}

QubitState Operator2::operator*(const QubitState& s) const {
    return {m_(0, 0) * s.a0 + m_(0, 1) * s.a1, m_(1, 0) * s.a0 + m_(1, 1) * s.a1};
}

double Operator2::unitarity_error() const {
    return (m_.adjoint() * m_ - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

Operator2 ry(double delta) {
    if (!std::isfinite(delta)) {
        throw std::invalid_argument("ry: rotation angle must be finite");
    }
    const double c = std::cos(delta / 2.0);
    const double s = std::sin(delta / 2.0);
    Eigen::Matrix2cd m;
    m << c, -s, s, c;
    return Operator2{m};
}

Operator2 sift_operator(int bit) {
    if (bit != 0 && bit != 1) {
        throw std::invalid_argument("sift_operator: bit must be 0 or 1");
    }
    return ry(bit == 0 ? -std::numbers::pi / 2.0 : std::numbers::pi / 2.0);
}

JointState::JointState(std::size_t ancilla_dim, Eigen::VectorXcd amps, std::optional<int> alice_bit)
    : dim_e_(ancilla_dim), amps_(std::move(amps)), alice_bit_(alice_bit) {
    if (dim_e_ < 1) {
        throw std::invalid_argument("JointState: ancilla dimension must be >= 1");
    }
    if (static_cast<std::size_t>(amps_.size()) != 2 * dim_e_) {
        throw std::invalid_argument("JointState: amplitude vector length must be 2 * ancilla_dim");
    }
}

JointState JointState::product(const QubitState& bob, const Eigen::VectorXcd& ancilla) {
    const auto d = static_cast<std::size_t>(ancilla.size());
    Eigen::VectorXcd amps(2 * d);
    amps.head(static_cast<Eigen::Index>(d)) = bob.a0 * ancilla;
    amps.tail(static_cast<Eigen::Index>(d)) = bob.a1 * ancilla;
    return JointState{d, std::move(amps)};
}

Eigen::VectorXcd JointState::ancilla_branch(int bob) const {
    const auto d = static_cast<Eigen::Index>(dim_e_);
    return amps_.segment(bob == 0 ? 0 : d, d);
}

Eigen::Matrix2cd JointState::bob_density() const {
    const Eigen::VectorXcd b0 = ancilla_branch(0);
    const Eigen::VectorXcd b1 = ancilla_branch(1);
    Eigen::Matrix2cd rho;
    rho(0, 0) = b0.squaredNorm();
    rho(1, 1) = b1.squaredNorm();
    rho(0, 1) = b1.dot(b0);  // <b1|b0> = sum conj(b1) b0
    rho(1, 0) = std::conj(rho(0, 1));
    return rho;
}

Eigen::MatrixXcd JointState::ancilla_density() const {
    const Eigen::VectorXcd b0 = ancilla_branch(0);
    const Eigen::VectorXcd b1 = ancilla_branch(1);
    return b0 * b0.adjoint() + b1 * b1.adjoint();
}

JointState apply_on_qubit(const Operator2& op, const JointState& state) {
    const auto d = static_cast<Eigen::Index>(state.ancilla_dim());
    if (state.amps().size() != 2 * d) {
        throw std::invalid_argument("apply_on_qubit: dimension mismatch");
    }
    const Eigen::VectorXcd b0 = state.ancilla_branch(0);
    const Eigen::VectorXcd b1 = state.ancilla_branch(1);
    Eigen::VectorXcd out(2 * d);
    out.head(d) = op(0, 0) * b0 + op(0, 1) * b1;
    out.tail(d) = op(1, 0) * b0 + op(1, 1) * b1;
    return JointState{state.ancilla_dim(), std::move(out), state.alice_bit()};
}

std::array<QubitState, 2> basis_states(Basis basis) {
    if (basis == Basis::Z) {
        return {make_zero(), make_one()};
    }
    return {make_plus(), make_minus()};
}

std::pair<double, double> born_probabilities(const JointState& state, Basis basis) {
    const Eigen::VectorXcd b0 = state.ancilla_branch(0);
    const Eigen::VectorXcd b1 = state.ancilla_branch(1);
    double p0 = 0.0;
    double p1 = 0.0;
    if (basis == Basis::Z) {
        p0 = b0.squaredNorm();
        p1 = b1.squaredNorm();
    } else {
        p0 = 0.5 * (b0 + b1).squaredNorm();
        p1 = 0.5 * (b0 - b1).squaredNorm();
    }
    const double total = p0 + p1;
    return {p0 / total, p1 / total};
}

std::pair<double, double> born_probabilities(const QubitState& state, Basis basis) {
    Eigen::VectorXcd anc(1);
    anc(0) = 1.0;
    return born_probabilities(JointState::product(state, anc), basis);
}

}  // namespace sqkd
