#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <random>
#include <utility>

#include <Eigen/Dense>

namespace sqkd {

using Complex = std::complex<double>;

/// Measurement bases Bob can choose. Both X settings project onto |+>/|->;
/// the sign only matters for which detector the optics route a photon to.
enum class Basis { Z, Xplus, Xminus };

inline bool is_x_basis(Basis b) { return b != Basis::Z; }
const char* to_string(Basis b);

/// Single time-bin/phase qubit a0|0> + a1|1>.
struct QubitState {
    Complex a0{1.0, 0.0};
    Complex a1{0.0, 0.0};

    double norm() const { return std::sqrt(std::norm(a0) + std::norm(a1)); }
};

QubitState make_zero();
QubitState make_one();

/// |+> in the real-amplitude convention used throughout.
QubitState make_plus();
QubitState make_minus();

/// |+> written with the complex coefficients (1+i)/2 and (1-i)/2. It differs
/// from make_plus() by a basis choice on the Bloch equator and is kept only
/// as an alternate constructor; nothing in the protocol depends on it.
QubitState make_plus_equatorial();

Complex inner(const QubitState& bra, const QubitState& ket);

/// 2x2 complex operator acting on Bob's qubit.
class Operator2 {
public:
    Operator2() : m_(Eigen::Matrix2cd::Identity()) {}
    explicit Operator2(const Eigen::Matrix2cd& m) : m_(m) {}

    static Operator2 identity() { return Operator2{}; }

    const Eigen::Matrix2cd& matrix() const { return m_; }
    Complex operator()(int row, int col) const { return m_(row, col); }

    Operator2 operator*(const Operator2& rhs) const { return Operator2{m_ * rhs.m_}; }
    QubitState operator*(const QubitState& s) const;

    Operator2 adjoint() const { return Operator2{m_.adjoint()}; }

    /// Largest entrywise deviation of U^dagger U from the identity.
    double unitarity_error() const;

private:
    Eigen::Matrix2cd m_;
};

/// Rotation by delta (radians, counterclockwise) about the Bloch y axis.
/// Throws std::invalid_argument for non-finite delta.
Operator2 ry(double delta);

/// Alice's selective-modulation operator: bit 0 -> ry(-pi/2), bit 1 -> ry(+pi/2).
Operator2 sift_operator(int bit);

/// Bob qubit tensored with an ancilla of dimension d. Amplitudes are stored
/// Bob-major: index = bob * d + ancilla. Alice's key bit for SIFT rounds is a
/// classical record carried alongside, not a tensor factor.
class JointState {
public:
    JointState(std::size_t ancilla_dim, Eigen::VectorXcd amps, std::optional<int> alice_bit = std::nullopt);

    static JointState product(const QubitState& bob, const Eigen::VectorXcd& ancilla);

    std::size_t ancilla_dim() const { return dim_e_; }
    std::size_t size() const { return static_cast<std::size_t>(amps_.size()); }
    const Eigen::VectorXcd& amps() const { return amps_; }
    std::optional<int> alice_bit() const { return alice_bit_; }
    void set_alice_bit(std::optional<int> bit) { alice_bit_ = bit; }

    double norm() const { return amps_.norm(); }

    /// Unnormalized ancilla vector attached to Bob's basis ket |bob>.
    Eigen::VectorXcd ancilla_branch(int bob) const;

    /// Bob's reduced 2x2 density matrix.
    Eigen::Matrix2cd bob_density() const;

    /// Ancilla reduced density matrix (Bob traced out).
    Eigen::MatrixXcd ancilla_density() const;

private:
    std::size_t dim_e_;
    Eigen::VectorXcd amps_;
    std::optional<int> alice_bit_;
};

/// Applies op (x) I_E. Throws std::invalid_argument if the state is malformed.
JointState apply_on_qubit(const Operator2& op, const JointState& state);

/// Eigenvectors of the chosen basis; outcome 0 is |0> for Z and |+> for X.
std::array<QubitState, 2> basis_states(Basis basis);

/// Exact outcome probabilities for measuring Bob's qubit in `basis`.
std::pair<double, double> born_probabilities(const JointState& state, Basis basis);
std::pair<double, double> born_probabilities(const QubitState& state, Basis basis);

struct Measurement {
    int outcome = 0;
    QubitState post_state;
};

/// Born-rule sample of a projective measurement in `basis`.
template <class Rng>
Measurement measure(const QubitState& state, Basis basis, Rng& rng) {
    const auto [p0, p1] = born_probabilities(state, basis);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double u = uniform(rng) * (p0 + p1);
    const int outcome = u < p0 ? 0 : 1;
    return {outcome, basis_states(basis)[static_cast<std::size_t>(outcome)]};
}

}  // namespace sqkd
