#pragma once

// Truncated Fock-space linear algebra for a single bosonic mode.

#include <complex>
#include <optional>

#include <Eigen/Dense>

namespace seqread {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr int kDefaultTruncation = 150;

/// Qubit eigenstate conditioning the readout-mode evolution.
enum class Branch { g, e };

char to_char(Branch b);
Branch branch_from_char(char c);

class FockOperator {
public:
    explicit FockOperator(CMatrix entries, bool hermitian = false);

    int dim() const { return static_cast<int>(entries_.rows()); }
    const CMatrix& matrix() const { return entries_; }
    bool hermitian() const { return hermitian_; }

    FockOperator adjoint() const;

    friend FockOperator operator*(const FockOperator& a, const FockOperator& b);
    friend FockOperator operator+(const FockOperator& a, const FockOperator& b);
    friend FockOperator operator-(const FockOperator& a, const FockOperator& b);

private:
    CMatrix entries_;
    bool hermitian_;
};

enum class StateKind { pure, mixed };

/// State of the readout mode, either a ket or a density matrix, optionally
/// tagged with the qubit branch it was evolved under.
class ReadoutState {
public:
    static ReadoutState pure(CVector psi, std::optional<Branch> branch = std::nullopt);
    static ReadoutState mixed(CMatrix rho, std::optional<Branch> branch = std::nullopt);
    static ReadoutState fock(int n, int dim);

    int dim() const;
    StateKind kind() const { return kind_; }
    bool is_pure() const { return kind_ == StateKind::pure; }

    /// Ket amplitudes; only valid for pure states.
    const CVector& vector() const;
    /// Density matrix (built on demand for pure states).
    CMatrix density() const;
    Eigen::VectorXd populations() const;

    std::optional<Branch> branch() const { return branch_; }
    ReadoutState with_branch(std::optional<Branch> b) const;

    Complex expectation(const FockOperator& op) const;
    double mean_photon_number() const;

private:
    ReadoutState(StateKind kind, CVector psi, CMatrix rho, std::optional<Branch> branch);

    StateKind kind_;
    CVector psi_;
    CMatrix rho_;
    std::optional<Branch> branch_;
};

FockOperator annihilation_operator(int dim);
FockOperator number_operator(int dim);
FockOperator parity_operator(int dim);

/// Truncation-safe amplitude bound: |alpha|^2 <= dim / 3.
bool truncation_safe(Complex alpha, int dim);

ReadoutState coherent_state(Complex alpha, int dim);

/// exp(alpha a^dag - alpha^* a) on the truncated space.
FockOperator displacement_operator(Complex alpha, int dim);

/// Scaling-and-squaring Pade exponential (backed by Eigen's MatrixFunctions).
CMatrix matrix_exponential(const CMatrix& m);

ReadoutState apply_unitary(const FockOperator& u, const ReadoutState& state);

double parity_expectation(const ReadoutState& state);

/// Pure-loss channel with transmissivity eta, applied through its Kraus
/// decomposition. Always returns a mixed state.
ReadoutState apply_loss_channel(const ReadoutState& state, double eta);

/// Number of Kraus terms retained for a given truncation and transmissivity.
int loss_kraus_terms(int dim, double eta);

/// <psi|rho|psi> for a pure reference state.
double fidelity_with_pure(const ReadoutState& reference, const ReadoutState& state);

}  // namespace seqread
