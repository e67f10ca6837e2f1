#include "seqread/hilbert.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/MatrixFunctions>

#include "seqread/errors.hpp"

namespace seqread {

namespace {

constexpr double kHermitianTol = 1e-12;
constexpr double kNormTol = 1e-9;

void require_dim(int dim) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "dimension must be >= 2, got " + std::to_string(dim));
}

bool is_hermitian(const CMatrix& m, double tol) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

char to_char(Branch b) { return b == Branch::g ? 'g' : 'e'; }

Branch branch_from_char(char c) {
    if (c == 'g') return Branch::g;
    if (c == 'e') return Branch::e;
    fail(ErrorCode::InvalidArgument, std::string("unknown qubit branch '") + c + "'");
}

FockOperator::FockOperator(CMatrix entries, bool hermitian)
    : entries_(std::move(entries)), hermitian_(hermitian) {
    if (entries_.rows() != entries_.cols())
        fail(ErrorCode::InvalidDimension, "operator matrix must be square");
    require_dim(static_cast<int>(entries_.rows()));
    if (hermitian_ && !is_hermitian(entries_, kHermitianTol))
        fail(ErrorCode::InvalidArgument, "operator flagged Hermitian is not Hermitian");
}

FockOperator FockOperator::adjoint() const { return FockOperator(entries_.adjoint(), hermitian_); }

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    if (a.dim() != b.dim()) fail(ErrorCode::InvalidDimension, "operator dimensions differ");
    return FockOperator(a.entries_ * b.entries_);
}

FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    if (a.dim() != b.dim()) fail(ErrorCode::InvalidDimension, "operator dimensions differ");
    return FockOperator(a.entries_ + b.entries_, a.hermitian_ && b.hermitian_);
}

FockOperator operator-(const FockOperator& a, const FockOperator& b) {
    if (a.dim() != b.dim()) fail(ErrorCode::InvalidDimension, "operator dimensions differ");
    return FockOperator(a.entries_ - b.entries_, a.hermitian_ && b.hermitian_);
}

ReadoutState::ReadoutState(StateKind kind, CVector psi, CMatrix rho, std::optional<Branch> branch)
    : kind_(kind), psi_(std::move(psi)), rho_(std::move(rho)), branch_(branch) {}

ReadoutState ReadoutState::pure(CVector psi, std::optional<Branch> branch) {
    require_dim(static_cast<int>(psi.size()));
    const double norm2 = psi.squaredNorm();
    if (std::abs(norm2 - 1.0) > kNormTol)
        fail(ErrorCode::InvalidArgument, "pure state is not normalized (|psi|^2 = " + std::to_string(norm2) + ")");
    return ReadoutState(StateKind::pure, std::move(psi), CMatrix(), branch);
}

ReadoutState ReadoutState::mixed(CMatrix rho, std::optional<Branch> branch) {
    if (rho.rows() != rho.cols()) fail(ErrorCode::InvalidDimension, "density matrix must be square");
    require_dim(static_cast<int>(rho.rows()));
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > kNormTol)
        fail(ErrorCode::InvalidArgument, "density matrix trace is " + std::to_string(tr));
    if (!is_hermitian(rho, kNormTol)) fail(ErrorCode::InvalidArgument, "density matrix is not Hermitian");
    // Symmetrize away round-off before the spectrum check.
    CMatrix h = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kNormTol)
        fail(ErrorCode::InvalidArgument, "density matrix has negative eigenvalue " +
                                             std::to_string(es.eigenvalues().minCoeff()));
    return ReadoutState(StateKind::mixed, CVector(), std::move(h), branch);
}

ReadoutState ReadoutState::fock(int n, int dim) {
    require_dim(dim);
    if (n < 0 || n >= dim) fail(ErrorCode::InvalidArgument, "Fock index outside truncation");
    CVector v = CVector::Zero(dim);
    v[n] = 1.0;
    return pure(std::move(v));
}

int ReadoutState::dim() const {
    return static_cast<int>(is_pure() ? psi_.size() : rho_.rows());
}

const CVector& ReadoutState::vector() const {
    if (!is_pure()) fail(ErrorCode::InvalidArgument, "state is mixed; no ket available");
    return psi_;
}

CMatrix ReadoutState::density() const {
    if (is_pure()) return psi_ * psi_.adjoint();
    return rho_;
}

Eigen::VectorXd ReadoutState::populations() const {
    if (is_pure()) return psi_.cwiseAbs2();
    return rho_.diagonal().real();
}

ReadoutState ReadoutState::with_branch(std::optional<Branch> b) const {
    ReadoutState copy = *this;
    copy.branch_ = b;
    return copy;
}

Complex ReadoutState::expectation(const FockOperator& op) const {
    if (op.dim() != dim()) fail(ErrorCode::InvalidDimension, "operator and state dimensions differ");
    if (is_pure()) return psi_.dot(op.matrix() * psi_);
    return (rho_ * op.matrix()).trace();
}

double ReadoutState::mean_photon_number() const {
    const Eigen::VectorXd p = populations();
    double n = 0.0;
    for (int k = 0; k < p.size(); ++k) n += k * p[k];
    return n;
}

FockOperator annihilation_operator(int dim) {
    require_dim(dim);
    CMatrix a = CMatrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return FockOperator(std::move(a));
}

FockOperator number_operator(int dim) {
    require_dim(dim);
    CMatrix n = CMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return FockOperator(std::move(n), true);
}

FockOperator parity_operator(int dim) {
    require_dim(dim);
    CMatrix p = CMatrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) p(k, k) = (k % 2 == 0) ? 1.0 : -1.0;
    return FockOperator(std::move(p), true);
}

bool truncation_safe(Complex alpha, int dim) {
    return std::norm(alpha) <= dim / 3.0;
}

ReadoutState coherent_state(Complex alpha, int dim) {
    require_dim(dim);
    if (!truncation_safe(alpha, dim))
        fail(ErrorCode::TruncationOverflow, "|alpha|^2 = " + std::to_string(std::norm(alpha)) +
                                                " exceeds dim/3 for dim " + std::to_string(dim));
    CVector v(dim);
    v[0] = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) v[n] = v[n - 1] * alpha / std::sqrt(static_cast<double>(n));
    v /= v.norm();
    return ReadoutState::pure(std::move(v));
}

CMatrix matrix_exponential(const CMatrix& m) {
    return m.exp();
}

FockOperator displacement_operator(Complex alpha, int dim) {
    require_dim(dim);
    if (!truncation_safe(alpha, dim))
        fail(ErrorCode::TruncationOverflow, "displacement amplitude too large for truncation");
    const CMatrix a = annihilation_operator(dim).matrix();
    const CMatrix gen = alpha * a.adjoint() - std::conj(alpha) * a;
    return FockOperator(matrix_exponential(gen));
}

ReadoutState apply_unitary(const FockOperator& u, const ReadoutState& state) {
    if (u.dim() != state.dim()) fail(ErrorCode::InvalidDimension, "operator and state dimensions differ");
    if (state.is_pure()) {
        CVector v = u.matrix() * state.vector();
        v /= v.norm();
        return ReadoutState::pure(std::move(v), state.branch());
    }
    CMatrix rho = u.matrix() * state.density() * u.matrix().adjoint();
    rho /= rho.trace().real();
    return ReadoutState::mixed(std::move(rho), state.branch());
}

double parity_expectation(const ReadoutState& state) {
    const Eigen::VectorXd p = state.populations();
    double s = 0.0;
    for (int n = 0; n < p.size(); ++n) s += (n % 2 == 0) ? p[n] : -p[n];
    return s;
}

namespace {

// amp(n, k) = sqrt(C(n, k) eta^(n-k) (1-eta)^k): amplitude for losing k of n photons.
Eigen::MatrixXd loss_amplitudes(int dim, double eta) {
    Eigen::MatrixXd amp = Eigen::MatrixXd::Zero(dim, dim);
    const double log_eta = std::log(eta);
    const double log_loss = eta < 1.0 ? std::log1p(-eta) : 0.0;
    for (int n = 0; n < dim; ++n) {
        for (int k = 0; k <= n; ++k) {
            if (k > 0 && eta == 1.0) break;
            const double lg = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                              (n - k) * log_eta + k * log_loss;
            amp(n, k) = std::exp(0.5 * lg);
        }
    }
    return amp;
}

// Smallest Kraus count whose discarded binomial weight is below 1e-15 for every
// Fock level of the truncation.
int kraus_terms_from(const Eigen::MatrixXd& amp) {
    const int dim = static_cast<int>(amp.rows());
    int terms = 1;
    for (int n = 0; n < dim; ++n) {
        double kept = 0.0;
        int k = 0;
        while (k <= n && 1.0 - kept > 1e-15) {
            kept += amp(n, k) * amp(n, k);
            ++k;
        }
        terms = std::max(terms, k);
    }
    return std::min(terms, dim);
}

}  // namespace

int loss_kraus_terms(int dim, double eta) {
    require_dim(dim);
    if (!(eta > 0.0 && eta <= 1.0))
        fail(ErrorCode::InvalidEfficiency, "transmissivity must lie in (0, 1], got " + std::to_string(eta));
    return kraus_terms_from(loss_amplitudes(dim, eta));
}

ReadoutState apply_loss_channel(const ReadoutState& state, double eta) {
    if (!(eta > 0.0 && eta <= 1.0))
        fail(ErrorCode::InvalidEfficiency, "transmissivity must lie in (0, 1], got " + std::to_string(eta));
    const int dim = state.dim();
    const CMatrix rho = state.density();
    const Eigen::MatrixXd amp = loss_amplitudes(dim, eta);
    const int terms = kraus_terms_from(amp);

    CMatrix out = CMatrix::Zero(dim, dim);
    for (int k = 0; k < terms; ++k) {
        for (int n = 0; n + k < dim; ++n) {
            const double an = amp(n + k, k);
            if (an == 0.0) continue;
            for (int m = 0; m + k < dim; ++m) {
                out(m, n) += amp(m + k, k) * an * rho(m + k, n + k);
            }
        }
    }
    return ReadoutState::mixed(std::move(out), state.branch());
}

double fidelity_with_pure(const ReadoutState& reference, const ReadoutState& state) {
    const CVector& psi = reference.vector();
    if (psi.size() != state.dim()) fail(ErrorCode::InvalidDimension, "state dimensions differ");
    if (state.is_pure()) return std::norm(psi.dot(state.vector()));
    return psi.dot(state.density() * psi).real();
}

}  // namespace seqread
