#include "seqread/dynamics.hpp"

#include <cmath>
#include <string>

#include "seqread/errors.hpp"

namespace seqread {

void DeviceParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            fail(ErrorCode::InvalidArgument, std::string(name) + " must be strictly positive");
    };
    auto nonnegative = [](double v, const char* name) {
        if (!(v >= 0.0) || !std::isfinite(v))
            fail(ErrorCode::InvalidArgument, std::string(name) + " must be non-negative");
    };
    // Dispersive and Kerr rates may be zeroed for limiting cases.
    nonnegative(chi, "chi");
    nonnegative(kerr_g, "kerr_g");
    nonnegative(kerr_e, "kerr_e");
    nonnegative(kappa_r, "kappa_r");
    nonnegative(kappa_b, "kappa_b");
    positive(t1, "t1");
    positive(t2, "t2");
    positive(eta, "eta");
    positive(if_freq, "if_freq");
    positive(sample_rate, "sample_rate");
    if (eta > 1.0) fail(ErrorCode::InvalidArgument, "eta must not exceed 1");
    if (t2 > 2.0 * t1) fail(ErrorCode::InvalidArgument, "t2 must not exceed 2 t1");
    if (!(thermal_excitation >= 0.0 && thermal_excitation < 1.0))
        fail(ErrorCode::InvalidArgument, "thermal_excitation must lie in [0, 1)");
    if (!(pi_pulse_fidelity > 0.0 && pi_pulse_fidelity <= 1.0))
        fail(ErrorCode::InvalidArgument, "pi_pulse_fidelity must lie in (0, 1]");
}

Eigen::VectorXd interaction_energies(Branch branch, const DeviceParams& params, int dim) {
    if (dim < 2) fail(ErrorCode::InvalidDimension, "dimension must be >= 2");
    Eigen::VectorXd e(dim);
    for (int n = 0; n < dim; ++n) {
        const double pairs = static_cast<double>(n) * (n - 1);
        e[n] = branch == Branch::g ? -params.kerr_g * pairs : -params.chi * n - params.kerr_e * pairs;
    }
    return e;
}

FockOperator interaction_hamiltonian(Branch branch, const DeviceParams& params, int dim) {
    const Eigen::VectorXd e = interaction_energies(branch, params, dim);
    return FockOperator(e.cast<Complex>().asDiagonal().toDenseMatrix(), true);
}

namespace {

ReadoutState evolve_unitary(const ReadoutState& state, const Eigen::VectorXd& energies, double t,
                            Branch branch) {
    const int dim = state.dim();
    CVector phase(dim);
    for (int n = 0; n < dim; ++n) phase[n] = std::polar(1.0, -energies[n] * t);
    if (state.is_pure()) {
        CVector v = state.vector().cwiseProduct(phase);
        return ReadoutState::pure(std::move(v), branch);
    }
    CMatrix rho = state.density();
    for (int n = 0; n < dim; ++n)
        for (int m = 0; m < dim; ++m) rho(m, n) *= phase[m] * std::conj(phase[n]);
    return ReadoutState::mixed(std::move(rho), branch);
}

}  // namespace

ReadoutState evolve_lindblad(const ReadoutState& state, const Eigen::VectorXd& energies, double kappa,
                             double t, const OdeOptions& opts) {
    if (t < 0.0) fail(ErrorCode::InvalidTime, "negative evolution time");
    const int dim = state.dim();
    if (energies.size() != dim) fail(ErrorCode::InvalidDimension, "energy vector does not match state");

    // drho_mn = [-i (E_m - E_n) - kappa (m + n) / 2] rho_mn + kappa sqrt((m+1)(n+1)) rho_{m+1,n+1}
    CMatrix diag_rate(dim, dim);
    for (int n = 0; n < dim; ++n)
        for (int m = 0; m < dim; ++m)
            diag_rate(m, n) = Complex(-0.5 * kappa * (m + n), -(energies[m] - energies[n]));
    Eigen::MatrixXd feed(dim - 1, dim - 1);
    for (int n = 0; n < dim - 1; ++n)
        for (int m = 0; m < dim - 1; ++m) feed(m, n) = kappa * std::sqrt((m + 1.0) * (n + 1.0));

    auto rhs = [&](double, const CMatrix& rho) {
        CMatrix d = diag_rate.cwiseProduct(rho);
        d.topLeftCorner(dim - 1, dim - 1) +=
            (feed.cast<Complex>().array() * rho.bottomRightCorner(dim - 1, dim - 1).array()).matrix();
        return d;
    };

    CMatrix rho = integrate<CMatrix>(rhs, 0.0, t, state.density(), opts);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    // Integrator error can leave eigenvalues of order -rtol; clip them.
    Eigen::SelfAdjointEigenSolver<CMatrix> es(rho);
    if (es.eigenvalues().minCoeff() < 0.0) {
        const Eigen::VectorXd w = es.eigenvalues().cwiseMax(0.0);
        rho = es.eigenvectors() * w.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    }
    // Loss out of the top level is physical within the truncation; renormalize
    // only the integrator round-off.
    rho /= rho.trace().real();
    return ReadoutState::mixed(std::move(rho), state.branch());
}

ReadoutState evolve_interaction(const ReadoutState& state, Branch branch, double t_int,
                                const DeviceParams& params, bool include_decay) {
    if (!(t_int >= 0.0)) fail(ErrorCode::InvalidTime, "interaction time must be non-negative");
    const Eigen::VectorXd energies = interaction_energies(branch, params, state.dim());
    if (t_int == 0.0) return state.with_branch(branch);
    if (!include_decay || params.kappa_r == 0.0) return evolve_unitary(state, energies, t_int, branch);
    return evolve_lindblad(state, energies, params.kappa_r, t_int).with_branch(branch);
}

ReadoutState evolve_with_relaxation(const ReadoutState& state, double t_int, double relax_time,
                                    const DeviceParams& params, bool include_decay) {
    if (!(t_int >= 0.0)) fail(ErrorCode::InvalidTime, "interaction time must be non-negative");
    const double tau = std::clamp(relax_time, 0.0, t_int);
    if (tau >= t_int) return evolve_interaction(state, Branch::e, t_int, params, include_decay);
    const ReadoutState excited = evolve_interaction(state, Branch::e, tau, params, include_decay);
    return evolve_interaction(excited, Branch::g, t_int - tau, params, include_decay);
}

Complex mean_field(const ReadoutState& state) {
    const int dim = state.dim();
    Complex s = 0.0;
    if (state.is_pure()) {
        const CVector& v = state.vector();
        for (int n = 1; n < dim; ++n) s += std::conj(v[n - 1]) * std::sqrt(static_cast<double>(n)) * v[n];
        return s;
    }
    const CMatrix rho = state.density();
    // Tr(rho a) = sum_n sqrt(n) rho_{n, n-1}
    for (int n = 1; n < dim; ++n) s += std::sqrt(static_cast<double>(n)) * rho(n, n - 1);
    return s;
}

double sample_relaxation_time(double t1, Rng& rng) {
    if (!(t1 > 0.0)) fail(ErrorCode::InvalidArgument, "t1 must be positive");
    std::exponential_distribution<double> dist(1.0 / t1);
    return dist(rng);
}

}  // namespace seqread
