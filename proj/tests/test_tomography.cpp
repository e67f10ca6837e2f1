#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "seqread/dynamics.hpp"
#include "seqread/errors.hpp"
#include "seqread/tomography.hpp"

using namespace seqread;

namespace {

constexpr double kPeak = 2.0 / std::numbers::pi;

// W(alpha) = (2/pi) <Pi> of D(-alpha) rho D(alpha), with D built by matrix
// exponential in an enlarged space.
double parity_oracle(const ReadoutState& state, Complex alpha, int big_dim) {
    CVector psi = CVector::Zero(big_dim);
    psi.head(state.dim()) = state.vector();
    const CVector shifted = displacement_operator(-alpha, big_dim).matrix() * psi;
    double p = 0.0;
    for (int n = 0; n < big_dim; ++n) p += ((n % 2) ? -1.0 : 1.0) * std::norm(shifted[n]);
    return kPeak * p;
}

std::pair<int, int> argmax(const WignerMap& m) {
    std::pair<int, int> best{0, 0};
    for (int iy = 0; iy < m.grid.ny; ++iy)
        for (int ix = 0; ix < m.grid.nx; ++ix)
            if (m.at(ix, iy) > m.at(best.first, best.second)) best = {ix, iy};
    return best;
}

DeviceParams kerr_free() {
    DeviceParams d;
    d.kerr_g = d.kerr_e = 0.0;
    return d;
}

}  // namespace

TEST(WignerDirect, VacuumPeak) {
    const WignerMap m = wigner_direct(ReadoutState::fock(0, 20), WignerGrid{5, 5, -2.0, 2.0});
    EXPECT_NEAR(m.at(2, 2), kPeak, 1e-12);
}

TEST(WignerDirect, CoherentGaussian) {
    const Complex a0(2.0, -1.0);
    const WignerGrid grid{41, 41, -5.0, 5.0};
    const WignerMap m = wigner_direct(coherent_state(a0, 60), grid);
    for (std::size_t k = 0; k < m.values.size(); k += 37)
        EXPECT_NEAR(m.values[k], kPeak * std::exp(-2.0 * std::norm(m.alphas[k] - a0)), 1e-9);
    const auto [ix, iy] = argmax(m);
    EXPECT_NEAR(grid.x(ix), a0.real(), 1e-12);
    EXPECT_NEAR(grid.y(iy), a0.imag(), 1e-12);
}

TEST(WignerDirect, MatchesParityOracle) {
    DeviceParams d;
    d.kerr_e = kTwoPi * 1e6;
    const ReadoutState s = evolve_interaction(coherent_state(1.5, 30), Branch::e, 120e-9, d, false);
    const WignerMap m = wigner_direct(s, WignerGrid{9, 9, -2.5, 2.5});
    for (std::size_t k = 0; k < m.values.size(); k += 5)
        EXPECT_NEAR(m.values[k], parity_oracle(s, m.alphas[k], 120), 1e-9) << m.alphas[k];
}

TEST(WignerDirect, BoundedAndNormalized) {
    const ReadoutState s = evolve_interaction(coherent_state(3.0, 80), Branch::e, 300e-9, DeviceParams{}, false);
    const WignerMap m = wigner_direct(s, WignerGrid{81, 81, -6.0, 6.0});
    EXPECT_LE(m.max(), kPeak + 1e-6);
    EXPECT_GE(m.min(), -kPeak - 1e-6);
    EXPECT_NEAR(m.riemann_sum(), 1.0, 0.01);
}

TEST(WignerDirect, KerrEvolvedProbeHasNegativity) {
    const ReadoutState s = evolve_interaction(coherent_state(5.8, 150), Branch::e, 100e-9, DeviceParams{}, false);
    const WignerMap m = wigner_direct(s, WignerGrid{});
    EXPECT_LT(m.min(), -0.01);
    // Confirm the most negative pixel with the independent parity route.
    std::size_t k = 0;
    for (std::size_t i = 0; i < m.values.size(); ++i)
        if (m.values[i] < m.values[k]) k = i;
    EXPECT_NEAR(parity_oracle(s, m.alphas[k], 300), m.values[k], 1e-8);
}

TEST(WignerDirect, GridBeyondTruncation) {
    try {
        wigner_direct(ReadoutState::fock(0, 20), WignerGrid{10, 10, -8.0, 8.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TruncationOverflow);
    }
    EXPECT_THROW((WignerGrid{1, 10, -1.0, 1.0}.validate()), Error);
}

TEST(DisplacedPopulations, CoherentIsPoisson) {
    const Complex a0(1.0, 0.5), alpha(-0.5, 1.0);
    const Eigen::VectorXd p = displaced_populations(coherent_state(a0, 40), alpha, 80);
    const double nbar = std::norm(a0 - alpha);
    for (int n = 0; n < 10; ++n) EXPECT_NEAR(p[n], std::exp(-nbar + n * std::log(nbar) - std::lgamma(n + 1.0)), 1e-10);
    EXPECT_NEAR(p.sum(), 1.0, 1e-10);
}

TEST(Protocol, ExactModeEqualsDirectWithoutKerr) {
    const DeviceParams d = kerr_free();
    const ReadoutState s = evolve_interaction(coherent_state(2.5, 60), Branch::e, 100e-9, DeviceParams{}, false);
    const WignerGrid grid{15, 15, -4.0, 4.0};
    ProtocolOptions o;
    o.exact_expectation = true;
    const WignerMap p = wigner_protocol_sim(s, d, grid, o);
    const WignerMap w = wigner_direct(s, grid);
    for (std::size_t k = 0; k < w.values.size(); ++k) EXPECT_NEAR(p.values[k], w.values[k], 1e-6);
}

TEST(Protocol, VacuumSampledAgreesWithDirect) {
    const WignerGrid grid{7, 7, -1.5, 1.5};
    ProtocolOptions o;
    o.n_shots = 20000;
    const WignerMap p = wigner_protocol_sim(ReadoutState::fock(0, 30), kerr_free(), grid, o);
    const WignerMap w = wigner_direct(ReadoutState::fock(0, 30), grid);
    for (std::size_t k = 0; k < w.values.size(); ++k) {
        const double s = w.values[k] / kPeak;
        const double sem = kPeak * std::sqrt((1.0 - s * s) / (2.0 * o.n_shots));
        EXPECT_NEAR(p.values[k], w.values[k], 3.0 * sem + 1e-9);
    }
}

TEST(Protocol, ExcitedStartIsSignCorrected) {
    const ReadoutState s = evolve_interaction(coherent_state(2.0, 50), Branch::e, 100e-9, DeviceParams{}, false);
    const WignerGrid grid{9, 9, -3.0, 3.0};
    ProtocolOptions o;
    o.exact_expectation = true;
    const WignerMap g = wigner_protocol_sim(s, kerr_free(), grid, o);
    o.qubit_start = Branch::e;
    const WignerMap e = wigner_protocol_sim(s, kerr_free(), grid, o);
    for (std::size_t k = 0; k < g.values.size(); ++k) EXPECT_NEAR(e.values[k], g.values[k], 1e-12);
}

TEST(Protocol, ReadoutContrastIsCorrected) {
    const ReadoutState s = coherent_state(1.0, 30);
    const WignerGrid grid{5, 5, -2.0, 2.0};
    ProtocolOptions o;
    o.exact_expectation = true;
    const WignerMap ideal = wigner_protocol_sim(s, kerr_free(), grid, o);
    o.readout_error_g = 0.016;
    o.readout_error_e = 0.034;
    const WignerMap lossy = wigner_protocol_sim(s, kerr_free(), grid, o);
    for (std::size_t k = 0; k < ideal.values.size(); ++k) EXPECT_NEAR(lossy.values[k], ideal.values[k], 1e-12);
}

TEST(Protocol, ProbeStateShotNoise) {
    const ReadoutState s = evolve_interaction(coherent_state(5.8, 150), Branch::e, 100e-9, DeviceParams{}, false);
    const WignerGrid grid{16, 16, -8.0, 8.0};
    ProtocolOptions o;
    o.n_shots = 5000;
    o.seed = 31;
    const WignerMap p = wigner_protocol_sim(s, kerr_free(), grid, o);
    const WignerMap w = wigner_direct(s, grid);
    int inside = 0;
    for (std::size_t k = 0; k < w.values.size(); ++k) {
        const double x = w.values[k] / kPeak;
        const double sem = kPeak * std::sqrt(std::max(1.0 - x * x, 0.0) / (2.0 * o.n_shots));
        inside += std::abs(p.values[k] - w.values[k]) <= 3.0 * sem;
    }
    EXPECT_GE(inside, static_cast<int>(std::ceil(0.95 * w.values.size())));
}

TEST(Protocol, DeterministicAcrossThreads) {
    const WignerGrid grid{10, 10, -3.0, 3.0};
    ProtocolOptions o;
    o.n_shots = 500;
    const WignerMap a = wigner_protocol_sim(coherent_state(1.0, 30), kerr_free(), grid, o);
    o.threads = 3;
    const WignerMap b = wigner_protocol_sim(coherent_state(1.0, 30), kerr_free(), grid, o);
    EXPECT_EQ(a.values, b.values);
}

TEST(Rotation, IdentityAndFullTurn) {
    const WignerMap m = wigner_direct(coherent_state(Complex(2.0, 1.0), 60), WignerGrid{61, 61, -5.0, 5.0});
    EXPECT_EQ(rotate_phase_space(m, 0.0).values, m.values);
    const WignerMap full = rotate_phase_space(m, 2.0 * std::numbers::pi);
    for (std::size_t k = 0; k < m.values.size(); ++k) EXPECT_NEAR(full.values[k], m.values[k], 1e-3);
}

TEST(Rotation, PeakFollowsAngle) {
    const Complex a0(3.0, 0.5);
    const WignerGrid grid{81, 81, -6.0, 6.0};
    const WignerMap m = wigner_direct(coherent_state(a0, 80), grid);
    for (double deg : {24.0, 97.0, -60.0}) {
        const double th = deg * std::numbers::pi / 180.0;
        const auto [ix, iy] = argmax(rotate_phase_space(m, th));
        const Complex target = a0 * std::polar(1.0, th);
        const double cell = (grid.hi - grid.lo) / (grid.nx - 1);
        EXPECT_LE(std::abs(grid.x(ix) - target.real()), cell) << deg;
        EXPECT_LE(std::abs(grid.y(iy) - target.imag()), cell) << deg;
    }
}
