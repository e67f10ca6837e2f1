#pragma once

// Wigner functions of the readout mode: direct evaluation and simulation of
// the displaced-parity Ramsey protocol.

#include <cstdint>
#include <vector>

#include "seqread/dynamics.hpp"
#include "seqread/hilbert.hpp"

namespace seqread {

struct WignerGrid {
    int nx = 80;
    int ny = 80;
    double lo = -8.0;
    double hi = 8.0;

    double x(int ix) const { return lo + (hi - lo) * ix / (nx - 1); }
    double y(int iy) const { return lo + (hi - lo) * iy / (ny - 1); }
    double cell_area() const { return (hi - lo) / (nx - 1) * (hi - lo) / (ny - 1); }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    void validate() const;
};

struct WignerMap {
    WignerGrid grid;
    std::vector<Complex> alphas;  // index iy * nx + ix
    std::vector<double> values;
    double rotation_applied = 0.0;

    double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * grid.nx + ix]; }
    double riemann_sum() const;
    double min() const;
    double max() const;
};

/// W(alpha) = (2/pi) Tr[D(-alpha) rho D(alpha) Pi], from the populations of
/// the displaced state.
WignerMap wigner_direct(const ReadoutState& state, const WignerGrid& grid, int threads = 1);

/// Populations of D(-alpha)|psi> (or of the displaced mixed state), on
/// `rows` Fock levels.
Eigen::VectorXd displaced_populations(const ReadoutState& state, Complex alpha, int rows);

struct ProtocolOptions {
    int n_shots = 5000;              // per pixel and per second-pulse setting
    bool exact_expectation = false;  // skip sampling, use outcome probabilities
    Branch qubit_start = Branch::g;  // e reproduces the negated-signal variant
    double readout_error_g = 0.0;    // P(read e | qubit g)
    double readout_error_e = 0.0;    // P(read g | qubit e)
    double displacement_delay = 0.0; // cavity decay between displacement and parity mapping, s
    bool include_kerr = true;        // Kerr terms during the pi/chi wait
    std::uint64_t seed = 1;
    int threads = 1;
};

/// Displaced-parity protocol: displace by -alpha, pi/2 pulse, wait pi/chi,
/// second pulse at +pi/2 and -pi/2, subtract and correct for readout contrast.
WignerMap wigner_protocol_sim(const ReadoutState& state, const DeviceParams& params, const WignerGrid& grid,
                              const ProtocolOptions& opts);

/// Convenience form starting from a coherent probe evolved for t_int.
WignerMap wigner_protocol_sim(Complex initial, Branch branch, double t_int, const DeviceParams& params,
                              const WignerGrid& grid, const ProtocolOptions& opts, int dim = kDefaultTruncation);

/// Rotates the picture by `angle` (peak at a moves to a e^{i angle}) with
/// bilinear resampling on the same grid; points falling outside read 0.
WignerMap rotate_phase_space(const WignerMap& map, double angle);

}  // namespace seqread
