#include "seqread/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "seqread/errors.hpp"
#include "seqread/parallel.hpp"
#include "seqread/random.hpp"

namespace seqread {

void WignerGrid::validate() const {
    if (nx < 2 || ny < 2 || !(hi > lo)) fail(ErrorCode::InvalidArgument, "invalid Wigner grid");
}

double WignerMap::riemann_sum() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_area();
}

double WignerMap::min() const { return *std::min_element(values.begin(), values.end()); }
double WignerMap::max() const { return *std::max_element(values.begin(), values.end()); }

namespace {

WignerMap empty_map(const WignerGrid& grid) {
    grid.validate();
    WignerMap m;
    m.grid = grid;
    m.alphas.resize(grid.size());
    m.values.assign(grid.size(), 0.0);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix)
            m.alphas[static_cast<std::size_t>(iy) * grid.nx + ix] = Complex(grid.x(ix), grid.y(iy));
    return m;
}

double max_radius2(const WignerGrid& g) {
    const double a = std::max(std::abs(g.lo), std::abs(g.hi));
    return 2.0 * a * a;
}

}  // namespace

namespace {

// Pure components sqrt(w_j) psi_j; mixed states keep eigenvectors carrying
// all but 1e-12 of the weight.
std::vector<CVector> components(const ReadoutState& state) {
    if (state.is_pure()) return {state.vector()};
    Eigen::SelfAdjointEigenSolver<CMatrix> es(state.density());
    std::vector<CVector> out;
    double dropped = 0.0;
    for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
        const double wj = es.eigenvalues()[j];
        if (wj <= 0.0 || dropped + wj < 1e-12) {
            dropped += std::max(wj, 0.0);
            continue;
        }
        out.push_back(std::sqrt(wj) * es.eigenvectors().col(j));
    }
    return out;
}

// |D(beta) psi|^2 on `rows` levels. Band a of D holds
//   <k+a|D|k> = beta^a e^{-x/2} / sqrt(a!) * h_k,   <k|D|k+a> = (-beta*)^a e^{-x/2} / sqrt(a!) * h_k,
// with x = |beta|^2 and h_k = sqrt(a! k! / (k+a)!) L_k^(a)(x) from the upward
// Laguerre recurrence, rescaled to stay in range.
void accumulate_displaced(const CVector& psi, Complex beta, int rows, Eigen::VectorXd& pops) {
    const int dim = static_cast<int>(psi.size());
    CVector out = CVector::Zero(rows);
    const double x = std::norm(beta);
    if (x == 0.0) {
        out.head(dim) = psi;
        pops += out.cwiseAbs2();
        return;
    }
    const double log_r = 0.5 * std::log(x), theta = std::arg(beta);
    auto band = [&](int a, bool lower) {
        // Elements (n, k) = (k + a, k) for the lower band, (k, k + a) for the upper.
        const int len = lower ? std::min(dim, rows - a) : std::min(dim - a, rows);
        if (len <= 0) return;
        const double log_g = a * log_r - 0.5 * std::lgamma(a + 1.0) - 0.5 * x;
        const Complex phase = std::polar(1.0, a * (lower ? theta : std::numbers::pi - theta));
        double log_scale = 0.0;
        double h_prev = 0.0, h = 1.0;
        Complex factor = phase * std::exp(log_g);
        for (int k = 0; k < len; ++k) {
            if (k > 0) {
                const double next = ((2.0 * k - 1.0 + a - x) * h - std::sqrt((k - 1.0) * (k - 1.0 + a)) * h_prev) /
                                    std::sqrt(static_cast<double>(k) * (k + a));
                h_prev = h;
                h = next;
                if (std::abs(h) > 1e150) {
                    h *= 1e-150;
                    h_prev *= 1e-150;
                    log_scale += 150.0 * std::log(10.0);
                    factor = phase * std::exp(log_g + log_scale);
                }
            }
            const Complex element = factor * h;
            if (lower) out[k + a] += element * psi[k];
            else out[k] += element * psi[k + a];
        }
    };
    for (int a = 0; a < rows; ++a) band(a, true);
    for (int a = 1; a < dim; ++a) band(a, false);
    pops += out.cwiseAbs2();
}

int displaced_rows(int dim, Complex alpha) {
    const double reach = std::sqrt(static_cast<double>(dim)) + std::abs(alpha) + 6.0;
    return std::max(dim, static_cast<int>(std::ceil(reach * reach)));
}

// Binomial thinning of a photon-number distribution (loss with transmissivity eta).
Eigen::VectorXd thin(const Eigen::VectorXd& p, double eta) {
    const int rows = static_cast<int>(p.size());
    std::vector<double> logfact(static_cast<std::size_t>(rows) + 1, 0.0);
    for (int k = 1; k <= rows; ++k) logfact[k] = logfact[k - 1] + std::log(static_cast<double>(k));
    Eigen::VectorXd out = Eigen::VectorXd::Zero(rows);
    const double le = std::log(eta), ll = std::log1p(-eta);
    for (int m = 0; m < rows; ++m) {
        if (p[m] < 1e-16) continue;
        for (int n = 0; n <= m; ++n)
            out[n] += p[m] * std::exp(logfact[m] - logfact[n] - logfact[m - n] + n * le + (m - n) * ll);
    }
    return out;
}

}  // namespace

WignerMap wigner_direct(const ReadoutState& state, const WignerGrid& grid, int threads) {
    WignerMap map = empty_map(grid);
    const int m_dim = state.dim();
    if (max_radius2(grid) > m_dim)
        fail(ErrorCode::TruncationOverflow, "Wigner grid reaches |alpha|^2 = " + std::to_string(max_radius2(grid)) +
                                                " beyond the truncation " + std::to_string(m_dim));
    const std::vector<CVector> comps = components(state);
    parallel_for(grid.size(), threads, [&](std::size_t idx) {
        const Complex alpha = map.alphas[idx];
        const int rows = displaced_rows(m_dim, alpha);
        Eigen::VectorXd pops = Eigen::VectorXd::Zero(rows);
        for (const CVector& c : comps) accumulate_displaced(c, -alpha, rows, pops);
        double parity = 0.0;
        for (int n = 0; n < rows; ++n) parity += (n % 2 ? -pops[n] : pops[n]);
        map.values[idx] = (2.0 / std::numbers::pi) * parity;
    });
    return map;
}

Eigen::VectorXd displaced_populations(const ReadoutState& state, Complex alpha, int rows) {
    if (rows < state.dim()) fail(ErrorCode::InvalidDimension, "row count below the state truncation");
    Eigen::VectorXd pops = Eigen::VectorXd::Zero(rows);
    for (const CVector& c : components(state)) accumulate_displaced(c, -alpha, rows, pops);
    return pops;
}

WignerMap wigner_protocol_sim(const ReadoutState& state, const DeviceParams& params, const WignerGrid& grid,
                              const ProtocolOptions& opts) {
    if (!opts.exact_expectation && opts.n_shots < 100) fail(ErrorCode::InvalidArgument, "need at least 100 shots");
    if (!(params.chi > 0.0)) fail(ErrorCode::InvalidArgument, "parity mapping needs chi > 0");
    const double contrast = 1.0 - opts.readout_error_g - opts.readout_error_e;
    if (!(contrast > 0.0)) fail(ErrorCode::InvalidArgument, "readout errors leave no contrast");
    if (!(opts.displacement_delay >= 0.0)) fail(ErrorCode::InvalidTime, "negative displacement delay");

    WignerMap map = empty_map(grid);
    const std::vector<CVector> comps = components(state);
    const double wait = std::numbers::pi / params.chi;
    const double dk = opts.include_kerr ? params.kerr_e - params.kerr_g : 0.0;
    const double keep = opts.displacement_delay > 0.0 ? std::exp(-params.kappa_r * opts.displacement_delay) : 1.0;
    const double sign = opts.qubit_start == Branch::g ? 1.0 : -1.0;

    parallel_for(grid.size(), opts.threads, [&](std::size_t idx) {
        const Complex alpha = map.alphas[idx];
        const int rows = displaced_rows(state.dim(), alpha);
        Eigen::VectorXd pops = Eigen::VectorXd::Zero(rows);
        for (const CVector& c : comps) accumulate_displaced(c, -alpha, rows, pops);
        if (keep < 1.0) pops = thin(pops, keep);

        // p_e(+pi/2) - p_e(-pi/2) = sign * sum_n p_n cos(phi_n) for a qubit starting in g (sign +1) or e (-1).
        double diff = 0.0;
        for (int n = 0; n < rows; ++n) {
            const double phi = (params.chi * n + dk * n * (n - 1.0)) * wait;
            diff += pops[n] * std::cos(phi);
        }
        diff *= sign;
        const double pe_plus = std::clamp(0.5 * (1.0 + diff), 0.0, 1.0);
        const double pe_minus = std::clamp(0.5 * (1.0 - diff), 0.0, 1.0);
        auto read_e = [&](double pe) { return pe * (1.0 - opts.readout_error_e) + (1.0 - pe) * opts.readout_error_g; };

        double signal;
        if (opts.exact_expectation) {
            signal = read_e(pe_plus) - read_e(pe_minus);
        } else {
            Rng rng = make_rng(opts.seed, 0x77696721ULL, idx);
            std::binomial_distribution<int> plus(opts.n_shots, read_e(pe_plus));
            std::binomial_distribution<int> minus(opts.n_shots, read_e(pe_minus));
            const int hp = plus(rng);
            const int hm = minus(rng);
            signal = static_cast<double>(hp - hm) / opts.n_shots;
        }
        // Contrast correction, then undo the sign flip of an excited start.
        map.values[idx] = sign * (2.0 / std::numbers::pi) * signal / contrast;
    });
    return map;
}

WignerMap wigner_protocol_sim(Complex initial, Branch branch, double t_int, const DeviceParams& params,
                              const WignerGrid& grid, const ProtocolOptions& opts, int dim) {
    const ReadoutState evolved = evolve_interaction(coherent_state(initial, dim), branch, t_int, params, false);
    return wigner_protocol_sim(evolved, params, grid, opts);
}

WignerMap rotate_phase_space(const WignerMap& map, double angle) {
    WignerMap out = map;
    out.rotation_applied = map.rotation_applied + angle;
    if (angle == 0.0) return out;
    const WignerGrid& g = map.grid;
    const double sx = (g.hi - g.lo) / (g.nx - 1), sy = (g.hi - g.lo) / (g.ny - 1);
    const Complex back = std::polar(1.0, -angle);
    for (std::size_t idx = 0; idx < map.values.size(); ++idx) {
        const Complex src = map.alphas[idx] * back;
        const double fx = (src.real() - g.lo) / sx, fy = (src.imag() - g.lo) / sy;
        const double eps = 1e-9;
        if (fx < -eps || fy < -eps || fx > g.nx - 1 + eps || fy > g.ny - 1 + eps) {
            out.values[idx] = 0.0;
            continue;
        }
        const int ix = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx - 2);
        const int iy = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny - 2);
        const double tx = std::clamp(fx - ix, 0.0, 1.0), ty = std::clamp(fy - iy, 0.0, 1.0);
        out.values[idx] = (1 - tx) * (1 - ty) * map.at(ix, iy) + tx * (1 - ty) * map.at(ix + 1, iy) +
                          (1 - tx) * ty * map.at(ix, iy + 1) + tx * ty * map.at(ix + 1, iy + 1);
    }
    return out;
}

}  // namespace seqread
