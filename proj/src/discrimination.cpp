#include "seqread/discrimination.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

#include "seqread/errors.hpp"

namespace seqread {

namespace {

int find_bin(const std::vector<double>& edges, double v) {
    const int n = static_cast<int>(edges.size()) - 1;
    if (v <= edges.front()) return 0;
    if (v >= edges.back()) return n - 1;
    const auto it = std::upper_bound(edges.begin(), edges.end(), v);
    return std::clamp(static_cast<int>(it - edges.begin()) - 1, 0, n - 1);
}

void require_same_grid(const AmplitudeHistogram& a, const AmplitudeHistogram& b) {
    if (!(a.grid == b.grid)) fail(ErrorCode::BinningMismatch, "histograms use different binning");
}

}  // namespace

BinGrid BinGrid::uniform(int nx, int ny, double lo, double hi) {
    if (nx < 1 || ny < 1 || !(hi > lo)) fail(ErrorCode::InvalidArgument, "invalid histogram grid");
    BinGrid g;
    g.x_edges.resize(static_cast<std::size_t>(nx) + 1);
    g.y_edges.resize(static_cast<std::size_t>(ny) + 1);
    for (int k = 0; k <= nx; ++k) g.x_edges[k] = lo + (hi - lo) * k / nx;
    for (int k = 0; k <= ny; ++k) g.y_edges[k] = lo + (hi - lo) * k / ny;
    return g;
}

void BinGrid::validate() const {
    if (x_edges.size() < 2 || y_edges.size() < 2) fail(ErrorCode::InvalidArgument, "grid needs at least one bin");
    for (std::size_t k = 1; k < x_edges.size(); ++k)
        if (!(x_edges[k] > x_edges[k - 1])) fail(ErrorCode::InvalidArgument, "x edges must increase strictly");
    for (std::size_t k = 1; k < y_edges.size(); ++k)
        if (!(y_edges[k] > y_edges[k - 1])) fail(ErrorCode::InvalidArgument, "y edges must increase strictly");
}

double BinGrid::bin_area(int ix, int iy) const {
    return (x_edges[ix + 1] - x_edges[ix]) * (y_edges[iy + 1] - y_edges[iy]);
}

bool BinGrid::contains(Complex b) const {
    return b.real() >= x_edges.front() && b.real() < x_edges.back() && b.imag() >= y_edges.front() &&
           b.imag() < y_edges.back();
}

std::pair<int, int> BinGrid::locate(Complex b) const {
    return {find_bin(x_edges, b.real()), find_bin(y_edges, b.imag())};
}

double AmplitudeHistogram::mass() const {
    double m = 0.0;
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy) m += density(ix, iy) * grid.bin_area(ix, iy);
    return m;
}

AmplitudeHistogram histogram2d(const std::vector<Complex>& samples, const BinGrid& grid, int threads,
                               double min_coverage) {
    grid.validate();
    if (samples.empty()) fail(ErrorCode::EmptySamples, "cannot histogram an empty sample set");
    const int nx = grid.nx(), ny = grid.ny();
    const int shards = std::max(1, std::min<int>(threads, static_cast<int>(samples.size() / 4096) + 1));

    std::vector<Eigen::MatrixXd> partial(static_cast<std::size_t>(shards), Eigen::MatrixXd::Zero(nx, ny));
    std::vector<long> inside(static_cast<std::size_t>(shards), 0);
    auto work = [&](int s) {
        const std::size_t lo = samples.size() * s / shards, hi = samples.size() * (s + 1) / shards;
        for (std::size_t k = lo; k < hi; ++k) {
            if (!grid.contains(samples[k])) continue;
            const auto [ix, iy] = grid.locate(samples[k]);
            partial[s](ix, iy) += 1.0;
            ++inside[s];
        }
    };
    if (shards == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int s = 0; s < shards; ++s) pool.emplace_back(work, s);
        for (auto& t : pool) t.join();
    }
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(nx, ny);
    long total_inside = 0;
    for (int s = 0; s < shards; ++s) {
        counts += partial[s];
        total_inside += inside[s];
    }
    const double coverage = static_cast<double>(total_inside) / static_cast<double>(samples.size());
    if (coverage < min_coverage)
        fail(ErrorCode::CoverageDeficit, "histogram grid covers only " + std::to_string(coverage) + " of samples");

    AmplitudeHistogram h;
    h.grid = grid;
    h.n_samples = static_cast<long>(samples.size());
    h.density = Eigen::MatrixXd::Zero(nx, ny);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            h.density(ix, iy) = counts(ix, iy) / (static_cast<double>(total_inside) * grid.bin_area(ix, iy));
    return h;
}

AmplitudeHistogram merge_bins(const AmplitudeHistogram& h, int fx, int fy) {
    const int nx = h.grid.nx(), ny = h.grid.ny();
    if (fx < 1 || fy < 1 || nx % fx != 0 || ny % fy != 0)
        fail(ErrorCode::BinningMismatch, "merge factors must divide the grid dimensions");
    AmplitudeHistogram out;
    out.n_samples = h.n_samples;
    for (int k = 0; k <= nx; k += fx) out.grid.x_edges.push_back(h.grid.x_edges[k]);
    for (int k = 0; k <= ny; k += fy) out.grid.y_edges.push_back(h.grid.y_edges[k]);
    out.density = Eigen::MatrixXd::Zero(nx / fx, ny / fy);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy) out.density(ix / fx, iy / fy) += h.density(ix, iy) * h.grid.bin_area(ix, iy);
    for (int ix = 0; ix < nx / fx; ++ix)
        for (int iy = 0; iy < ny / fy; ++iy) out.density(ix, iy) /= out.grid.bin_area(ix, iy);
    return out;
}

double overlap(const AmplitudeHistogram& pg, const AmplitudeHistogram& pe) {
    require_same_grid(pg, pe);
    const double ng = pg.density.squaredNorm(), ne = pe.density.squaredNorm();
    if (ng == 0.0 || ne == 0.0) fail(ErrorCode::EmptySamples, "overlap of an empty histogram");
    return pg.density.cwiseProduct(pe.density).sum() / std::sqrt(ng * ne);
}

double total_variation(const AmplitudeHistogram& a, const AmplitudeHistogram& b) {
    require_same_grid(a, b);
    double s = 0.0;
    for (int ix = 0; ix < a.grid.nx(); ++ix)
        for (int iy = 0; iy < a.grid.ny(); ++iy)
            s += std::abs(a.density(ix, iy) - b.density(ix, iy)) * a.grid.bin_area(ix, iy);
    return 0.5 * s;
}

bool DecisionRegion::in_g(Complex beta) const {
    const auto [ix, iy] = grid.locate(beta);
    return at(ix, iy);
}

DecisionRegion decision_region(const AmplitudeHistogram& pg, const AmplitudeHistogram& pe) {
    require_same_grid(pg, pe);
    DecisionRegion r;
    r.grid = pg.grid;
    const int nx = r.grid.nx(), ny = r.grid.ny();
    r.mask.resize(static_cast<std::size_t>(nx) * ny);
    for (int ix = 0; ix < nx; ++ix)
        for (int iy = 0; iy < ny; ++iy)
            r.mask[static_cast<std::size_t>(ix) * ny + iy] = pg.density(ix, iy) >= pe.density(ix, iy) ? 1 : 0;
    return r;
}

Branch classify(Complex beta, const DecisionRegion& region) {
    return region.in_g(beta) ? Branch::g : Branch::e;
}

ReadoutReport error_rates(const std::vector<Complex>& samples_g, const std::vector<Complex>& samples_e,
                          const DecisionRegion& region) {
    if (samples_g.empty() || samples_e.empty()) fail(ErrorCode::EmptySamples, "error rates need both ensembles");
    long miss_g = 0, miss_e = 0;
    for (const Complex& b : samples_g) miss_g += region.in_g(b) ? 0 : 1;
    for (const Complex& b : samples_e) miss_e += region.in_g(b) ? 1 : 0;
    ReadoutReport r;
    r.error_g = static_cast<double>(miss_g) / static_cast<double>(samples_g.size());
    r.error_e = static_cast<double>(miss_e) / static_cast<double>(samples_e.size());
    r.fidelity = 1.0 - (r.error_g + r.error_e) / 2.0;
    r.n_runs = static_cast<long>(std::min(samples_g.size(), samples_e.size()));
    return r;
}

HeldOutReport held_out_error_rates(const std::vector<Complex>& samples_g, const std::vector<Complex>& samples_e,
                                   const BinGrid& grid) {
    if (samples_g.size() < 2 || samples_e.size() < 2) fail(ErrorCode::EmptySamples, "held-out split needs >= 2 samples");
    const auto half = [](const std::vector<Complex>& v, bool first) {
        const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
        return first ? std::vector<Complex>(v.begin(), mid) : std::vector<Complex>(mid, v.end());
    };
    const auto g_train = half(samples_g, true), g_test = half(samples_g, false);
    const auto e_train = half(samples_e, true), e_test = half(samples_e, false);
    const AmplitudeHistogram hg = histogram2d(g_train, grid), he = histogram2d(e_train, grid);
    const DecisionRegion region = decision_region(hg, he);
    HeldOutReport out;
    out.train = error_rates(g_train, e_train, region);
    out.test = error_rates(g_test, e_test, region);
    out.train.overlap = out.test.overlap = overlap(hg, he);
    return out;
}

double qnd_probability(const std::vector<RunPair>& pairs) {
    if (pairs.empty()) fail(ErrorCode::EmptySamples, "no measurement pairs");
    long heralded = 0, repeated = 0;
    for (const RunPair& p : pairs) {
        if (p.outcome1 != p.prepared) continue;
        ++heralded;
        if (p.outcome2 == p.outcome1) ++repeated;
    }
    if (heralded == 0) fail(ErrorCode::NoHeraldedPairs, "no pair heralded by its first outcome");
    return static_cast<double>(repeated) / static_cast<double>(heralded);
}

}  // namespace seqread
