#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "seqread/discrimination.hpp"
#include "seqread/errors.hpp"
#include "seqread/experiment.hpp"

using namespace seqread;

namespace {

std::vector<Complex> gaussian_cloud(Complex center, double sigma, int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sigma);
    std::vector<Complex> v(n);
    for (Complex& c : v) c = center + Complex(nd(rng), nd(rng));
    return v;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// Upper tail of chi-square through the Wilson-Hilferty cube-root normal approximation.
double chi2_upper_tail(double x, double dof) {
    const double z = (std::cbrt(x / dof) - (1.0 - 2.0 / (9.0 * dof))) / std::sqrt(2.0 / (9.0 * dof));
    return 1.0 - normal_cdf(z);
}

}  // namespace

TEST(Histogram, SingleSampleOneBin) {
    const AmplitudeHistogram h = histogram2d({Complex(0.3, -1.2)}, BinGrid::standard());
    int nonzero = 0;
    for (int ix = 0; ix < h.grid.nx(); ++ix)
        for (int iy = 0; iy < h.grid.ny(); ++iy) nonzero += h.density(ix, iy) > 0.0;
    EXPECT_EQ(nonzero, 1);
    EXPECT_NEAR(h.mass(), 1.0, 1e-9);
}

TEST(Histogram, UniformSamplesGiveFlatDensity) {
    const BinGrid grid = BinGrid::uniform(10, 10, 0.0, 1.0);
    std::vector<Complex> v;
    for (int i = 0; i < 100; ++i)
        for (int j = 0; j < 100; ++j) v.emplace_back((i + 0.5) / 100.0, (j + 0.5) / 100.0);
    const AmplitudeHistogram h = histogram2d(v, grid);
    for (int ix = 0; ix < 10; ++ix)
        for (int iy = 0; iy < 10; ++iy) EXPECT_NEAR(h.density(ix, iy), 1.0, 1e-12);
}

TEST(Histogram, GaussianGoodnessOfFit) {
    const int n = 100000;
    const std::vector<Complex> v = gaussian_cloud(0.0, 1.0, n, 42);
    const BinGrid grid = BinGrid::uniform(40, 40, -6.0, 6.0);
    const AmplitudeHistogram h = histogram2d(v, grid);
    double chi2 = 0.0;
    int bins = 0;
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double px = normal_cdf(grid.x_edges[ix + 1]) - normal_cdf(grid.x_edges[ix]);
            const double py = normal_cdf(grid.y_edges[iy + 1]) - normal_cdf(grid.y_edges[iy]);
            const double expected = n * px * py;
            if (expected < 5.0) continue;
            const double observed = h.density(ix, iy) * grid.bin_area(ix, iy) * n;
            chi2 += (observed - expected) * (observed - expected) / expected;
            ++bins;
        }
    ASSERT_GT(bins, 200);
    EXPECT_GT(chi2_upper_tail(chi2, bins - 1), 1e-3) << "chi2 = " << chi2 << " over " << bins << " bins";
}

TEST(Histogram, ThreadCountDoesNotChangeResult) {
    const std::vector<Complex> v = gaussian_cloud(Complex(1.0, 2.0), 2.0, 50000, 3);
    const AmplitudeHistogram a = histogram2d(v, BinGrid::standard(), 1);
    const AmplitudeHistogram b = histogram2d(v, BinGrid::standard(), 3);
    EXPECT_EQ(a.density, b.density);
}

TEST(Histogram, Errors) {
    try {
        histogram2d({}, BinGrid::standard());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptySamples);
    }
    std::vector<Complex> v(999, Complex(0.0, 0.0));
    v.push_back(Complex(50.0, 0.0));
    v.push_back(Complex(50.0, 0.0));
    try {
        histogram2d(v, BinGrid::standard());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::CoverageDeficit);
    }
    BinGrid bad = BinGrid::uniform(4, 4, 0.0, 1.0);
    bad.x_edges[2] = bad.x_edges[1];
    EXPECT_THROW(bad.validate(), Error);
}

TEST(Overlap, SelfAndDisjoint) {
    const BinGrid grid = BinGrid::standard();
    const AmplitudeHistogram a = histogram2d(gaussian_cloud(Complex(-3.0, 0.0), 0.5, 20000, 1), grid);
    const AmplitudeHistogram b = histogram2d(gaussian_cloud(Complex(6.0, 0.0), 0.5, 20000, 2), grid);
    EXPECT_NEAR(overlap(a, a), 1.0, 1e-12);
    EXPECT_EQ(overlap(a, b), 0.0);
    EXPECT_DOUBLE_EQ(overlap(a, b), overlap(b, a));
}

TEST(Overlap, BinningMismatch) {
    const AmplitudeHistogram a = histogram2d({Complex(0.0, 0.0)}, BinGrid::standard());
    const AmplitudeHistogram b = histogram2d({Complex(0.0, 0.0)}, BinGrid::uniform(100, 100, -12.0, 12.0));
    try {
        overlap(a, b);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BinningMismatch);
    }
}

TEST(Overlap, StableUnderMerging) {
    const BinGrid grid = BinGrid::standard();
    const auto pg = gaussian_cloud(Complex(1.0, 0.5), 2.1, 100000, 5);
    const auto pe = gaussian_cloud(Complex(-1.5, 1.0), 2.1, 100000, 6);
    const AmplitudeHistogram hg = histogram2d(pg, grid), he = histogram2d(pe, grid);
    const double fine = overlap(hg, he);
    const double coarse = overlap(merge_bins(hg, 2, 2), merge_bins(he, 2, 2));
    EXPECT_DOUBLE_EQ(overlap(he, hg), fine);
    // Analytic value for two equal isotropic Gaussians: exp(-d^2 / (4 sigma^2)).
    const double exact = std::exp(-std::norm(Complex(2.5, -0.5)) / (4.0 * 2.1 * 2.1));
    EXPECT_NEAR(coarse, fine, 2.0 * std::abs(fine - exact) + 0.01);
    EXPECT_NEAR(merge_bins(hg, 2, 2).mass(), 1.0, 1e-9);
    EXPECT_THROW(merge_bins(hg, 3, 3), Error);
}

TEST(Region, SupportAndTies) {
    const BinGrid grid = BinGrid::uniform(20, 20, -5.0, 5.0);
    const AmplitudeHistogram g = histogram2d(gaussian_cloud(Complex(-2.0, 0.0), 0.3, 2000, 1), grid);
    AmplitudeHistogram e = g;
    e.density.setZero();
    const DecisionRegion only_g = decision_region(g, histogram2d({Complex(4.9, 4.9)}, grid));
    for (int ix = 0; ix < 20; ++ix)
        for (int iy = 0; iy < 20; ++iy) {
            if (g.density(ix, iy) > 0.0) {
                EXPECT_TRUE(only_g.at(ix, iy));
            }
        }
    const DecisionRegion same = decision_region(g, g);
    for (std::uint8_t m : same.mask) EXPECT_EQ(m, 1);
}

TEST(Region, PerpendicularBisector) {
    const BinGrid grid = BinGrid::uniform(60, 60, -12.0, 12.0);
    const AmplitudeHistogram g = histogram2d(gaussian_cloud(Complex(-2.0, 0.0), 1.0, 100000, 11), grid);
    const AmplitudeHistogram e = histogram2d(gaussian_cloud(Complex(2.0, 0.0), 1.0, 100000, 12), grid);
    const DecisionRegion r = decision_region(g, e);
    const double w = grid.x_edges[1] - grid.x_edges[0];
    for (int ix = 0; ix < grid.nx(); ++ix)
        for (int iy = 0; iy < grid.ny(); ++iy) {
            const double x = g.center_x(ix), y = g.center_y(iy);
            if (std::abs(y) > 1.5 || std::abs(x) > 4.0 || std::abs(x) <= w) continue;
            EXPECT_EQ(r.at(ix, iy), x < 0.0) << "bin at (" << x << ", " << y << ")";
        }
}

TEST(ErrorRates, SeparatedAndIdentical) {
    const BinGrid grid = BinGrid::standard();
    const auto sg = gaussian_cloud(Complex(-5.0, 0.0), 0.5, 5000, 1);
    const auto se = gaussian_cloud(Complex(5.0, 0.0), 0.5, 5000, 2);
    const DecisionRegion r = decision_region(histogram2d(sg, grid), histogram2d(se, grid));
    const ReadoutReport rep = error_rates(sg, se, r);
    EXPECT_EQ(rep.error_g, 0.0);
    EXPECT_EQ(rep.error_e, 0.0);
    EXPECT_EQ(rep.fidelity, 1.0);

    const DecisionRegion tie = decision_region(histogram2d(sg, grid), histogram2d(sg, grid));
    const ReadoutReport chance = error_rates(sg, sg, tie);
    EXPECT_DOUBLE_EQ(chance.fidelity, 0.5);
}

TEST(ErrorRates, FidelityIdentity) {
    const BinGrid grid = BinGrid::standard();
    const auto sg = gaussian_cloud(Complex(-1.0, 0.0), 1.5, 20000, 1);
    const auto se = gaussian_cloud(Complex(1.0, 0.5), 1.5, 20000, 2);
    const ReadoutReport rep = error_rates(sg, se, decision_region(histogram2d(sg, grid), histogram2d(se, grid)));
    EXPECT_EQ(rep.fidelity, 1.0 - (rep.error_g + rep.error_e) / 2.0);
    EXPECT_GE(rep.error_g, 0.0);
    EXPECT_LE(rep.error_e, 1.0);
}

TEST(ErrorRates, TrainingErrorNeverExceedsHeldOut) {
    const auto sg = gaussian_cloud(Complex(-1.5, 0.0), 1.0, 200000, 21);
    const auto se = gaussian_cloud(Complex(1.5, 0.0), 1.0, 200000, 22);
    const HeldOutReport h = held_out_error_rates(sg, se, BinGrid::standard());
    const double n = 100000.0;
    for (auto [train, test] : {std::pair{h.train.error_g, h.test.error_g}, std::pair{h.train.error_e, h.test.error_e}}) {
        const double sem = std::sqrt(test * (1.0 - test) / n);
        EXPECT_LE(train - test, 3.0 * sem) << train << " vs " << test;
    }
}

TEST(ErrorRates, QuarterTurnInvariance) {
    const BinGrid grid = BinGrid::standard();
    auto sg = gaussian_cloud(Complex(-1.0, 0.3), 1.5, 30000, 1);
    auto se = gaussian_cloud(Complex(1.0, 0.5), 1.5, 30000, 2);
    const double f0 = error_rates(sg, se, decision_region(histogram2d(sg, grid), histogram2d(se, grid))).fidelity;
    auto rotate = [](std::vector<Complex> v, Complex phase) {
        for (Complex& c : v) c *= phase;
        return v;
    };
    // A quarter turn maps the symmetric grid onto itself.
    const auto rg = rotate(sg, Complex(0.0, 1.0)), re = rotate(se, Complex(0.0, 1.0));
    const double f90 = error_rates(rg, re, decision_region(histogram2d(rg, grid), histogram2d(re, grid))).fidelity;
    EXPECT_NEAR(f90, f0, 1e-3);
    const Complex ph = std::polar(1.0, 0.65);
    const auto ag = rotate(sg, ph), ae = rotate(se, ph);
    const double fa = error_rates(ag, ae, decision_region(histogram2d(ag, grid), histogram2d(ae, grid))).fidelity;
    EXPECT_NEAR(fa, f0, 5e-3);
}

TEST(Qnd, TrivialCases) {
    std::vector<RunPair> agree = {{Branch::g, Branch::g, Branch::g}, {Branch::e, Branch::e, Branch::e}};
    EXPECT_EQ(qnd_probability(agree), 1.0);
    std::mt19937_64 rng(8);
    std::bernoulli_distribution coin(0.5);
    std::vector<RunPair> random;
    for (int k = 0; k < 40000; ++k) random.push_back({Branch::g, coin(rng) ? Branch::g : Branch::e, Branch::g});
    EXPECT_NEAR(qnd_probability(random), 0.5, 3.0 * std::sqrt(0.25 / 40000));
    try {
        qnd_probability({{Branch::e, Branch::e, Branch::g}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NoHeraldedPairs);
    }
}

TEST(Qnd, SequentialReadoutsClosedForm) {
    ExperimentConfig cfg;
    cfg.device.eta = 1.0;
    cfg.readout.thermal_errors = false;
    cfg.readout.pulse_errors = false;
    cfg.readout.qnd = true;
    cfg.readout.demolition_probability = 0.03;
    cfg.n_runs = 20000;
    const ReadoutResult r = run_readout(cfg);
    ASSERT_TRUE(r.report.qndness.has_value());
    // Ground runs repeat unless demolished. Excited runs heralded at release must
    // survive to the end of the first readout, avoid demolition and survive the
    // second load and interaction.
    const double t1 = cfg.device.t1;
    const double window = cfg.readout.displacement_time + cfg.t_int;
    const double pd = cfg.readout.demolition_probability;
    const double gap = cfg.readout.qnd_spacing - cfg.readout.measurement_time;
    const double repeat_g = 1.0 - pd;
    const double repeat_e = (1.0 - pd) * std::exp(-(cfg.readout.measurement_time - window + gap + window) / t1);
    const double heralded_e = std::exp(-window / t1);
    const double expected = (repeat_g + heralded_e * repeat_e) / (1.0 + heralded_e);
    EXPECT_NEAR(*r.report.qndness, expected, 0.01);
}
