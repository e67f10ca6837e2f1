#include "seqread/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <set>

#include "seqread/errors.hpp"
#include "seqread/parallel.hpp"
#include "seqread/random.hpp"
#include "seqread/release.hpp"

namespace seqread {

namespace {

// Stream tags keep the random sequences of different stages independent.
constexpr std::uint64_t kEventStream = 0x6576656e74ULL;
constexpr std::uint64_t kBetaStream = 0x62657461ULL;
constexpr std::uint64_t kSecondStream = 0x7365636fULL;
constexpr std::uint64_t kReferenceStream = 0x72656673ULL;

constexpr double kNever = std::numeric_limits<double>::infinity();

struct KeyMap {
    double t_int;
    double displacement;
    int n_bins;
    double bin;

    KeyMap(double t_int, double displacement, double t1_bin)
        : t_int(t_int), displacement(displacement),
          n_bins(t_int > 0.0 ? std::max(1, static_cast<int>(std::ceil(t_int / t1_bin - 1e-9))) : 0),
          bin(n_bins > 0 ? t_int / n_bins : 0.0) {}

    double window() const { return displacement + t_int; }

    // tau: e -> g jump time measured from the start of the probe load.
    int key(bool excited, double tau) const {
        if (!excited) return 0;
        if (tau >= window()) return 1;
        if (tau < displacement || n_bins == 0) return 0;
        const auto k = static_cast<int>(std::lround((tau - displacement) / bin));
        if (k <= 0) return 0;
        if (k >= n_bins) return 1;
        return 2 + k;
    }

    double jump_time(int key) const { return (key - 2) * bin; }
};

struct Draw {
    RunEvents events;
    bool second_excited_at_release = false;
};

Draw draw_events(const ExperimentConfig& cfg, const KeyMap& km, Branch prep, bool qnd, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const DeviceParams& d = cfg.device;
    const ReadoutOptions& ro = cfg.readout;
    Draw out;
    RunEvents& ev = out.events;

    ev.started_excited = ro.thermal_errors && u(rng) < d.thermal_excitation;
    ev.excited = ev.started_excited;
    if (prep == Branch::e) {
        ev.pulse_failed = ro.pulse_errors && u(rng) >= d.pi_pulse_fidelity;
        if (!ev.pulse_failed) ev.excited = !ev.excited;
    }
    const double tau = (ev.excited && ro.qubit_decay) ? sample_relaxation_time(d.t1, rng) : kNever;
    ev.relaxed = ev.excited && tau < km.window();
    ev.excited_at_release = ev.excited && !ev.relaxed;
    ev.state_key = km.key(ev.excited, tau);

    if (qnd) {
        bool excited = ev.excited && tau >= ro.measurement_time;
        if (u(rng) < ro.demolition_probability) excited = !excited;
        double tau2 = kNever;
        if (excited && ro.qubit_decay) {
            const double gap = std::max(0.0, ro.qnd_spacing - ro.measurement_time);
            const double remaining = sample_relaxation_time(d.t1, rng);
            if (remaining < gap) excited = false;
            else tau2 = remaining - gap;
        }
        ev.second_key = km.key(excited, tau2);
        out.second_excited_at_release = excited && tau2 >= km.window();
    }
    return out;
}

ReadoutState state_for_key(const ExperimentConfig& cfg, const KeyMap& km, const ReadoutState& probe, int key) {
    const bool decay = cfg.readout.cavity_decay;
    if (key == 0) return evolve_interaction(probe, Branch::g, km.t_int, cfg.device, decay);
    if (key == 1) return evolve_interaction(probe, Branch::e, km.t_int, cfg.device, decay);
    return evolve_with_relaxation(probe, km.t_int, km.jump_time(key), cfg.device, decay);
}

}  // namespace

int working_truncation(const ExperimentConfig& cfg, Complex alpha0) {
    return std::max(cfg.truncation, static_cast<int>(std::ceil(3.0 * std::norm(alpha0))) + 1);
}

BinGrid readout_grid(const ExperimentConfig& cfg) {
    return BinGrid::uniform(cfg.readout.hist_bins, cfg.readout.hist_bins, -cfg.readout.hist_range,
                            cfg.readout.hist_range);
}

Ensembles simulate_ensembles(const ExperimentConfig& cfg, const EnsembleRequest& req) {
    if (req.n_runs < 1) fail(ErrorCode::InvalidArgument, "need at least one run");
    cfg.device.validate();
    const KeyMap km(req.t_int, cfg.readout.displacement_time, cfg.readout.t1_bin);
    const int dim = working_truncation(cfg, req.alpha0);
    const ReadoutState probe = coherent_state(req.alpha0, dim);
    const auto n = static_cast<std::size_t>(req.n_runs);

    // Pass 1: imperfection events.
    std::vector<Draw> draws_g(n), draws_e(n);
    parallel_for(2 * n, req.threads, [&](std::size_t i) {
        const bool is_e = i >= n;
        const std::size_t run = is_e ? i - n : i;
        Rng rng = make_rng(req.seed, kEventStream + (is_e ? 1 : 0), run);
        (is_e ? draws_e : draws_g)[run] = draw_events(cfg, km, is_e ? Branch::e : Branch::g, req.qnd, rng);
    });

    // Pass 2: one Husimi sampler per distinct post-interaction state.
    std::set<int> needed = {0, 1};
    for (const auto* draws : {&draws_g, &draws_e})
        for (const Draw& d : *draws) {
            needed.insert(d.events.state_key);
            if (d.events.second_key) needed.insert(*d.events.second_key);
        }
    const std::vector<int> keys(needed.begin(), needed.end());
    std::vector<std::unique_ptr<HusimiSampler>> built(keys.size());
    std::vector<Complex> means(keys.size());
    parallel_for(keys.size(), req.threads, [&](std::size_t j) {
        const ReadoutState s = state_for_key(cfg, km, probe, keys[j]);
        means[j] = mean_field(s);
        built[j] = std::make_unique<HusimiSampler>(s);
    });
    std::map<int, const HusimiSampler*> sampler;
    for (std::size_t j = 0; j < keys.size(); ++j) sampler[keys[j]] = built[j].get();

    Ensembles out;
    std::optional<TraceModel> model;
    double noise_std = 0.0;
    if (req.path == MeasurementPath::trace) {
        model.emplace(cfg.pulse, cfg.device);
        out.weight = calibrate_demodulation(*model, means[0], means[1], req.alpha0, cfg.readout.reference_runs,
                                            derive_seed(req.seed, kReferenceStream));
        noise_std = model->calibrated_noise_std(*out.weight);
    }

    // Pass 3: measured amplitudes.
    auto measure = [&](int key, bool excited_at_release, Rng& rng) -> Complex {
        const HusimiSampler& s = *sampler.at(key);
        if (req.path == MeasurementPath::direct) return sample_measured_amplitude(s, cfg.device.eta, rng);
        const Complex r0 = s.sample(rng);
        const VoltageTrace v = model->trace(r0, excited_at_release ? Branch::e : Branch::g, noise_std, rng);
        return demodulate(v, *out.weight);
    };
    out.beta_g.resize(n);
    out.beta_e.resize(n);
    if (req.qnd) {
        out.second_g.resize(n);
        out.second_e.resize(n);
    }
    parallel_for(2 * n, req.threads, [&](std::size_t i) {
        const bool is_e = i >= n;
        const std::size_t run = is_e ? i - n : i;
        const Draw& d = (is_e ? draws_e : draws_g)[run];
        Rng rng = make_rng(req.seed, kBetaStream + (is_e ? 1 : 0), run);
        (is_e ? out.beta_e : out.beta_g)[run] = measure(d.events.state_key, d.events.excited_at_release, rng);
        if (req.qnd) {
            Rng rng2 = make_rng(req.seed, kSecondStream + (is_e ? 1 : 0), run);
            (is_e ? out.second_e : out.second_g)[run] = measure(*d.events.second_key, d.second_excited_at_release, rng2);
        }
    });

    if (req.path == MeasurementPath::trace) {
        Rng rng = make_rng(req.seed, kBetaStream, 0);
        out.example_trace = model->trace(sampler.at(draws_g[0].events.state_key)->sample(rng),
                                         draws_g[0].events.excited_at_release ? Branch::e : Branch::g, noise_std, rng);
    }
    out.events_g.reserve(n);
    out.events_e.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        out.events_g.push_back(draws_g[k].events);
        out.events_e.push_back(draws_e[k].events);
    }
    return out;
}

ReadoutResult run_readout(const ExperimentConfig& cfg) {
    cfg.validate();
    EnsembleRequest req;
    req.alpha0 = cfg.alpha0;
    req.t_int = cfg.t_int;
    req.n_runs = cfg.n_runs;
    req.seed = cfg.seed;
    req.threads = cfg.threads;
    req.path = cfg.measurement_path;
    req.qnd = cfg.readout.qnd;

    ReadoutResult r;
    r.ensembles = simulate_ensembles(cfg, req);
    const Ensembles& ens = r.ensembles;
    const BinGrid grid = readout_grid(cfg);
    r.hist_g = histogram2d(ens.beta_g, grid, cfg.threads);
    r.hist_e = histogram2d(ens.beta_e, grid, cfg.threads);
    const DecisionRegion region = decision_region(r.hist_g, r.hist_e);
    r.report = error_rates(ens.beta_g, ens.beta_e, region);
    r.report.overlap = overlap(r.hist_g, r.hist_e);
    r.report.n_runs = cfg.n_runs;

    const auto n = static_cast<double>(cfg.n_runs);
    ErrorBudget& b = r.budget;
    for (std::size_t k = 0; k < ens.beta_g.size(); ++k) {
        const RunEvents& ev = ens.events_g[k];
        b.thermal_g += ev.started_excited;
        if (!ev.excited && !region.in_g(ens.beta_g[k])) b.intrinsic_g += 1;
    }
    for (std::size_t k = 0; k < ens.beta_e.size(); ++k) {
        const RunEvents& ev = ens.events_e[k];
        const bool read_g = region.in_g(ens.beta_e[k]);
        b.thermal_e += ev.started_excited;
        b.pulse_failure_e += ev.pulse_failed;
        b.relaxation_e += ev.relaxed;
        if (!ev.excited && read_g) b.preparation_misread_e += 1;
        if (ev.relaxed && read_g) b.relaxation_misread_e += 1;
        if (ev.excited && !ev.relaxed && read_g) b.intrinsic_e += 1;
    }
    for (double* v : {&b.thermal_g, &b.thermal_e, &b.pulse_failure_e, &b.relaxation_e, &b.relaxation_misread_e,
                      &b.preparation_misread_e, &b.intrinsic_e, &b.intrinsic_g})
        *v /= n;

    if (cfg.readout.qnd) {
        std::vector<RunPair> pairs;
        pairs.reserve(2 * ens.beta_g.size());
        for (std::size_t k = 0; k < ens.beta_g.size(); ++k)
            pairs.push_back({classify(ens.beta_g[k], region), classify(ens.second_g[k], region), Branch::g});
        for (std::size_t k = 0; k < ens.beta_e.size(); ++k)
            pairs.push_back({classify(ens.beta_e[k], region), classify(ens.second_e[k], region), Branch::e});
        r.report.qndness = qnd_probability(pairs);
    }
    return r;
}

std::vector<SweepCell> sweep_overlap(const ExperimentConfig& cfg, const std::vector<double>& alpha0_list,
                                     const std::vector<double>& t_int_list) {
    if (alpha0_list.empty() || t_int_list.empty()) fail(ErrorCode::InvalidArgument, "sweep lists must be nonempty");
    std::vector<SweepCell> cells;
    for (double a : alpha0_list)
        for (double t : t_int_list) cells.push_back({a, t, 0.0});
    const BinGrid grid = readout_grid(cfg);
    parallel_for(cells.size(), cfg.threads, [&](std::size_t i) {
        EnsembleRequest req;
        req.alpha0 = cells[i].alpha0;
        req.t_int = cells[i].t_int;
        req.n_runs = cfg.sweep.n_runs;
        req.seed = derive_seed(cfg.seed, 0x7377656570ULL, i);
        req.threads = 1;
        const Ensembles ens = simulate_ensembles(cfg, req);
        cells[i].overlap = overlap(histogram2d(ens.beta_g, grid), histogram2d(ens.beta_e, grid));
    });
    return cells;
}

ReleaseStudy run_release_study(const ExperimentConfig& cfg, const std::vector<double>& sigma_list,
                               const std::vector<double>& g_max_list) {
    if (sigma_list.empty() || g_max_list.empty()) fail(ErrorCode::InvalidArgument, "release lists must be nonempty");
    ReleaseStudy study;
    for (double g : g_max_list)
        for (double s : sigma_list) study.cells.push_back({s, g, 0.0, true});
    parallel_for(study.cells.size(), cfg.threads, [&](std::size_t i) {
        ReleaseCell& c = study.cells[i];
        const PumpPulse pulse = PumpPulse::centered(c.g_max, c.sigma);
        c.remaining = remaining_fraction(pulse, cfg.device);
        c.validated = release_validated(pulse, cfg.device);
    });
    if (cfg.release.refit && sigma_list.size() >= 2) {
        for (double g : g_max_list) {
            if (g <= 0.0) continue;
            std::vector<double> fractions;
            for (const ReleaseCell& c : study.cells)
                if (c.g_max == g) fractions.push_back(c.remaining);
            study.refits.emplace_back(g, fit_effective_release(sigma_list, fractions, cfg.device, g));
        }
    }
    return study;
}

std::vector<WignerResult> run_wigner(const ExperimentConfig& cfg) {
    cfg.validate();
    const WignerGrid& grid = cfg.wigner.grid;
    const double reach = 2.0 * std::max(std::abs(grid.lo), std::abs(grid.hi)) * std::max(std::abs(grid.lo), std::abs(grid.hi));
    const int dim = std::max(working_truncation(cfg, cfg.alpha0), static_cast<int>(std::ceil(reach)));
    const ReadoutState probe = coherent_state(cfg.alpha0, dim);

    std::vector<WignerResult> out;
    for (double t : cfg.wigner.t_int) {
        for (Branch b : {Branch::g, Branch::e}) {
            const ReadoutState s = evolve_interaction(probe, b, t, cfg.device, cfg.readout.cavity_decay);
            WignerMap map;
            if (cfg.wigner.mode == WignerMode::direct) {
                map = wigner_direct(s, grid, cfg.threads);
            } else {
                ProtocolOptions po;
                po.n_shots = cfg.wigner.n_shots;
                po.exact_expectation = cfg.wigner.exact;
                po.readout_error_g = cfg.wigner.readout_error_g;
                po.readout_error_e = cfg.wigner.readout_error_e;
                po.seed = derive_seed(cfg.seed, b == Branch::g ? 0x67 : 0x65, out.size());
                po.threads = cfg.threads;
                map = wigner_protocol_sim(s, cfg.device, grid, po);
            }
            const double deg = b == Branch::g ? cfg.wigner.rotation_g_deg : cfg.wigner.rotation_e_deg;
            if (deg != 0.0) map = rotate_phase_space(map, deg * std::numbers::pi / 180.0);
            out.push_back({b, t, std::move(map)});
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> run_calibration(const ExperimentConfig& cfg) {
    cfg.validate();
    const CalibrationOptions& co = cfg.calibration;
    std::vector<std::pair<std::string, std::string>> r;
    auto add = [&](const std::string& k, double v) { r.emplace_back(k, format_number(v)); };

    std::vector<double> times;
    for (int k = 0; k < co.n_points; ++k) times.push_back(co.t_max * k / (co.n_points - 1));
    Rng rng = make_rng(cfg.seed, 0x63616cULL);
    const DecayCurve curve = simulate_decay_curve(co.nbar, cfg.device.kappa_r, times, co.noise, &rng);
    const PhotonCalibration pc = fit_photon_calibration(curve);
    add("photon.nbar_true", co.nbar);
    add("photon.nbar_fit", pc.nbar);
    add("photon.nbar_stderr", pc.nbar_stderr());
    add("photon.kappa_r_true_per_s", cfg.device.kappa_r);
    add("photon.kappa_r_fit_per_s", pc.kappa_r);
    add("photon.kappa_r_stderr_per_s", pc.kappa_stderr());

    const DetuningSeries series = simulate_detuning_series(co.nbar_list, cfg.device, 100e-9, cfg.truncation);
    const DispersiveFit df = fit_dispersive_and_kerr(series);
    add("dispersive.chi_true_rad_per_s", cfg.device.chi);
    add("dispersive.chi_fit_rad_per_s", df.chi);
    add("dispersive.kerr_g_true_rad_per_s", cfg.device.kerr_g);
    add("dispersive.kerr_g_fit_rad_per_s", df.kerr_g);
    add("dispersive.kerr_g_stderr_rad_per_s", df.kerr_g_stderr);
    add("dispersive.kerr_e_true_rad_per_s", cfg.device.kerr_e);
    add("dispersive.kerr_e_fit_rad_per_s", df.kerr_e);
    add("dispersive.kerr_e_stderr_rad_per_s", df.kerr_e_stderr);

    add("pulse.decay_single_35ns", pulse_fidelity_decay(1, 35e-9, cfg.device.t1, cfg.device.t2));

    const double pe = cfg.device.thermal_excitation;
    const std::array<Complex, 3> apexes = {Complex(-2.0, 0.0), Complex(2.0, 0.0), Complex(0.0, 3.0)};  // mV
    const ThermalSolution ts = solve_thermal_populations(thermal_responses({1.0 - pe, pe, 0.0}, apexes), apexes,
                                                         cfg.device.omega_q);
    add("thermal.p_g", ts.p_g);
    add("thermal.p_e", ts.p_e);
    add("thermal.p_f", ts.p_f);
    add("thermal.temperature_k", ts.temperature);
    return r;
}

std::vector<CheckResult> run_selfcheck(const ExperimentConfig& cfg) {
    std::vector<CheckResult> out;
    auto check = [&](const std::string& name, auto&& fn) {
        try {
            const auto [ok, detail] = fn();
            out.push_back({name, ok, detail});
        } catch (const std::exception& e) {
            out.push_back({name, false, e.what()});
        }
    };
    const DeviceParams& d = cfg.device;

    check("loss channel preserves trace", [] {
        Rng rng(7);
        std::normal_distribution<double> nd;
        double worst = 0.0;
        for (int k = 0; k < 50; ++k) {
            CVector v(12);
            for (int i = 0; i < 12; ++i) v[i] = Complex(nd(rng), nd(rng));
            v.normalize();
            const ReadoutState s = apply_loss_channel(ReadoutState::pure(v), 0.3 + 0.01 * k);
            worst = std::max(worst, std::abs(s.density().trace().real() - 1.0));
        }
        return std::pair{worst < 1e-9, "max trace error " + format_number(worst)};
    });
    check("displacement is unitary", [] {
        const CMatrix m = displacement_operator(Complex(1.5, -0.7), 40).matrix();
        const double err = (m.adjoint() * m - CMatrix::Identity(40, 40)).cwiseAbs().maxCoeff();
        return std::pair{err < 1e-6, "max deviation " + format_number(err)};
    });
    check("critical conversion rate", [&] {
        const double g = d.kappa_b / 4.0;
        const double err = std::abs(conversion_rate(g, d.kappa_b) - d.kappa_b / 2.0);
        return std::pair{err <= 1e-9 * d.kappa_b, "deviation " + format_number(err)};
    });
    check("closed beam splitter conserves energy", [&] {
        DeviceParams closed = d;
        closed.kappa_r = closed.kappa_b = 0.0;
        const ModeTrajectory t = classical_release(Complex(2.0, 1.0), cfg.pulse, closed);
        double worst = 0.0;
        for (std::size_t k = 0; k < t.times.size(); ++k)
            worst = std::max(worst, std::abs(std::norm(t.r_amp[k]) + std::norm(t.b_amp[k]) - 5.0) / 5.0);
        return std::pair{worst < 1e-9, "max relative drift " + format_number(worst)};
    });
    check("dispersive rotation", [&] {
        DeviceParams p = d;
        p.kerr_g = p.kerr_e = 0.0;
        const Complex m = mean_field(evolve_interaction(coherent_state(2.0, 40), Branch::e, 200e-9, p, false));
        const double err = std::abs(std::arg(m) - std::remainder(p.chi * 200e-9, kTwoPi));
        return std::pair{err < 1e-8, "phase error " + format_number(err)};
    });
    check("vacuum Wigner peak", [] {
        WignerGrid g{3, 3, -1.0, 1.0};
        const double w0 = wigner_direct(ReadoutState::fock(0, 10), g).at(1, 1);
        return std::pair{std::abs(w0 - 2.0 / std::numbers::pi) < 1e-6, "W(0) = " + format_number(w0)};
    });
    check("pulse decay", [&] {
        const double f = pulse_fidelity_decay(1, 35e-9, d.t1, d.t2);
        return std::pair{std::abs(f - 0.995) <= 0.001, "F = " + format_number(f)};
    });
    check("thermal solver on simplex", [&] {
        const std::array<Complex, 3> apexes = {Complex(-2, 0), Complex(2, 0), Complex(0, 3)};
        const ThermalSolution s =
            solve_thermal_populations(thermal_responses({0.9, 0.07, 0.03}, apexes), apexes, d.omega_q);
        const double err = std::abs(s.p_g - 0.9) + std::abs(s.p_e - 0.07) + std::abs(s.p_f - 0.03);
        return std::pair{err < 1e-9, "population error " + format_number(err)};
    });
    check("readout determinism", [&] {
        ExperimentConfig c = cfg;
        c.n_runs = 500;
        c.threads = 1;
        const ReadoutResult a = run_readout(c);
        c.threads = 2;
        const ReadoutResult b = run_readout(c);
        const bool same = a.ensembles.beta_g == b.ensembles.beta_g && a.ensembles.beta_e == b.ensembles.beta_e;
        return std::pair{same, same ? "identical samples" : "samples differ"};
    });
    check("CSV round trip", [] {
        CsvTable t{schema::sweep, {{format_number(0.1), format_number(1e-7), format_number(1.0 / 3.0)}}};
        const std::string once = t.to_string();
        const std::string twice = CsvTable::parse(once).to_string();
        return std::pair{once == twice && CsvTable::parse(once).number(0, 2) == 1.0 / 3.0, "parse-emit identity"};
    });
    return out;
}

namespace {

std::filesystem::path prepare_dir(const ExperimentConfig& cfg) {
    std::filesystem::path dir(cfg.output_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::InvalidArgument, "cannot create output directory '" + cfg.output_dir + "'");
    return dir;
}

std::vector<double> histogram_raster(const AmplitudeHistogram& h) {
    std::vector<double> v(static_cast<std::size_t>(h.grid.nx()) * h.grid.ny());
    for (int iy = 0; iy < h.grid.ny(); ++iy)
        for (int ix = 0; ix < h.grid.nx(); ++ix) v[static_cast<std::size_t>(iy) * h.grid.nx() + ix] = h.density(ix, iy);
    return v;
}

std::string nanoseconds_tag(double t) {
    return std::to_string(static_cast<long>(std::lround(t * 1e9))) + "ns";
}

}  // namespace

std::string readout_report_text(const ReadoutResult& r) {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"overlap", format_number(r.report.overlap)},
        {"error_g", format_number(r.report.error_g)},
        {"error_e", format_number(r.report.error_e)},
        {"fidelity", format_number(r.report.fidelity)},
        {"n_runs", std::to_string(r.report.n_runs)},
        {"budget.thermal_g", format_number(r.budget.thermal_g)},
        {"budget.intrinsic_g", format_number(r.budget.intrinsic_g)},
        {"budget.thermal_e", format_number(r.budget.thermal_e)},
        {"budget.pulse_failure_e", format_number(r.budget.pulse_failure_e)},
        {"budget.relaxation_e", format_number(r.budget.relaxation_e)},
        {"budget.relaxation_misread_e", format_number(r.budget.relaxation_misread_e)},
        {"budget.preparation_misread_e", format_number(r.budget.preparation_misread_e)},
        {"budget.intrinsic_e", format_number(r.budget.intrinsic_e)},
    };
    if (r.report.qndness) kv.emplace_back("qndness", format_number(*r.report.qndness));
    return key_value_report(kv);
}

void write_readout_outputs(const ExperimentConfig& cfg, const ReadoutResult& r, bool png) {
    const auto dir = prepare_dir(cfg);
    write_text((dir / "report.txt").string(), readout_report_text(r));
    write_text((dir / "config_used.txt").string(), dump_config(cfg));
    write_csv((dir / "histogram_g.csv").string(), histogram_table(r.hist_g));
    write_csv((dir / "histogram_e.csv").string(), histogram_table(r.hist_e));
    std::vector<BetaRecord> records;
    records.reserve(r.ensembles.beta_g.size() + r.ensembles.beta_e.size());
    for (std::size_t k = 0; k < r.ensembles.beta_g.size(); ++k)
        records.push_back({r.ensembles.beta_g[k], Branch::g, static_cast<long>(k)});
    for (std::size_t k = 0; k < r.ensembles.beta_e.size(); ++k)
        records.push_back({r.ensembles.beta_e[k], Branch::e, static_cast<long>(k)});
    write_csv((dir / "beta_samples.csv").string(), beta_table(records));
    if (r.ensembles.weight) write_csv((dir / "weight.csv").string(), weight_table(*r.ensembles.weight));
    if (r.ensembles.example_trace) write_csv((dir / "trace_example.csv").string(), trace_table(*r.ensembles.example_trace));
    if (png) {
        write_png_heatmap((dir / "histogram_g.png").string(), histogram_raster(r.hist_g), r.hist_g.grid.nx(),
                          r.hist_g.grid.ny(), false);
        write_png_heatmap((dir / "histogram_e.png").string(), histogram_raster(r.hist_e), r.hist_e.grid.nx(),
                          r.hist_e.grid.ny(), false);
    }
}

void write_sweep_outputs(const ExperimentConfig& cfg, const std::vector<SweepCell>& cells, bool png) {
    const auto dir = prepare_dir(cfg);
    CsvTable t{schema::sweep, {}};
    for (const SweepCell& c : cells)
        t.rows.push_back({format_number(c.alpha0), format_number(c.t_int), format_number(c.overlap)});
    write_csv((dir / "sweep.csv").string(), t);
    if (png) {
        const int na = static_cast<int>(cfg.sweep.alpha0.size()), nt = static_cast<int>(cfg.sweep.t_int.size());
        if (static_cast<std::size_t>(na) * nt == cells.size()) {
            std::vector<double> v(cells.size());
            for (int ia = 0; ia < na; ++ia)
                for (int it = 0; it < nt; ++it)
                    v[static_cast<std::size_t>(ia) * nt + it] = cells[static_cast<std::size_t>(ia) * nt + it].overlap;
            write_png_heatmap((dir / "sweep.png").string(), v, nt, na, false);
        }
    }
}

void write_release_outputs(const ExperimentConfig& cfg, const ReleaseStudy& study) {
    const auto dir = prepare_dir(cfg);
    CsvTable t{schema::release, {}};
    for (const ReleaseCell& c : study.cells)
        t.rows.push_back({format_number(c.sigma), format_number(c.g_max), format_number(c.remaining),
                          c.validated ? "true" : "false"});
    write_csv((dir / "release.csv").string(), t);

    const PumpPulse& p = cfg.pulse;
    ReleaseBudget budget;
    const ModeTrajectory traj = classical_release(Complex(1.0, 0.0), p, cfg.device, &budget);
    write_csv((dir / "trajectory.csv").string(), trajectory_table(traj));
    std::vector<std::pair<std::string, std::string>> kv = {
        {"pulse.g_max_rad_per_s", format_number(p.g_max)},
        {"pulse.sigma_s", format_number(p.sigma)},
        {"remaining_fraction", format_number(budget.remaining)},
        {"buffer_fraction", format_number(budget.buffer)},
        {"emitted_fraction", format_number(budget.emitted)},
        {"internal_loss_fraction", format_number(budget.internal_loss)},
        {"energy_residual", format_number(budget.residual())},
        {"validated", release_validated(p, cfg.device) ? "true" : "false"},
    };
    for (const auto& [g, fit] : study.refits) {
        const std::string tag = "refit." + format_number(g);
        kv.emplace_back(tag + ".kappa_b_eff_per_s", format_number(fit.kappa_b_eff));
        kv.emplace_back(tag + ".g_max_eff_rad_per_s", format_number(fit.g_max_eff));
        kv.emplace_back(tag + ".chi2", format_number(fit.chi2));
    }
    write_text((dir / "release_report.txt").string(), key_value_report(kv));
}

void write_wigner_outputs(const ExperimentConfig& cfg, const std::vector<WignerResult>& maps, bool png) {
    const auto dir = prepare_dir(cfg);
    for (const WignerResult& w : maps) {
        const std::string stem = std::string("wigner_") + to_char(w.branch) + "_" + nanoseconds_tag(w.t_int);
        write_csv((dir / (stem + ".csv")).string(), wigner_table(w.map));
        if (png) write_png_heatmap((dir / (stem + ".png")).string(), w.map.values, w.map.grid.nx, w.map.grid.ny, true);
    }
}

}  // namespace seqread
