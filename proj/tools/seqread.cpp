// Command-line runner for the readout simulations.

#include <filesystem>
#include <map>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "seqread/errors.hpp"
#include "seqread/experiment.hpp"

namespace {

struct CommonFlags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string format = "csv";
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config, "key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--threads", f.threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--format", f.format, "csv or csv+png")->check(CLI::IsMember({"csv", "csv+png"}));
}

seqread::ExperimentConfig resolve(const CommonFlags& f) {
    seqread::ExperimentConfig cfg = f.config.empty() ? seqread::ExperimentConfig{} : seqread::load_config(f.config);
    if (!f.out.empty()) cfg.output_dir = f.out;
    if (f.seed) cfg.seed = *f.seed;
    if (f.threads) cfg.threads = *f.threads;
    cfg.validate();
    return cfg;
}

int run(const std::string& command, const CommonFlags& flags) {
    using namespace seqread;
    const ExperimentConfig cfg = resolve(flags);
    const bool png = flags.format == "csv+png";

    if (command == "readout") {
        const ReadoutResult r = run_readout(cfg);
        write_readout_outputs(cfg, r, png);
        std::cout << readout_report_text(r);
    } else if (command == "sweep") {
        const auto cells = sweep_overlap(cfg, cfg.sweep.alpha0, cfg.sweep.t_int);
        write_sweep_outputs(cfg, cells, png);
        for (const SweepCell& c : cells)
            std::cout << "alpha0=" << format_number(c.alpha0) << " t_int_s=" << format_number(c.t_int)
                      << " overlap=" << format_number(c.overlap) << "\n";
    } else if (command == "release") {
        const ReleaseStudy study = run_release_study(cfg, cfg.release.sigma, cfg.release.g_max);
        write_release_outputs(cfg, study);
        std::cout << "remaining_fraction = " << format_number(remaining_fraction(cfg.pulse, cfg.device)) << "\n";
    } else if (command == "wigner") {
        const auto maps = run_wigner(cfg);
        write_wigner_outputs(cfg, maps, png);
        for (const WignerResult& w : maps)
            std::cout << "branch=" << to_char(w.branch) << " t_int_s=" << format_number(w.t_int)
                      << " min=" << format_number(w.map.min()) << " max=" << format_number(w.map.max()) << "\n";
    } else if (command == "calibrate") {
        const std::string text = key_value_report(run_calibration(cfg));
        std::filesystem::create_directories(cfg.output_dir);
        write_text(cfg.output_dir + "/calibration.txt", text);
        std::cout << text;
    } else if (command == "selfcheck") {
        bool ok = true;
        for (const CheckResult& c : run_selfcheck(cfg)) {
            std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
            ok = ok && c.passed;
        }
        return ok ? 0 : 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential cavity readout simulator"};
    app.require_subcommand(1);
    CommonFlags flags;
    for (const char* name : {"readout", "sweep", "release", "wigner", "calibrate", "selfcheck"}) {
        static const std::map<std::string, std::string> help = {
            {"readout", "simulate both preparations and report error rates"},
            {"sweep", "overlap over probe amplitude and interaction time"},
            {"release", "remaining fraction over pump width and strength"},
            {"wigner", "phase-space maps of the probe after the interaction"},
            {"calibrate", "synthetic calibration round trips"},
            {"selfcheck", "fast invariant suite"},
        };
        add_common(app.add_subcommand(name, help.at(name)), flags);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return run(app.get_subcommands().front()->get_name(), flags);
    } catch (const seqread::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.code() == seqread::ErrorCode::ConfigError) return 2;
        return e.is_numeric() ? 3 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
