// wquench - run quench scenarios, compare time scales, solve the double-well spectrum

#include <atomic>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "wquench/io.hpp"
#include "wquench/scenario.hpp"
#include "wquench/spectrum.hpp"

namespace {

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kIo = 3 };

int run_one(const std::string& path, const std::filesystem::path& root, std::mutex& print) {
    try {
        const auto config = wq::load_config(path);
        const auto outcome = wq::run_scenario(config, root);
        std::lock_guard lock(print);
        std::cout << config.name << ": " << outcome.series.records.size() << " samples in "
                  << outcome.directory.string() << " (" << outcome.series.wall_clock_seconds << " s)\n"
                  << wq::format_report(outcome.report);
        return kOk;
    } catch (const wq::BlowUpError& e) {
        std::lock_guard lock(print);
        std::cerr << path << ": numerical blow-up: " << e.what() << '\n';
        return kNumerical;
    } catch (const wq::IoError& e) {
        std::lock_guard lock(print);
        std::cerr << path << ": " << e.what() << '\n';
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::lock_guard lock(print);
        std::cerr << path << ": " << e.what() << '\n';
        return kConfig;
    }
}

int cmd_run(const std::vector<std::string>& configs, const std::string& root_opt, int jobs) {
    const std::filesystem::path root = root_opt.empty() ? wq::output_root() : std::filesystem::path(root_opt);
    std::mutex print;
    std::vector<int> codes(configs.size(), kOk);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < configs.size(); k = next++) codes[k] = run_one(configs[k], root, print);
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < jobs; ++w) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    int worst = kOk;
    for (int c : codes) worst = std::max(worst, c);
    return worst;
}

int cmd_timescales(const std::string& config_path, const std::string& series_path, bool json) {
    const auto config = wq::load_config(config_path);
    const auto series = wq::import_timeseries(series_path);
    const auto report = wq::report_timescales(config, series);
    std::cout << (json ? wq::report_to_json(report) + "\n" : wq::format_report(report));
    return kOk;
}

void print_spectrum(const char* title, const wq::SpectrumResult& r) {
    std::printf("%s\n", title);
    std::printf("  barrier height %.17g, well minimum %.17g\n", r.barrier_height, r.well_minimum);
    std::printf("  states below barrier %d, pairs below barrier %d\n", r.states_below_barrier, r.pairs_below_barrier);
    std::printf("  domain +-%.4f, %zu points per parity block, doubling change %.3e\n", r.half_width, r.points,
                r.max_relative_change);
    for (std::size_t n = 0; n < r.eigenvalues.size(); ++n) {
        std::printf("  E_%-2zu = %+.15f  %s\n", n, r.eigenvalues[n], r.parity[n] > 0 ? "even" : "odd");
    }
    for (std::size_t k = 0; k < r.splittings.size(); ++k) {
        std::printf("  dE_%-2zu = %.6e  tunneling time %.6e\n", k, r.splittings[k], wq::tunneling_time(r.splittings[k]));
    }
}

int cmd_spectrum(double omega0_sq, double lambda, double mass, int states, const std::string& method,
                 double tolerance) {
    wq::SolverGrid grid;
    grid.tolerance = tolerance;
    if (method == "dvr") {
        grid.method = wq::SpectrumMethod::SincDvr;
    } else if (method == "fd") {
        grid.method = wq::SpectrumMethod::FiniteDifference;
    } else {
        throw wq::ConfigError("unknown spectrum method '" + method + "' (dvr or fd)");
    }
    try {
        print_spectrum("V = -M w^2 x^2/2 + lambda x^4/4", wq::double_well_spectrum(omega0_sq, lambda, mass, states, grid));
        // same well written with a quartic lambda x^4 / 8
        print_spectrum("V = -M w^2 x^2/2 + lambda x^4/8",
                       wq::double_well_spectrum(omega0_sq, lambda / 2.0, mass, states, grid));
    } catch (const wq::SpectrumNotConverged& e) {
        std::cerr << e.what() << " (last change " << e.change() << ")\n";
        return kNumerical;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wigner-function quench simulator"};
    app.set_version_flag("--version", wq::code_version());
    app.require_subcommand(1);

    std::vector<std::string> configs;
    std::string root;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "run one or more scenario configs");
    run->add_option("config", configs, "scenario config files")->required()->check(CLI::ExistingFile);
    run->add_option("--output-root", root, "output root (default: $WQ_OUTPUT_ROOT or ./output)");
    run->add_option("-j,--jobs", jobs, "scenarios run concurrently")->check(CLI::PositiveNumber);

    std::string ts_config, ts_series;
    bool ts_json = false;
    auto* ts = app.add_subcommand("timescales", "estimates and measured events for a saved series");
    ts->add_option("config", ts_config)->required()->check(CLI::ExistingFile);
    ts->add_option("series", ts_series)->required()->check(CLI::ExistingFile);
    ts->add_flag("--json", ts_json, "print JSON instead of a table");

    double omega0_sq = 1.0, lambda = 0.1, mass = 1.0, tolerance = 1e-8;
    int states = 16;
    std::string method = "dvr";
    auto* sp = app.add_subcommand("spectrum", "double-well levels and tunneling splittings");
    sp->add_option("--omega0-sq", omega0_sq, "Omega_0^2 (> 0)")->capture_default_str();
    sp->add_option("--lambda", lambda, "quartic coupling")->capture_default_str();
    sp->add_option("--mass", mass)->capture_default_str();
    sp->add_option("--states", states, "number of levels (>= 14)")->capture_default_str();
    sp->add_option("--method", method, "dvr or fd")->capture_default_str();
    sp->add_option("--tolerance", tolerance, "grid-doubling tolerance")->capture_default_str();

    std::string val_config;
    auto* val = app.add_subcommand("validate", "parse a config and print the effective parameters");
    val->add_option("config", val_config)->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*run) return cmd_run(configs, root, jobs);
        if (*ts) return cmd_timescales(ts_config, ts_series, ts_json);
        if (*sp) return cmd_spectrum(omega0_sq, lambda, mass, states, method, tolerance);
        if (*val) {
            std::cout << wq::config_to_json(wq::load_config(val_config)) << '\n';
            return kOk;
        }
    } catch (const wq::IoError& e) {
        std::cerr << e.what() << '\n';
        return kIo;
    } catch (const std::invalid_argument& e) {
        std::cerr << e.what() << '\n';
        return kConfig;
    } catch (const wq::BlowUpError& e) {
        std::cerr << "numerical blow-up: " << e.what() << '\n';
        return kNumerical;
    }
    return kOk;
}
