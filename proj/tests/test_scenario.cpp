#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "wquench/io.hpp"
#include "wquench/scenario.hpp"

using namespace wq;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("wquench_scn_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

const char* kSmall = R"(
[scenario]
name = small
snapshot_times = 0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3, 0.4
[grid]
nx = 64
np = 64
[schedule]
type = quench
t_c = 0.2
omega2_before = 1
omega2_after = -1
D_before = 0.3
D_after = 0.1
[state]
kind = double_gaussian
L0 = 1
delta = 1
[evolution]
dt = 0.005
t_end = 0.4
sample_every = 2
)";

DiagnosticsSeries gamma_series(const std::vector<double>& t, const std::vector<double>& g) {
    DiagnosticsSeries s;
    for (std::size_t k = 0; k < t.size(); ++k) {
        DiagnosticsRecord r;
        r.t = t[k];
        r.gamma = g[k];
        s.records.push_back(r);
    }
    return s;
}

}  // namespace

TEST_CASE("parse a quench config") {
    const auto c = parse_config(kSmall);
    CHECK(c.name == "small");
    CHECK(c.grid.nx == 64);
    CHECK(c.grid.x_max == 8.0);  // default kept
    REQUIRE(c.quench.has_value());
    CHECK(c.quench->t_c == 0.2);
    CHECK(c.reference_time == 0.2);
    CHECK(c.schedule.at(0.25).D == 0.1);
    CHECK(c.state.kind == StateKind::DoubleGaussian);
    CHECK(c.evolution.dt == 0.005);
    CHECK(c.snapshot_times.size() == 8);
    CHECK(c.events.rise_factor == 10.0);
}

TEST_CASE("strict parser rejects typos") {
    CHECK_THROWS_AS(parse_config("[grid]\nnxx = 64\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[gird]\nnx = 64\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[grid]\nnx = sixty\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[schedule]\ntype = ramp\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[schedule]\ntype = breakpoints\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[schedule]\ntype = quench\nbreakpoints = 0:1:0.3\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[evolution]\ndt = -1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[state]\nkind = cat\n"), ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
}

TEST_CASE("breakpoint schedules") {
    const auto c = parse_config("[schedule]\ntype = breakpoints\nbreakpoints = 0:1:0.3, 1.5:-1:0.1, 3:-1:0.01\n");
    CHECK_FALSE(c.quench.has_value());
    CHECK(c.reference_time == 1.5);
    CHECK(c.schedule.at(2.0).omega2 == -1.0);
    CHECK(c.schedule.at(3.0).D == 0.01);
    const auto inverted = parse_config("[schedule]\ntype = breakpoints\nbreakpoints = 0:-1:0.01\n");
    CHECK(inverted.reference_time == 0.0);
    CHECK_THROWS_AS(parse_config("[schedule]\ntype = breakpoints\nbreakpoints = 0:1\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("[schedule]\ntype = breakpoints\nbreakpoints = 1:1:0.3, 0:1:0.3\n"), ConfigError);
}

TEST_CASE("json echo lists every effective parameter") {
    const auto j = nlohmann::json::parse(config_to_json(parse_config(kSmall)));
    for (const char* sec : {"scenario", "grid", "system", "schedule", "state", "evolution", "events"}) {
        CHECK(j.contains(sec));
    }
    CHECK(j["grid"]["x_min"] == -8.0);
    CHECK(j["system"]["lambda"] == 0.1);
    CHECK(j["evolution"]["integrator"] == "spectral");
    CHECK(j["evolution"].contains("wall_stiffness"));
    CHECK(j["evolution"].contains("fd_order"));
    CHECK(j["events"].contains("suppression_factor"));
    CHECK(j["state"].contains("P0"));
}

TEST_CASE("bundled configs parse") {
    const fs::path dir = WQ_CONFIG_DIR;
    for (const char* name : {"fig1", "fig2a", "fig2b", "fig4", "fig5a", "fig5b", "fig7"}) {
        const auto c = load_config(dir / (std::string(name) + ".ini"));
        CHECK(c.name == name);
    }
    CHECK(load_config(dir / "fig2a.ini").snapshot_times.size() == 8);
    CHECK(load_config(dir / "fig7.ini").evolution.wall_enabled);
}

TEST_CASE("event extraction on a synthetic series") {
    // decay, trough at t = 3, bump peaking at t = 4, decay
    std::vector<double> t, g;
    for (int k = 0; k <= 800; ++k) {
        const double s = 0.01 * k;
        t.push_back(s);
        const double decay = std::exp(-5.0 * s);
        const double bump = 0.2 * std::exp(-std::pow((s - 4.0) / 0.5, 2));
        g.push_back(decay + bump);
    }
    const auto ev = measure_events(gamma_series(t, g), 2.0, {});
    REQUIRE(ev.first_decay.has_value());
    CHECK(*ev.first_decay == doctest::Approx(0.2).epsilon(0.01));
    REQUIRE(ev.trough_time.has_value());
    CHECK(*ev.trough_time > 2.0);
    CHECK(*ev.trough_time < 3.2);
    REQUIRE(ev.t_max.has_value());
    CHECK(*ev.t_max == doctest::Approx(4.0).epsilon(0.01));
    CHECK(ev.peak_gamma == doctest::Approx(0.2).epsilon(1e-3));

    // the crossings of 0.01 and 0.2 e^-2 by the Gaussian bump, solved directly
    const double rev = 4.0 - 0.5 * std::sqrt(std::log(0.2 / ev.revival_threshold));
    const double sup = 4.0 + 0.5 * std::sqrt(std::log(0.2 / ev.suppression_threshold));
    CHECK(ev.revival_threshold == doctest::Approx(std::max(0.05 * ev.peak_gamma, 10 * ev.noise_floor)));
    CHECK(ev.suppression_threshold == doctest::Approx(std::exp(-2.0) * ev.peak_gamma));
    REQUIRE(ev.revival.has_value());
    REQUIRE(ev.suppression.has_value());
    CHECK(*ev.revival == doctest::Approx(rev).epsilon(2e-3));
    CHECK(*ev.suppression == doctest::Approx(sup).epsilon(2e-3));
}

TEST_CASE("flat series has no events") {
    std::vector<double> t, g;
    for (int k = 0; k <= 100; ++k) {
        t.push_back(0.01 * k);
        g.push_back(0.0);
    }
    const auto ev = measure_events(gamma_series(t, g), 0.5, {});
    CHECK_FALSE(ev.first_decay.has_value());
    CHECK_FALSE(ev.revival.has_value());
    CHECK_FALSE(ev.suppression.has_value());
}

TEST_CASE("run_scenario writes series, manifest and snapshots") {
    TempDir dir;
    const auto c = parse_config(kSmall);
    const auto out = run_scenario(c, dir.path);
    CHECK(out.directory == dir.path / "small");
    CHECK(fs::exists(out.directory / "series.csv"));
    CHECK(fs::exists(out.directory / "manifest.json"));
    REQUIRE(out.snapshots.size() == 8);
    for (const auto& p : out.snapshots) CHECK(fs::exists(p));
    CHECK(import_snapshot(out.snapshots[3]).time == doctest::Approx(0.15));

    // 0.4 / 0.005 = 80 steps, sampled every 2
    const auto series = import_timeseries(out.directory / "series.csv");
    REQUIRE(series.records.size() == 41);
    for (std::size_t k = 0; k < series.records.size(); ++k) {
        CHECK(series.records[k].t == doctest::Approx(0.01 * k).epsilon(1e-12));
    }

    std::ifstream in(out.directory / "manifest.json");
    const auto m = nlohmann::json::parse(in);
    CHECK(m["status"] == "ok");
    CHECK(m["code_version"] == code_version());
    CHECK(m["config"]["grid"]["nx"] == 64);
    CHECK(m["records"] == 41);
    CHECK(m.contains("timescales"));

    // re-reading the saved series reproduces the report
    CHECK(report_to_json(report_timescales(c, series)) == report_to_json(out.report));
}

TEST_CASE("runs are deterministic") {
    TempDir a, b;
    const auto c = parse_config(kSmall);
    const auto ra = run_scenario(c, a.path);
    const auto rb = run_scenario(c, b.path);
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        return std::string(std::istreambuf_iterator<char>(in), {});
    };
    CHECK(slurp(ra.directory / "series.csv") == slurp(rb.directory / "series.csv"));
    for (std::size_t k = 0; k < ra.snapshots.size(); ++k) CHECK(slurp(ra.snapshots[k]) == slurp(rb.snapshots[k]));
}

TEST_CASE("output root follows the environment") {
    ::setenv("WQ_OUTPUT_ROOT", "/tmp/elsewhere", 1);
    CHECK(output_root() == fs::path("/tmp/elsewhere"));
    ::unsetenv("WQ_OUTPUT_ROOT");
    CHECK(output_root("fallback") == fs::path("fallback"));
}

TEST_CASE("timescale report for a quench") {
    const auto c = parse_config(kSmall);
    std::vector<double> t, g;
    DiagnosticsSeries s;
    for (int k = 0; k <= 40; ++k) {
        DiagnosticsRecord r;
        r.t = 0.01 * k;
        r.gamma = std::exp(-r.t);
        r.sigma_p = 1.0 + r.t;
        s.records.push_back(r);
    }
    const auto rep = report_timescales(c, s);
    CHECK(rep.sigma_p_at_tc == doctest::Approx(1.2));
    CHECK(rep.estimates.Lambda == 2.0);
    CHECK(rep.estimates.chi == doctest::Approx(std::sqrt(10.0)));
    REQUIRE(rep.estimates.t_D1.has_value());
    CHECK(*rep.estimates.t_D1 == doctest::Approx(1.0 / 1.2));
    CHECK(rep.estimates.t_chi.value == doctest::Approx(0.2 + std::log(std::sqrt(10.0) * 1.2) / 2.0));
    CHECK(rep.estimates.sigma_c == doctest::Approx(std::sqrt(0.1)));
    CHECK_FALSE(rep.estimates.t_D2_lower_bound);
    CHECK_FALSE(format_report(rep).empty());
}
