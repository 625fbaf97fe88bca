#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "oracles.hpp"
#include "wquench/diagnostics.hpp"
#include "wquench/engine.hpp"
#include "wquench/states.hpp"

using namespace wq;

namespace {

double linf(const std::vector<double>& a, const std::vector<double>& b) {
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
    return e;
}

double max_abs(const std::vector<double>& a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

// Sum of a few random Gaussian blobs well inside the box.
WignerField random_smooth_field(const PhaseSpaceGrid& g, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> c(-3.0, 3.0), wdist(0.6, 1.4), amp(-1.0, 1.0);
    WignerField f(g);
    for (int b = 0; b < 5; ++b) {
        const double x0 = c(rng), p0 = c(rng), sx = wdist(rng), sp = wdist(rng), a = amp(rng);
        for (std::size_t i = 0; i < g.nx(); ++i) {
            for (std::size_t j = 0; j < g.np(); ++j) {
                const double dx = (g.x(i) - x0) / sx, dp = (g.p(j) - p0) / sp;
                f.at(i, j) += a * std::exp(-0.5 * (dx * dx + dp * dp));
            }
        }
    }
    return f;
}

WignerField evolve_to(WignerField w, const SystemParams& params, double omega2, double D, double t_end,
                      EvolutionConfig cfg) {
    cfg.t_end = t_end;
    cfg.sample_every = 1000000;
    return evolve(std::move(w), params, GeneralSchedule({{0.0, omega2, D}}), cfg).final_field;
}

}  // namespace

TEST_CASE("symmetric Gaussian is stationary in the harmonic flow") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    WignerField w(g);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) w.at(i, j) = std::exp(-(g.x(i) * g.x(i) + g.p(j) * g.p(j))) / kPi;
    }
    const auto r = rhs(w, {1.0, 0.0, 1.0}, 0.0);
    CHECK(max_abs(r) < 1e-8);
}

TEST_CASE("quartic terms of the rhs match their closed form on a Gaussian") {
    // W = exp(-x^2 - p^2 / s2): dW/dp = -2p/s2 W, d3W/dp3 = (12 p / s2^2 - 8 p^3 / s2^3) W
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    const double s2 = 1.5, lambda = 0.1;
    WignerField w(g);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) w.at(i, j) = std::exp(-g.x(i) * g.x(i) - g.p(j) * g.p(j) / s2);
    }
    EvolutionConfig cfg;
    cfg.dealias = false;
    const auto with = rhs(w, {1.0, lambda, -1.0}, 0.0, cfg);
    const auto without = rhs(w, {1.0, 0.0, -1.0}, 0.0, cfg);
    double err = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double x = g.x(i);
        for (std::size_t j = 0; j < g.np(); ++j) {
            const double p = g.p(j), W = w.at(i, j);
            const double d1 = -2 * p / s2 * W;
            const double d3 = (12 * p / (s2 * s2) - 8 * p * p * p / (s2 * s2 * s2)) * W;
            const double expected = lambda * x * x * x * d1 - lambda / 4 * x * d3;
            err = std::max(err, std::abs(with[g.index(i, j)] - without[g.index(i, j)] - expected));
            scale = std::max(scale, std::abs(expected));
        }
    }
    CHECK(err < 1e-8 * scale);
}

TEST_CASE("diffusion term alone is D d2W/dp2") {
    const auto g = build_grid(64, 128, -8, 8, -8, 8);
    WignerField w(g);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) w.at(i, j) = std::exp(-g.x(i) * g.x(i) - g.p(j) * g.p(j));
    }
    EvolutionConfig cfg;
    cfg.dealias = false;
    const auto a = rhs(w, {1.0, 0.0, 0.0}, 0.3, cfg);
    const auto b = rhs(w, {1.0, 0.0, 0.0}, 0.0, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) {
            const double p = g.p(j);
            const double expected = 0.3 * (4 * p * p - 2) * w.at(i, j);
            err = std::max(err, std::abs(a[g.index(i, j)] - b[g.index(i, j)] - expected));
        }
    }
    CHECK(err < 1e-9);
}

TEST_CASE("rhs conserves mass for random smooth fields") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    for (unsigned seed : {1u, 2u, 3u}) {
        const auto w = random_smooth_field(g, seed);
        for (bool dealias : {true, false}) {
            EvolutionConfig cfg;
            cfg.dealias = dealias;
            const auto r = rhs(w, {1.0, 0.1, -1.0}, 0.3, cfg);
            double total = 0.0;
            for (double v : r) total += v;
            CHECK(std::abs(total * g.cell_area()) < 1e-10);
        }
    }
}

TEST_CASE("harmonic flow rotates clockwise") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    const auto w0 = wigner_gaussian(g, 2.0, 0.0, 1.0);
    const auto w = evolve_to(w0, {1.0, 0.0, 1.0}, 1.0, 0.0, kPi / 2, {});
    const auto m = moments(w);
    const auto expect = oracle::harmonic_flow(2.0, 0.0, kPi / 2);
    CHECK(m.mean_x == doctest::Approx(expect[0]).epsilon(1e-6).scale(1.0));
    CHECK(m.mean_p == doctest::Approx(expect[1]).epsilon(1e-6).scale(1.0));
    CHECK(m.mean_p < -1.9);  // (2, 0) moved to (0, -2)
}

TEST_CASE("harmonic oscillator returns after one period" * doctest::timeout(300)) {
    const auto g = build_grid(256, 256, -8, 8, -8, 8);
    const auto w0 = wigner_double_gaussian(g, 2.0, 0.0, 1.0);
    const auto w = evolve_to(w0, {1.0, 0.0, 1.0}, 1.0, 0.0, 2 * kPi, {});
    CHECK(linf(w.values, w0.values) < 1e-4);
}

TEST_CASE("finite-difference oracle also returns after one period") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    const auto w0 = wigner_gaussian(g, 2.0, 0.0, 1.0);
    EvolutionConfig cfg;
    cfg.integrator = Integrator::FiniteDifferenceOracle;
    cfg.fd_order = 4;
    cfg.dt = 2e-3;
    const auto w = evolve_to(w0, {1.0, 0.0, 1.0}, 1.0, 0.0, 2 * kPi, cfg);
    CHECK(linf(w.values, w0.values) < 1e-2 * max_abs(w0.values));
}

TEST_CASE("a zero step is the identity") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    const auto w0 = wigner_gaussian(g, 1.0, 0.5, 1.0);
    for (auto integ : {Integrator::Spectral, Integrator::SpectralRk4, Integrator::FiniteDifferenceOracle}) {
        EvolutionConfig cfg;
        cfg.integrator = integ;
        CHECK(step(w0, {1.0, 0.1, -1.0}, 0.3, 0.0, cfg).values == w0.values);
    }
    CHECK(oracle_step_fd(w0, {1.0, 0.1, -1.0}, 0.3, 0.0).values == w0.values);
}

TEST_CASE("zero-length evolution returns the input") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    auto w0 = wigner_gaussian(g, 1.0, 0.5, 1.0);
    w0.time = 1.5;
    EvolutionConfig cfg;
    cfg.t_end = 1.5;
    const auto res = evolve(w0, {1.0, 0.1, 1.0}, GeneralSchedule({{0.0, 1.0, 0.3}}), cfg);
    CHECK(res.final_field.values == w0.values);
    CHECK(res.final_field.time == 1.5);
    CHECK(res.series.records.size() == 1);
}

TEST_CASE("exponential integrator agrees with classical RK4 at small steps") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    const auto w0 = wigner_double_gaussian(build_grid(64, 64, -8, 8, -8, 8), 1.0, 0.0, 1.0);
    EvolutionConfig lawson, rk4;
    rk4.integrator = Integrator::SpectralRk4;
    lawson.dt = rk4.dt = 2e-4;
    const SystemParams params{1.0, 0.1, -1.0};
    const auto a = evolve_to(w0, params, -1.0, 0.3, 0.2, lawson);
    const auto b = evolve_to(w0, params, -1.0, 0.3, 0.2, rk4);
    CHECK(linf(a.values, b.values) < 1e-5 * max_abs(w0.values));
    (void)g;
}

TEST_CASE("moments follow the closed moment equations" * doctest::timeout(300)) {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    for (double omega2 : {1.0, -1.0}) {
        const auto w0 = wigner_gaussian(g, 0.5, 0.2, 1.0);
        const auto m0 = moments(w0);
        oracle::MomentState s{m0.mean_x, m0.mean_p, m0.var_x + m0.mean_x * m0.mean_x,
                              m0.cov_xp + m0.mean_x * m0.mean_p, m0.var_p + m0.mean_p * m0.mean_p};
        const double t_end = omega2 > 0 ? 2.0 : 1.0;
        const auto w = evolve_to(w0, {1.0, 0.0, omega2}, omega2, 0.3, t_end, {});
        const auto m = moments(w);
        const auto ref = oracle::integrate_moments(s, omega2, 0.3, 0.0, t_end);
        CHECK(m.mean_x == doctest::Approx(ref[0]).epsilon(1e-3));
        CHECK(m.mean_p == doctest::Approx(ref[1]).epsilon(1e-3));
        CHECK(m.var_x + m.mean_x * m.mean_x == doctest::Approx(ref[2]).epsilon(1e-3));
        CHECK(m.var_p + m.mean_p * m.mean_p == doctest::Approx(ref[4]).epsilon(1e-3));
    }
}

TEST_CASE("quench dynamics keeps the point symmetry of the double Gaussian") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    const auto w0 = wigner_double_gaussian(g, 2.0, 0.0, 1.0);
    EvolutionConfig cfg;
    cfg.t_end = 1.0;
    cfg.sample_every = 100000;
    const auto w = evolve(w0, {1.0, 0.1, 1.0}, GeneralSchedule({{0.0, 1.0, 0.3}, {0.5, -1.0, 0.3}}), cfg).final_field;
    double err = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) {
            err = std::max(err, std::abs(w.at(i, j) - w.at(g.nx() - 1 - i, g.np() - 1 - j)));
        }
    }
    CHECK(err < 1e-8);
}

TEST_CASE("evolution is bitwise deterministic") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    const auto w0 = wigner_double_gaussian(build_grid(64, 64, -8, 8, -8, 8), 1.0, 0.0, 1.0);
    const auto a = evolve_to(w0, {1.0, 0.1, -1.0}, -1.0, 0.3, 0.5, {});
    const auto b = evolve_to(w0, {1.0, 0.1, -1.0}, -1.0, 0.3, 0.5, {});
    CHECK(a.values == b.values);
    (void)g;
}

TEST_CASE("step boundaries land on schedule switches") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    EvolutionConfig cfg;
    cfg.dt = 3e-3;
    cfg.t_end = 0.1;
    cfg.sample_every = 1;
    const auto res = evolve(wigner_gaussian(g, 0, 0, 1.0), {1.0, 0.1, 1.0},
                            GeneralSchedule({{0.0, 1.0, 0.3}, {0.05, -1.0, 0.1}}), cfg);
    bool hit = false;
    for (const auto& r : res.series.records) hit = hit || std::abs(r.t - 0.05) < 1e-15;
    CHECK(hit);
    CHECK(res.series.records.back().t == 0.1);
}

TEST_CASE("engine errors") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    const auto w0 = wigner_gaussian(g, 0, 0, 1.0);
    EvolutionConfig cfg;
    cfg.t_end = 2.0;
    CHECK_THROWS_AS(evolve(w0, {1.0, 0.1, 1.0}, GeneralSchedule({{0.0, 1.0, 0.3}}, 1.0), cfg), ConfigError);

    EvolutionConfig rk4;
    rk4.integrator = Integrator::SpectralRk4;
    rk4.dt = 0.1;
    CHECK(stability_number(g, {1.0, 0.1, -1.0}, 0.3, 0.1, rk4) > 1.0);
    CHECK_THROWS_AS(step(w0, {1.0, 0.1, -1.0}, 0.3, 0.1, rk4), ConfigError);
    CHECK(stability_number(build_grid(256, 256, -8, 8, -8, 8), {1.0, 0.1, -1.0}, 0.3, 1e-3, {}) <= 1.0);

    auto bad = w0;
    bad.values[100] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step(bad, {1.0, 0.1, 1.0}, 0.3, 1e-3), BlowUpError);

    EvolutionConfig invalid;
    invalid.dt = -1.0;
    CHECK_THROWS_AS(invalid.validate(), ConfigError);
    invalid = {};
    invalid.fd_order = 3;
    CHECK_THROWS_AS(invalid.validate(), ConfigError);
    CHECK_THROWS_AS(integrator_from_string("euler"), ConfigError);
    CHECK(integrator_from_string(to_string(Integrator::FiniteDifferenceOracle)) == Integrator::FiniteDifferenceOracle);
}

TEST_CASE("wall potential") {
    EvolutionConfig cfg;
    cfg.wall_enabled = true;
    cfg.wall_stiffness = 1000.0;
    const Potential pot({1.0, 0.1, -1.0}, cfg);
    CHECK(pot.value(1.0) == doctest::Approx(-0.5 + 0.025));
    CHECK(pot.value(-1.0) == doctest::Approx(-0.5 + 0.025 + 1000.0));
    CHECK(pot.first_derivative(-1.0) == doctest::Approx(1.0 - 0.1 - 6000.0));
    CHECK(pot.third_derivative(-1.0) == doctest::Approx(-0.6 - 120000.0));
    CHECK(pot.third_derivative(2.0) == doctest::Approx(1.2));
}

TEST_CASE("imaginary residue stays at round-off") {
    const auto g = build_grid(64, 64, -8, 8, -8, 8);
    EvolutionConfig cfg;
    cfg.t_end = 0.2;
    cfg.sample_every = 10;
    const auto res = evolve(wigner_double_gaussian(build_grid(64, 64, -8, 8, -8, 8), 1.0, 0.0, 1.0), {1.0, 0.1, -1.0},
                            GeneralSchedule({{0.0, -1.0, 0.3}}), cfg);
    for (const auto& r : res.series.records) CHECK(r.imag_residue < 1e-12);
    (void)g;
}

TEST_CASE("split-operator scheme") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    EvolutionConfig split;
    split.integrator = Integrator::SplitOperator;
    CHECK(integrator_from_string("split") == Integrator::SplitOperator);
    CHECK(stability_number(g, {1.0, 0.1, -1.0}, 0.3, 1.0, split) == 0.0);

    SUBCASE("harmonic period") {
        const auto w0 = wigner_gaussian(g, 2.0, 0.0, 1.0);
        const auto w = evolve_to(w0, {1.0, 0.0, 1.0}, 1.0, 0.0, 2 * kPi, split);
        CHECK(linf(w.values, w0.values) < 1e-4 * max_abs(w0.values));
    }
    SUBCASE("second-order agreement with the exponential RK4") {
        const auto w0 = wigner_double_gaussian(g, 2.0, 0.0, 1.0);
        const SystemParams params{1.0, 0.1, -1.0};
        const auto ref = evolve_to(w0, params, -1.0, 0.3, 0.5, {});
        double prev = 0.0;
        for (double dt : {4e-3, 2e-3}) {
            split.dt = dt;
            const double err = linf(evolve_to(w0, params, -1.0, 0.3, 0.5, split).values, ref.values);
            if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.15));
            prev = err;
        }
    }
    SUBCASE("stiff wall keeps purity bounded and mass conserved") {
        EvolutionConfig walled = split;
        walled.wall_enabled = true;
        walled.wall_stiffness = 1000.0;
        walled.t_end = 2.0;
        walled.sample_every = 100;
        const auto res = evolve(wigner_walled_gaussian(g, 2.0, 1.0), {1.0, 0.1, -1.0},
                                GeneralSchedule({{0.0, -1.0, 0.01}}), walled);
        for (const auto& r : res.series.records) {
            CHECK(r.purity <= 1.0 + 1e-3);
            CHECK(r.norm == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}
