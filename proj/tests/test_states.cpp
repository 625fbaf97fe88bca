#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "wquench/diagnostics.hpp"
#include "wquench/states.hpp"

using namespace wq;

namespace {
const PhaseSpaceGrid& default_grid() {
    static const auto g = build_grid(256, 256, -8, 8, -8, 8);
    return g;
}
}  // namespace

TEST_CASE("double Gaussian has negative interference values") {
    const auto w = wigner_double_gaussian(default_grid(), 2.0, 0.0, 1.0);
    CHECK(*std::min_element(w.values.begin(), w.values.end()) < 0.0);
    CHECK(gamma_nonclassicality(w) > 0.0);
    CHECK(norm(w) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("double Gaussian with zero separation is a positive Gaussian") {
    const auto w = wigner_double_gaussian(default_grid(), 0.0, 0.0, 1.0);
    CHECK(*std::min_element(w.values.begin(), w.values.end()) >= 0.0);
    CHECK(gamma_nonclassicality(w) == 0.0);
    const auto single = wigner_gaussian(default_grid(), 0.0, 0.0, 1.0);
    for (std::size_t k = 0; k < w.values.size(); ++k) CHECK(w.values[k] == doctest::Approx(single.values[k]).epsilon(1e-12));
}

TEST_CASE("double Gaussian matches the brute-force Wigner transform") {
    const auto g = build_grid(128, 128, -8, 8, -8, 8);
    for (double P0 : {0.0, 0.5}) {
        const auto w = wigner_double_gaussian(g, 2.0, P0, 1.0);
        const auto ref = oracle::brute_force_wigner(g, 2.0, P0, 1.0);
        double err = 0.0, peak = 0.0;
        for (std::size_t k = 0; k < ref.size(); ++k) {
            err = std::max(err, std::abs(w.values[k] - ref[k]));
            peak = std::max(peak, std::abs(ref[k]));
        }
        CHECK(err < 1e-8 * peak);
        const double gamma_ref = oracle::gamma_of(ref, g.cell_area());
        CHECK(gamma_nonclassicality(w) == doctest::Approx(gamma_ref).epsilon(0.01));
    }
}

TEST_CASE("double Gaussian symmetries with P0 = 0") {
    const auto& g = default_grid();
    const auto w = wigner_double_gaussian(g, 2.0, 0.0, 1.0);
    double err_pt = 0.0, err_p = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) {
            err_pt = std::max(err_pt, std::abs(w.at(i, j) - w.at(g.nx() - 1 - i, g.np() - 1 - j)));
            err_p = std::max(err_p, std::abs(w.at(i, j) - w.at(i, g.np() - 1 - j)));
        }
    }
    CHECK(err_pt < 1e-10);
    CHECK(err_p < 1e-10);
}

TEST_CASE("double Gaussian position marginal equals |psi|^2") {
    const auto& g = default_grid();
    for (double P0 : {0.0, 0.7}) {
        const auto w = wigner_double_gaussian(g, 2.0, P0, 1.0);
        const double n2 = oracle::two_packet_norm2(2.0, P0, 1.0);
        double err = 0.0;
        for (std::size_t i = 0; i < g.nx(); ++i) {
            double marginal = 0.0;
            for (std::size_t j = 0; j < g.np(); ++j) marginal += w.at(i, j) * g.dp();
            err = std::max(err, std::abs(marginal - std::norm(oracle::two_packet_psi(g.x(i), 2.0, P0, 1.0)) / n2));
        }
        CHECK(err < 1e-6);
    }
}

TEST_CASE("built states are pure") {
    const auto& g = default_grid();
    CHECK(purity(wigner_double_gaussian(g, 2.0, 0.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(purity(wigner_double_gaussian(g, 1.5, 0.4, 1.2)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(purity(wigner_gaussian(g, 0.0, 0.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(purity(wigner_walled_gaussian(g, 2.0, 1.0)) == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("unresolved states are rejected") {
    const auto coarse = build_grid(32, 32, -8, 8, -8, 8);  // dx = 0.5
    CHECK_THROWS_AS(wigner_double_gaussian(coarse, 2.0, 0.0, 1.0), ResolutionError);
    CHECK_THROWS_AS(wigner_gaussian(coarse, 0.0, 0.0, 1.0), ResolutionError);
    // fringes: dp must not exceed pi / (4 L0)
    const auto fringe_grid = build_grid(256, 64, -8, 8, -8, 8);  // dp = 0.25 resolves 1/(4 delta) = 1
    CHECK_NOTHROW(wigner_double_gaussian(fringe_grid, 0.5, 0.0, 0.25));
    CHECK_THROWS_AS(wigner_double_gaussian(fringe_grid, 4.0, 0.0, 0.25), ResolutionError);
    CHECK_THROWS_AS(wigner_gaussian(default_grid(), 0.0, 0.0, -1.0), ConfigError);
}

TEST_CASE("single Gaussian widths and moments") {
    const auto& g = default_grid();
    const auto w = wigner_gaussian(g, 0.0, 0.0, 1.0);
    const auto m = moments(w);
    CHECK(std::sqrt(m.var_p) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(std::sqrt(m.var_x) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-4));
    CHECK(gamma_nonclassicality(w) == 0.0);
    CHECK(std::abs(linear_entropy(w)) < 1e-3);

    const auto shifted = wigner_gaussian(g, 2.0, 0.0, 1.0);
    const auto ms = moments(shifted);
    CHECK(std::abs(ms.mean_x - 2.0) < 1e-8);
    CHECK(std::abs(ms.mean_p) < 1e-8);
}

TEST_CASE("walled Gaussian") {
    const auto& g = default_grid();
    const auto w = wigner_walled_gaussian(g, 2.0, 1.0);
    CHECK(norm(w) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(moments(w).mean_x - 2.0) < 1e-3);
    CHECK(gamma_nonclassicality(w) == 0.0);
    CHECK_THROWS_AS(wigner_walled_gaussian(g, 1.0, 1.0), ConfigError);
}

TEST_CASE("state kinds round-trip through their names") {
    for (auto kind : {StateKind::DoubleGaussian, StateKind::SingleGaussian, StateKind::WalledGaussian}) {
        CHECK(state_kind_from_string(to_string(kind)) == kind);
    }
    CHECK_THROWS_AS(state_kind_from_string("cat"), ConfigError);
}
