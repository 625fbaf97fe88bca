#include "wquench/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace wq {

namespace {

using Real = long double;
using MatrixL = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;

struct WellShape {
    double mass;
    double omega2_signed;  // +omega0_sq for the single well, -omega0_sq for the double well
    double lambda;

    Real value(Real x) const {
        return Real(0.5) * mass * omega2_signed * x * x + Real(lambda) / 4 * x * x * x * x;
    }
    double bottom_position() const {
        return omega2_signed < 0.0 ? std::sqrt(-mass * omega2_signed / lambda) : 0.0;
    }
    double minimum() const {
        return omega2_signed < 0.0 ? -(mass * mass * omega2_signed * omega2_signed) / (4.0 * lambda) : 0.0;
    }
};

struct BlockLevels {
    std::vector<Real> even;
    std::vector<Real> odd;
};

// Kinetic matrix element between grid points separated by n spacings.
Real kinetic(SpectrumMethod method, long n, Real scale) {
    if (method == SpectrumMethod::FiniteDifference) {
        if (n == 0) return 2 * scale;
        return std::labs(n) == 1 ? -scale : Real(0);
    }
    constexpr Real pi = std::numbers::pi_v<Real>;
    if (n == 0) return scale * pi * pi / 3;
    const Real sign = (n % 2 == 0) ? 1 : -1;
    return scale * 2 * sign / (Real(n) * Real(n));
}

// Points x_i = i h, i = 0..K, with the Dirichlet wall at (K+1) h. The even
// block uses {phi_0, (phi_i + phi_-i)/sqrt2}, the odd block (phi_i - phi_-i)/sqrt2.
std::vector<Real> solve_block(const WellShape& shape, SpectrumMethod method, Real h, std::size_t K,
                              bool even) {
    const std::size_t offset = even ? 0 : 1;
    const std::size_t n = K + 1 - offset;
    const Real scale = Real(1) / (2 * Real(shape.mass) * h * h);
    const Real root2 = std::sqrt(Real(2));

    auto element = [&](std::size_t a, std::size_t b) {
        const long i = static_cast<long>(a + offset);
        const long j = static_cast<long>(b + offset);
        Real t;
        if (even && (i == 0 || j == 0)) {
            t = (i == 0 && j == 0) ? kinetic(method, 0, scale) : root2 * kinetic(method, i - j, scale);
        } else {
            const Real mirror = kinetic(method, i + j, scale);
            t = kinetic(method, i - j, scale) + (even ? mirror : -mirror);
        }
        if (i == j) t += shape.value(Real(i) * h);
        return t;
    };

    if (method == SpectrumMethod::FiniteDifference) {
        Eigen::VectorXd diag(n);
        Eigen::VectorXd sub(n > 1 ? n - 1 : 0);
        for (std::size_t a = 0; a < n; ++a) diag[a] = static_cast<double>(element(a, a));
        for (std::size_t a = 0; a + 1 < n; ++a) sub[a] = static_cast<double>(element(a + 1, a));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
        solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) throw std::runtime_error("tridiagonal eigensolver failed");
        std::vector<Real> out(n);
        for (std::size_t a = 0; a < n; ++a) out[a] = solver.eigenvalues()[a];
        return out;
    }

    MatrixL H(n, n);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = 0; b <= a; ++b) H(a, b) = H(b, a) = element(a, b);
    }
    Eigen::SelfAdjointEigenSolver<MatrixL> solver(H, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
    return {solver.eigenvalues().data(), solver.eigenvalues().data() + n};
}

struct Levels {
    std::vector<Real> energy;
    std::vector<int> parity;
};

Levels solve_grid(const WellShape& shape, SpectrumMethod method, Real half_width, std::size_t K,
                  int n_states) {
    if (K + 1 < static_cast<std::size_t>(n_states) + 1) {
        throw std::invalid_argument("solver grid too small for the requested number of states");
    }
    const Real h = half_width / Real(K + 1);
    const auto even = solve_block(shape, method, h, K, true);
    const auto odd = solve_block(shape, method, h, K, false);
    Levels out;
    std::size_t a = 0, b = 0;
    while (out.energy.size() < static_cast<std::size_t>(n_states)) {
        if (b >= odd.size() || (a < even.size() && even[a] <= odd[b])) {
            out.energy.push_back(even[a++]);
            out.parity.push_back(+1);
        } else {
            out.energy.push_back(odd[b++]);
            out.parity.push_back(-1);
        }
    }
    return out;
}

// Smallest x beyond the well bottom where V - V_min reaches `height`.
double edge_for_height(const WellShape& shape, double height) {
    const double vmin = shape.minimum();
    double lo = shape.bottom_position();
    double hi = std::max(1.0, 2.0 * lo);
    while (static_cast<double>(shape.value(hi)) - vmin < height) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (static_cast<double>(shape.value(mid)) - vmin < height ? lo : hi) = mid;
    }
    return hi;
}

std::size_t auto_points(const WellShape& shape, SpectrumMethod method, double half_width) {
    // one point per half wavelength at the largest local momentum inside the box
    const double kmax = std::sqrt(2.0 * shape.mass * (static_cast<double>(shape.value(half_width)) - shape.minimum()));
    auto K = static_cast<std::size_t>(std::ceil(half_width * kmax / std::numbers::pi));
    if (method == SpectrumMethod::FiniteDifference) K *= 8;
    return std::max<std::size_t>(K, 32);
}

double max_relative_change(const Levels& coarse, const Levels& fine, double vmin) {
    double worst = 0.0;
    for (std::size_t n = 0; n < fine.energy.size(); ++n) {
        const Real ref = fine.energy[n] - Real(vmin);
        const Real diff = std::abs(fine.energy[n] - coarse.energy[n]);
        worst = std::max(worst, static_cast<double>(diff / ref));
    }
    return worst;
}

SpectrumResult solve(const WellShape& shape, int n_states, const SolverGrid& grid) {
    if (!(grid.tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (grid.max_doublings < 1) throw std::invalid_argument("max_doublings must be at least 1");
    const double vmin = shape.minimum();
    const double omega_bottom =
        std::sqrt(std::abs(shape.omega2_signed) * (shape.omega2_signed < 0.0 ? 2.0 : 1.0));

    double a = grid.half_width;
    Levels levels;
    std::size_t K = 0;
    if (a > 0.0) {
        K = grid.points > 0 ? grid.points : auto_points(shape, grid.method, a);
        levels = solve_grid(shape, grid.method, a, K, n_states);
    } else {
        // grow the box until its edge sits ten times higher than the top level
        double span = 10.0 * (n_states + 1) * omega_bottom;
        for (int it = 0; it < 20; ++it) {
            a = edge_for_height(shape, span);
            K = grid.points > 0 ? grid.points : auto_points(shape, grid.method, a);
            levels = solve_grid(shape, grid.method, a, K, n_states);
            const double top = static_cast<double>(levels.energy.back()) - vmin;
            if (static_cast<double>(shape.value(a)) - vmin >= 10.0 * top) break;
            span = 10.5 * top;
        }
    }

    double change = 0.0;
    bool converged = false;
    for (int d = 0; d < grid.max_doublings; ++d) {
        const std::size_t K_fine = 2 * K + 1;
        Levels fine = solve_grid(shape, grid.method, a, K_fine, n_states);
        change = max_relative_change(levels, fine, vmin);
        levels = std::move(fine);
        K = K_fine;
        if (change <= grid.tolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) throw SpectrumNotConverged(change);

    SpectrumResult r;
    r.eigenvalues.reserve(levels.energy.size());
    for (Real e : levels.energy) r.eigenvalues.push_back(static_cast<double>(e));
    r.parity = levels.parity;
    r.well_minimum = vmin;
    r.barrier_height = static_cast<double>(shape.value(0)) - vmin;
    r.half_width = a;
    r.points = K;
    r.max_relative_change = change;
    for (std::size_t k = 0; 2 * k + 1 < levels.energy.size(); ++k) {
        r.splittings.push_back(static_cast<double>(levels.energy[2 * k + 1] - levels.energy[2 * k]));
    }
    if (shape.omega2_signed < 0.0) {
        const Real top = shape.value(0);
        for (Real e : levels.energy) {
            if (e < top) ++r.states_below_barrier;
        }
        for (std::size_t k = 0; 2 * k + 1 < levels.energy.size(); ++k) {
            if (levels.energy[2 * k + 1] < top) ++r.pairs_below_barrier;
        }
    }
    return r;
}

void check_inputs(double omega0_sq, double lambda, double M) {
    if (!(omega0_sq > 0.0)) throw std::invalid_argument("omega0_sq must be positive");
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(M > 0.0)) throw std::invalid_argument("mass must be positive");
}

}  // namespace

SpectrumResult double_well_spectrum(double omega0_sq, double lambda, double M, int n_states,
                                    const SolverGrid& grid) {
    check_inputs(omega0_sq, lambda, M);
    if (n_states < 14) throw std::invalid_argument("double well spectrum needs n_states >= 14");
    return solve({M, -omega0_sq, lambda}, n_states, grid);
}

SpectrumResult stable_well_spectrum(double omega0_sq, double lambda, double M, int n_states,
                                    const SolverGrid& grid) {
    check_inputs(omega0_sq, lambda, M);
    if (n_states < 1) throw std::invalid_argument("n_states must be positive");
    return solve({M, omega0_sq, lambda}, n_states, grid);
}

double tunneling_time(double splitting) {
    if (!(splitting > 0.0) || !std::isfinite(splitting)) {
        throw std::invalid_argument("splitting must be positive and finite");
    }
    return std::numbers::pi / splitting;
}

}  // namespace wq
