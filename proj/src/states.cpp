#include "wquench/states.hpp"

#include <cmath>

namespace wq {

namespace {

void require_width_resolved(const PhaseSpaceGrid& grid, double delta) {
    if (!(delta > 0.0)) throw ConfigError("packet width delta must be positive");
    if (grid.dx() > delta / 4.0) {
        throw ResolutionError("dx = " + std::to_string(grid.dx()) +
                              " does not resolve position width delta = " + std::to_string(delta));
    }
    if (grid.dp() > 1.0 / (4.0 * delta)) {
        throw ResolutionError("dp = " + std::to_string(grid.dp()) +
                              " does not resolve momentum width 1/delta = " + std::to_string(1.0 / delta));
    }
}

}  // namespace

std::string to_string(StateKind kind) {
    switch (kind) {
        case StateKind::DoubleGaussian: return "double_gaussian";
        case StateKind::SingleGaussian: return "gaussian";
        case StateKind::WalledGaussian: return "walled_gaussian";
    }
    return "unknown";
}

StateKind state_kind_from_string(const std::string& name) {
    if (name == "double_gaussian") return StateKind::DoubleGaussian;
    if (name == "gaussian") return StateKind::SingleGaussian;
    if (name == "walled_gaussian") return StateKind::WalledGaussian;
    throw ConfigError("unknown state type '" + name + "'");
}

void InitialStateSpec::validate() const {
    if (!(delta > 0.0)) throw ConfigError("state delta must be positive");
    if (kind == StateKind::DoubleGaussian && !(L0 >= 0.0)) {
        throw ConfigError("double Gaussian half-separation L0 must be non-negative");
    }
    if (kind == StateKind::WalledGaussian && !(x0 > 0.0)) {
        throw ConfigError("walled Gaussian must start at x0 > 0");
    }
}

WignerField wigner_double_gaussian(const PhaseSpaceGrid& grid, double L0, double P0, double delta) {
    require_width_resolved(grid, delta);
    if (L0 < 0.0) throw ConfigError("L0 must be non-negative");
    if (L0 > 0.0 && grid.dp() > kPi / (4.0 * L0)) {
        throw ResolutionError("dp = " + std::to_string(grid.dp()) +
                              " does not resolve interference fringes of wavenumber 2 L0 = " +
                              std::to_string(2.0 * L0));
    }
    const double d2 = delta * delta;
    const double overlap = std::exp(-L0 * L0 / d2 - P0 * P0 * d2);
    const double n2 = 1.0 / (2.0 * std::sqrt(kPi) * delta * (1.0 + overlap));
    const double pref = n2 * delta / std::sqrt(kPi);

    WignerField field(grid);
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        const double x = grid.x(i);
        for (std::size_t j = 0; j < grid.np(); ++j) {
            const double p = grid.p(j);
            const double w1 = std::exp(-(x - L0) * (x - L0) / d2 - d2 * (p - P0) * (p - P0));
            const double w2 = std::exp(-(x + L0) * (x + L0) / d2 - d2 * (p + P0) * (p + P0));
            const double wi = 2.0 * std::exp(-x * x / d2 - d2 * p * p) * std::cos(2.0 * L0 * p - 2.0 * P0 * x);
            field.at(i, j) = pref * (w1 + w2 + wi);
        }
    }
    return field;
}

WignerField wigner_gaussian(const PhaseSpaceGrid& grid, double x0, double p0, double delta) {
    require_width_resolved(grid, delta);
    const double d2 = delta * delta;
    WignerField field(grid);
    for (std::size_t i = 0; i < grid.nx(); ++i) {
        const double dxi = grid.x(i) - x0;
        for (std::size_t j = 0; j < grid.np(); ++j) {
            const double dpj = grid.p(j) - p0;
            field.at(i, j) = std::exp(-dxi * dxi / d2 - d2 * dpj * dpj) / kPi;
        }
    }
    return field;
}

WignerField wigner_walled_gaussian(const PhaseSpaceGrid& grid, double x0, double delta) {
    if (!(delta > 0.0)) throw ConfigError("packet width delta must be positive");
    if (x0 < 2.0 * delta) {
        throw ConfigError("walled Gaussian needs x0 >= 2 delta (x0 = " + std::to_string(x0) +
                          ", delta = " + std::to_string(delta) + ")");
    }
    return wigner_gaussian(grid, x0, 0.0, delta);
}

WignerField build_initial_state(const PhaseSpaceGrid& grid, const InitialStateSpec& spec) {
    spec.validate();
    switch (spec.kind) {
        case StateKind::DoubleGaussian: return wigner_double_gaussian(grid, spec.L0, spec.P0, spec.delta);
        case StateKind::SingleGaussian: return wigner_gaussian(grid, spec.x0, spec.p0, spec.delta);
        case StateKind::WalledGaussian: return wigner_walled_gaussian(grid, spec.x0, spec.delta);
    }
    throw ConfigError("unhandled state kind");
}

}  // namespace wq
