// states.hpp - analytic initial Wigner distributions

#pragma once

#include <string>

#include "wquench/core.hpp"

namespace wq {

enum class StateKind { DoubleGaussian, SingleGaussian, WalledGaussian };

std::string to_string(StateKind kind);
StateKind state_kind_from_string(const std::string& name);

struct InitialStateSpec {
    StateKind kind{StateKind::DoubleGaussian};
    double L0{2.0};     // half-separation of the two packets
    double P0{0.0};     // opposite momentum kicks of the two packets
    double x0{0.0};
    double p0{0.0};
    double delta{1.0};  // position width parameter of each packet

    void validate() const;
};

/**
 * Wigner function of psi = N [g(x - L0) e^{i P0 x} + g(x + L0) e^{-i P0 x}],
 * g(y) = exp(-y^2 / 2 delta^2):
 *
 *   W = N^2 (delta / sqrt(pi)) [ e^{-(x-L0)^2/delta^2 - delta^2 (p-P0)^2}
 *                              + e^{-(x+L0)^2/delta^2 - delta^2 (p+P0)^2}
 *                              + 2 e^{-x^2/delta^2 - delta^2 p^2} cos(2 L0 p - 2 P0 x) ]
 *
 * with N^2 = 1 / (2 sqrt(pi) delta (1 + e^{-L0^2/delta^2 - P0^2 delta^2})), the
 * last factor being the overlap of the two packets.
 *
 * Requires dx <= delta/4, dp <= 1/(4 delta) and, for L0 > 0, dp <= pi/(4 L0) so
 * the interference fringes are resolved; throws ResolutionError otherwise.
 */
WignerField wigner_double_gaussian(const PhaseSpaceGrid& grid, double L0, double P0, double delta);

/// Minimum-uncertainty Gaussian: sigma_x = delta/sqrt(2), sigma_p = 1/(sqrt(2) delta).
WignerField wigner_gaussian(const PhaseSpaceGrid& grid, double x0, double p0, double delta);

/// Gaussian at rest next to a wall at x = 0; requires x0 >= 2 delta (about 2.8 sigma_x).
WignerField wigner_walled_gaussian(const PhaseSpaceGrid& grid, double x0, double delta);

WignerField build_initial_state(const PhaseSpaceGrid& grid, const InitialStateSpec& spec);

}  // namespace wq
