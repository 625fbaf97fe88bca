// spectrum.hpp - bound states of the 1D quartic double well and their
// tunnelling splittings

#pragma once

#include <cstddef>
#include <exception>
#include <vector>

namespace wq {

enum class SpectrumMethod {
    SincDvr,           ///< Colbert-Miller sinc basis, dense, long double (default)
    FiniteDifference   ///< three-point Laplacian, symmetric tridiagonal
};

struct SolverGrid {
    SpectrumMethod method{SpectrumMethod::SincDvr};
    double half_width{0.0};    // 0: auto-size so V - V_min >= 10 (E_max - V_min) at the edge
    std::size_t points{0};     // points per parity block on the coarse grid; 0: auto
    double tolerance{1e-8};    // relative change of E_n - V_min allowed under grid doubling
    int max_doublings{6};
};

struct SpectrumResult {
    std::vector<double> eigenvalues;  // strictly increasing
    std::vector<int> parity;          // +1 even, -1 odd
    std::vector<double> splittings;   // E_{2k+1} - E_{2k}
    double well_minimum{0.0};         // V at the bottom of the wells
    double barrier_height{0.0};       // V(0) - well_minimum, 0 for a single well
    int states_below_barrier{0};
    int pairs_below_barrier{0};       // pairs with both members below V(0)
    double half_width{0.0};           // domain actually used
    std::size_t points{0};            // points per parity block on the accepted grid
    double max_relative_change{0.0};  // last grid-doubling change
};

/// Thrown when grid doubling keeps moving the eigenvalues by more than the tolerance.
class SpectrumNotConverged : public std::exception {
public:
    explicit SpectrumNotConverged(double change) : change_(change) {}
    const char* what() const noexcept override { return "spectrum did not converge under grid doubling"; }
    double change() const { return change_; }

private:
    double change_;
};

/**
 * Lowest n_states levels of -(1/2M) d^2/dx^2 - M omega0_sq x^2 / 2 + lambda x^4 / 4
 * with hbar = 1. Even and odd states are solved in separate blocks on a grid
 * symmetric about x = 0, so the parity labels are exact.
 */
SpectrumResult double_well_spectrum(double omega0_sq, double lambda, double M, int n_states,
                                    const SolverGrid& grid = {});

/// Same solver for the single well M omega0_sq x^2 / 2 + lambda x^4 / 4.
SpectrumResult stable_well_spectrum(double omega0_sq, double lambda, double M, int n_states,
                                    const SolverGrid& grid = {});

/// pi / splitting: half period of the two-level oscillation.
double tunneling_time(double splitting);

}  // namespace wq
