// diagnostics.hpp - observables of a Wigner field and of its time series

#pragma once

#include <string>
#include <vector>

#include "wquench/core.hpp"

namespace wq {

struct DiagnosticsRecord {
    double t{0.0};
    double gamma{0.0};       // integral of |W| - W
    double s_lin{0.0};       // -ln(2 pi integral W^2)
    double s_lin_rate{0.0};  // dS_l/dt along the series
    double mean_x{0.0};
    double mean_p{0.0};
    double sigma_x{0.0};
    double sigma_p{0.0};
    double norm{0.0};
    double w_min{0.0};
    // not part of the exported time series
    double purity{0.0};
    double boundary_mass{0.0};
    double imag_residue{0.0};
};

struct DiagnosticsSeries {
    std::vector<DiagnosticsRecord> records;
    std::string config_echo;  // JSON text of the effective configuration
    std::string code_version;
    double wall_clock_seconds{0.0};

    std::vector<double> times() const;
    std::vector<double> gammas() const;
};

struct Moments {
    double mean_x, mean_p;
    double var_x, var_p, cov_xp;
};

/// Cells with W >= -eps are treated as non-negative, eps = 1e-12 max|W|.
double negativity_threshold(const WignerField& field);

/// Sum of (|W| - W) dx dp over cells below -negativity_threshold.
double gamma_nonclassicality(const WignerField& field);

/// 2 pi sum W^2 dx dp (hbar = 1).
double purity(const WignerField& field);

/// -ln(purity); throws std::domain_error when the purity is not positive.
double linear_entropy(const WignerField& field);

/// Quadrature moments normalized by the field norm.
Moments moments(const WignerField& field);

/// max(-W, 0) per cell, zeroed where W >= -negativity_threshold.
std::vector<double> negativity_map(const WignerField& field);

/// Mass in cells within `width` of any edge of the domain.
double boundary_mass(const WignerField& field, double width);

/// Full record for one snapshot (s_lin_rate left at 0).
DiagnosticsRecord compute_record(const WignerField& field);

/**
 * dS_l/dt by central differences on uniformly spaced samples, one-sided
 * second-order differences at the ends. Needs >= 3 samples; throws
 * std::invalid_argument otherwise or if the spacing is not uniform.
 */
std::vector<double> entropy_rate(const DiagnosticsSeries& series);

/// Fills each record's s_lin_rate when there are enough samples.
void fill_entropy_rate(DiagnosticsSeries& series);

}  // namespace wq
