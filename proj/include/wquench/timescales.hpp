// timescales.hpp - closed-form decoherence and revival time estimates

#pragma once

#include <optional>

namespace wq {

/// A time estimate that may have hit the edge of its formula's validity.
struct FlaggedTime {
    double value;
    bool degenerate;  // log argument <= 1: formula returns its base time
};

/// Analytic estimates for one scenario; t_max is read from a simulated series.
struct TimescaleEstimates {
    std::optional<double> t_D1;  // double-Gaussian states only
    double chi{0.0};
    double Lambda{0.0};
    double sigma_c{0.0};
    FlaggedTime t_chi{0.0, false};
    std::optional<double> t_max;
    std::optional<FlaggedTime> t_D2;
    bool t_D2_lower_bound{false};           // low final temperature: only a lower limit
    std::optional<double> high_T_validity;  // gamma0 / D when gamma0 is known
};

/// 1 / (4 L0^2 D): decay time of the initial interference term.
double estimate_t_d1(double L0, double D);

/// sqrt(omega0_sq / lambda): scale where the cubic force matters.
double nonlinearity_scale_chi(double omega0_sq, double lambda);

/// 2 omega0_sq, the exponent used for the inverted-oscillator squeezing rate.
double lyapunov_linear(double omega0_sq);

/// t_c + ln(chi sigma_p(t_c)) / Lambda. Independent of D by construction.
FlaggedTime estimate_t_chi(double t_c, double Lambda, double chi, double sigma_p_at_tc);

/// sqrt(2 D / Lambda): width below which diffusion stops further squeezing.
double sigma_critical(double D, double Lambda);

/// t_max + ln(sigma_p(t_max) / sigma_c) / Lambda.
FlaggedTime estimate_t_d2(double t_max, double Lambda, double sigma_p_at_tmax, double sigma_c);

/// gamma0 / D, the time after which the high-temperature coefficients apply.
double high_temperature_validity(double gamma0, double D);

}  // namespace wq
