#include "wquench/timescales.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace wq {

namespace {
void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be positive and finite");
    }
}
}  // namespace

double estimate_t_d1(double L0, double D) {
    require_positive(L0, "L0");
    require_positive(D, "D");
    return 1.0 / (4.0 * L0 * L0 * D);
}

double nonlinearity_scale_chi(double omega0_sq, double lambda) {
    require_positive(omega0_sq, "omega0_sq");
    require_positive(lambda, "lambda");
    return std::sqrt(omega0_sq / lambda);
}

double lyapunov_linear(double omega0_sq) {
    require_positive(omega0_sq, "omega0_sq");
    return 2.0 * omega0_sq;
}

FlaggedTime estimate_t_chi(double t_c, double Lambda, double chi, double sigma_p_at_tc) {
    if (!(t_c >= 0.0)) throw std::invalid_argument("t_c must be non-negative");
    require_positive(Lambda, "Lambda");
    require_positive(chi, "chi");
    require_positive(sigma_p_at_tc, "sigma_p(t_c)");
    const double arg = chi * sigma_p_at_tc;
    if (arg <= 1.0) return {t_c, true};
    return {t_c + std::log(arg) / Lambda, false};
}

double sigma_critical(double D, double Lambda) {
    if (!(D >= 0.0)) throw std::invalid_argument("D must be non-negative");
    require_positive(Lambda, "Lambda");
    return std::sqrt(2.0 * D / Lambda);
}

FlaggedTime estimate_t_d2(double t_max, double Lambda, double sigma_p_at_tmax, double sigma_c) {
    if (!std::isfinite(t_max)) throw std::invalid_argument("t_max must be finite");
    require_positive(Lambda, "Lambda");
    require_positive(sigma_c, "sigma_c");
    require_positive(sigma_p_at_tmax, "sigma_p(t_max)");
    if (sigma_p_at_tmax <= sigma_c) return {t_max, true};
    return {t_max + std::log(sigma_p_at_tmax / sigma_c) / Lambda, false};
}

double high_temperature_validity(double gamma0, double D) {
    require_positive(gamma0, "gamma0");
    require_positive(D, "D");
    return gamma0 / D;
}

}  // namespace wq
