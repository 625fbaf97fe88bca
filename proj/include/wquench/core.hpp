// core.hpp - phase-space grid, Wigner field storage and parameter schedules

#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wq {

/// Raised for malformed grids, states, schedules and configs.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a grid cannot resolve the requested state.
class ResolutionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Raised when the evolved field stops being finite.
class BlowUpError : public std::runtime_error {
public:
    BlowUpError(const std::string& what, double t) : std::runtime_error(what), time(t) {}
    double time;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

/**
 * Uniform periodic discretization of the (x, p) plane.
 *
 * Sample points are cell centres, x_i = x_min + (i + 1/2) dx, so a domain that
 * is symmetric about the origin gives a grid that is symmetric under x -> -x.
 * Wavenumbers follow the standard FFT ordering (0, 1, ..., n/2-1, -n/2, ..., -1)
 * scaled by 2 pi / length, hence max|k| * spacing = pi.
 */
class PhaseSpaceGrid {
public:
    PhaseSpaceGrid(std::size_t nx, std::size_t np,
                   double x_min, double x_max,
                   double p_min, double p_max);

    std::size_t nx() const { return nx_; }
    std::size_t np() const { return np_; }
    std::size_t size() const { return nx_ * np_; }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double p_min() const { return p_min_; }
    double p_max() const { return p_max_; }
    double dx() const { return dx_; }
    double dp() const { return dp_; }
    double cell_area() const { return dx_ * dp_; }

    double x(std::size_t i) const { return x_[i]; }
    double p(std::size_t j) const { return p_[j]; }
    std::span<const double> xs() const { return x_; }
    std::span<const double> ps() const { return p_; }
    std::span<const double> kx() const { return kx_; }
    std::span<const double> kp() const { return kp_; }

    /// Row-major, p fastest.
    std::size_t index(std::size_t i, std::size_t j) const { return i * np_ + j; }

    bool operator==(const PhaseSpaceGrid& other) const;

private:
    std::size_t nx_, np_;
    double x_min_, x_max_, p_min_, p_max_;
    double dx_, dp_;
    std::vector<double> x_, p_, kx_, kp_;
};

PhaseSpaceGrid build_grid(std::size_t nx, std::size_t np,
                          double x_min, double x_max,
                          double p_min, double p_max);

/// Standard periodic wavenumbers for n points over a period of `length`.
std::vector<double> fft_wavenumbers(std::size_t n, double length);

bool is_power_of_two(std::size_t n);

/// Real quasi-probability W(x_i, p_j) on a grid at a given time.
struct WignerField {
    PhaseSpaceGrid grid;
    std::vector<double> values;
    double time{0.0};

    explicit WignerField(PhaseSpaceGrid g, double t = 0.0)
        : grid(std::move(g)), values(grid.size(), 0.0), time(t) {}

    double& at(std::size_t i, std::size_t j) { return values[grid.index(i, j)]; }
    double at(std::size_t i, std::size_t j) const { return values[grid.index(i, j)]; }

    WignerField& operator*=(double a);
};

/// Midpoint quadrature of W over the grid.
double norm(const WignerField& field);

/// Anharmonic oscillator V(x) = M Omega^2 x^2 / 2 + lambda x^4 / 4.
struct SystemParams {
    double mass{1.0};
    double lambda{0.1};
    double omega2{1.0};

    void validate() const;
};

struct ScheduleValue {
    double omega2;
    double D;
};

/// Sudden quench of Omega^2 and D at t_c; right-continuous.
struct QuenchSchedule {
    double t_c{0.0};
    double omega2_before{1.0};
    double omega2_after{-1.0};
    double D_before{0.3};
    double D_after{0.3};

    void validate() const;
};

ScheduleValue schedule_at(const QuenchSchedule& schedule, double t);

/// Piecewise-constant (omega2, D) with any number of segments.
class GeneralSchedule {
public:
    struct Breakpoint {
        double time;
        double omega2;
        double D;
    };

    /// Breakpoints must have strictly increasing times. Values before the first
    /// breakpoint are those of the first breakpoint.
    explicit GeneralSchedule(std::vector<Breakpoint> breakpoints,
                             double end_time = std::numeric_limits<double>::infinity());

    static GeneralSchedule from_quench(const QuenchSchedule& q);

    ScheduleValue at(double t) const;
    std::span<const Breakpoint> breakpoints() const { return points_; }
    double end_time() const { return end_time_; }

    /// Breakpoint times strictly inside (t0, t1).
    std::vector<double> switch_times(double t0, double t1) const;

private:
    std::vector<Breakpoint> points_;
    double end_time_;
};

ScheduleValue schedule_at(const GeneralSchedule& schedule, double t);

}  // namespace wq
