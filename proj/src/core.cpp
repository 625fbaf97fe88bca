#include "wquench/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wq {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

std::vector<double> fft_wavenumbers(std::size_t n, double length) {
    std::vector<double> k(n);
    const double base = 2.0 * kPi / length;
    const auto half = static_cast<long>(n / 2);
    for (std::size_t m = 0; m < n; ++m) {
        long signed_m = static_cast<long>(m);
        if (signed_m >= half) signed_m -= static_cast<long>(n);
        k[m] = base * static_cast<double>(signed_m);
    }
    return k;
}

PhaseSpaceGrid::PhaseSpaceGrid(std::size_t nx, std::size_t np,
                               double x_min, double x_max,
                               double p_min, double p_max)
    : nx_(nx), np_(np), x_min_(x_min), x_max_(x_max), p_min_(p_min), p_max_(p_max) {
    if (!is_power_of_two(nx) || !is_power_of_two(np) || nx < 16 || np < 16) {
        throw ConfigError("grid point counts must be powers of two >= 16 (got " +
                          std::to_string(nx) + " x " + std::to_string(np) + ")");
    }
    if (!(x_max > x_min) || !(p_max > p_min) || !std::isfinite(x_max - x_min) ||
        !std::isfinite(p_max - p_min)) {
        throw ConfigError("grid bounds must be finite and increasing");
    }
    dx_ = (x_max - x_min) / static_cast<double>(nx);
    dp_ = (p_max - p_min) / static_cast<double>(np);
    x_.resize(nx);
    p_.resize(np);
    for (std::size_t i = 0; i < nx; ++i) x_[i] = x_min + (static_cast<double>(i) + 0.5) * dx_;
    for (std::size_t j = 0; j < np; ++j) p_[j] = p_min + (static_cast<double>(j) + 0.5) * dp_;
    kx_ = fft_wavenumbers(nx, x_max - x_min);
    kp_ = fft_wavenumbers(np, p_max - p_min);
}

bool PhaseSpaceGrid::operator==(const PhaseSpaceGrid& other) const {
    return nx_ == other.nx_ && np_ == other.np_ && x_min_ == other.x_min_ &&
           x_max_ == other.x_max_ && p_min_ == other.p_min_ && p_max_ == other.p_max_;
}

PhaseSpaceGrid build_grid(std::size_t nx, std::size_t np,
                          double x_min, double x_max,
                          double p_min, double p_max) {
    return PhaseSpaceGrid(nx, np, x_min, x_max, p_min, p_max);
}

WignerField& WignerField::operator*=(double a) {
    for (double& w : values) w *= a;
    return *this;
}

double norm(const WignerField& field) {
    const double sum = std::accumulate(field.values.begin(), field.values.end(), 0.0);
    return sum * field.grid.cell_area();
}

void SystemParams::validate() const {
    if (!(mass > 0.0)) throw ConfigError("mass must be positive");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
    if (!std::isfinite(omega2)) throw ConfigError("omega2 must be finite");
}

void QuenchSchedule::validate() const {
    if (!(t_c >= 0.0)) throw ConfigError("t_c must be non-negative");
    if (!(D_before >= 0.0) || !(D_after >= 0.0)) throw ConfigError("D must be non-negative");
    if (!std::isfinite(omega2_before) || !std::isfinite(omega2_after)) {
        throw ConfigError("omega2 must be finite");
    }
}

ScheduleValue schedule_at(const QuenchSchedule& schedule, double t) {
    if (t < schedule.t_c) return {schedule.omega2_before, schedule.D_before};
    return {schedule.omega2_after, schedule.D_after};
}

GeneralSchedule::GeneralSchedule(std::vector<Breakpoint> breakpoints, double end_time)
    : points_(std::move(breakpoints)), end_time_(end_time) {
    if (points_.empty()) throw ConfigError("schedule needs at least one breakpoint");
    for (std::size_t n = 0; n < points_.size(); ++n) {
        const auto& b = points_[n];
        if (!std::isfinite(b.time) || !std::isfinite(b.omega2) || !(b.D >= 0.0)) {
            throw ConfigError("schedule breakpoint " + std::to_string(n) + " is invalid");
        }
        if (n > 0 && !(b.time > points_[n - 1].time)) {
            throw ConfigError("schedule breakpoint times must be strictly increasing");
        }
    }
    if (!(end_time_ > points_.back().time)) {
        throw ConfigError("schedule end time must follow its last breakpoint");
    }
}

GeneralSchedule GeneralSchedule::from_quench(const QuenchSchedule& q) {
    q.validate();
    if (q.t_c == 0.0) return GeneralSchedule({{0.0, q.omega2_after, q.D_after}});
    return GeneralSchedule({{0.0, q.omega2_before, q.D_before}, {q.t_c, q.omega2_after, q.D_after}});
}

ScheduleValue GeneralSchedule::at(double t) const {
    // last breakpoint with time <= t
    auto it = std::upper_bound(points_.begin(), points_.end(), t,
                               [](double v, const Breakpoint& b) { return v < b.time; });
    if (it == points_.begin()) return {points_.front().omega2, points_.front().D};
    --it;
    return {it->omega2, it->D};
}

std::vector<double> GeneralSchedule::switch_times(double t0, double t1) const {
    std::vector<double> out;
    for (const auto& b : points_) {
        if (b.time > t0 && b.time < t1) out.push_back(b.time);
    }
    return out;
}

ScheduleValue schedule_at(const GeneralSchedule& schedule, double t) { return schedule.at(t); }

}  // namespace wq
