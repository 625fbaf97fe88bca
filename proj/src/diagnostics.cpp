#include "wquench/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wq {

std::vector<double> DiagnosticsSeries::times() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.t);
    return out;
}

std::vector<double> DiagnosticsSeries::gammas() const {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.gamma);
    return out;
}

double negativity_threshold(const WignerField& field) {
    double wmax = 0.0;
    for (double w : field.values) wmax = std::max(wmax, std::abs(w));
    return 1e-12 * wmax;
}

double gamma_nonclassicality(const WignerField& field) {
    const double eps = negativity_threshold(field);
    double acc = 0.0;
    for (double w : field.values) {
        if (w < -eps) acc -= w;
    }
    return 2.0 * acc * field.grid.cell_area();
}

double purity(const WignerField& field) {
    double acc = 0.0;
    for (double w : field.values) acc += w * w;
    return 2.0 * kPi * acc * field.grid.cell_area();
}

double linear_entropy(const WignerField& field) {
    const double pur = purity(field);
    if (!(pur > 0.0)) throw std::domain_error("linear entropy undefined: purity is not positive");
    return -std::log(pur);
}

Moments moments(const WignerField& field) {
    const auto& g = field.grid;
    double m0 = 0.0, mx = 0.0, mp = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) {
            const double w = field.at(i, j);
            m0 += w;
            mx += g.x(i) * w;
            mp += g.p(j) * w;
        }
    }
    if (m0 == 0.0) return {0.0, 0.0, 0.0, 0.0, 0.0};
    mx /= m0;
    mp /= m0;
    // central moments in a second pass for accuracy
    double vxx = 0.0, vpp = 0.0, vxp = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const double dx = g.x(i) - mx;
        for (std::size_t j = 0; j < g.np(); ++j) {
            const double dp = g.p(j) - mp;
            const double w = field.at(i, j);
            vxx += dx * dx * w;
            vpp += dp * dp * w;
            vxp += dx * dp * w;
        }
    }
    return {mx, mp, vxx / m0, vpp / m0, vxp / m0};
}

std::vector<double> negativity_map(const WignerField& field) {
    const double eps = negativity_threshold(field);
    std::vector<double> out(field.values.size(), 0.0);
    for (std::size_t k = 0; k < out.size(); ++k) {
        if (field.values[k] < -eps) out[k] = -field.values[k];
    }
    return out;
}

double boundary_mass(const WignerField& field, double width) {
    const auto& g = field.grid;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
        const bool edge_x = g.x(i) - g.x_min() < width || g.x_max() - g.x(i) < width;
        for (std::size_t j = 0; j < g.np(); ++j) {
            const bool edge_p = g.p(j) - g.p_min() < width || g.p_max() - g.p(j) < width;
            if (edge_x || edge_p) acc += std::abs(field.at(i, j));
        }
    }
    return acc * g.cell_area();
}

DiagnosticsRecord compute_record(const WignerField& field) {
    DiagnosticsRecord r;
    r.t = field.time;
    r.gamma = gamma_nonclassicality(field);
    r.purity = purity(field);
    r.s_lin = r.purity > 0.0 ? -std::log(r.purity) : std::numeric_limits<double>::quiet_NaN();
    const Moments m = moments(field);
    r.mean_x = m.mean_x;
    r.mean_p = m.mean_p;
    r.sigma_x = std::sqrt(std::max(m.var_x, 0.0));
    r.sigma_p = std::sqrt(std::max(m.var_p, 0.0));
    r.norm = norm(field);
    r.w_min = *std::min_element(field.values.begin(), field.values.end());
    // two cells wide
    r.boundary_mass = boundary_mass(field, 2.0 * std::max(field.grid.dx(), field.grid.dp()));
    return r;
}

std::vector<double> entropy_rate(const DiagnosticsSeries& series) {
    const auto& rec = series.records;
    const std::size_t n = rec.size();
    if (n < 3) throw std::invalid_argument("entropy rate needs at least 3 samples");
    const double h = rec[1].t - rec[0].t;
    if (!(h > 0.0)) throw std::invalid_argument("entropy rate needs increasing sample times");
    for (std::size_t k = 1; k < n; ++k) {
        const double hk = rec[k].t - rec[k - 1].t;
        if (std::abs(hk - h) > 1e-9 * std::max(1.0, std::abs(rec[k].t))) {
            throw std::invalid_argument("entropy rate needs uniformly spaced samples");
        }
    }
    std::vector<double> rate(n);
    rate[0] = (-3.0 * rec[0].s_lin + 4.0 * rec[1].s_lin - rec[2].s_lin) / (2.0 * h);
    for (std::size_t k = 1; k + 1 < n; ++k) rate[k] = (rec[k + 1].s_lin - rec[k - 1].s_lin) / (2.0 * h);
    rate[n - 1] = (3.0 * rec[n - 1].s_lin - 4.0 * rec[n - 2].s_lin + rec[n - 3].s_lin) / (2.0 * h);
    return rate;
}

void fill_entropy_rate(DiagnosticsSeries& series) {
    if (series.records.size() < 3) return;
    const auto rate = entropy_rate(series);
    for (std::size_t k = 0; k < rate.size(); ++k) series.records[k].s_lin_rate = rate[k];
}

}  // namespace wq
