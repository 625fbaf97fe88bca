#include "wquench/engine.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "fft.hpp"

namespace wq {

using detail::AxisTransforms;
using detail::ComplexBuffer;
using detail::cplx;
using detail::RealBuffer;

namespace {

constexpr double kRk4ImaginaryLimit = 2.8284271247461903;  // 2 sqrt(2)
constexpr double kRk4MixedLimit = 2.5;                     // disc-like bound for mixed spectra

// Central-difference stencils, coefficient k multiplies f[j + k - half].
struct Stencil {
    std::vector<double> coeffs;
    int half;
};

Stencil fd_stencil(int derivative, int order) {
    switch (order) {
        case 2:
            if (derivative == 1) return {{-0.5, 0.0, 0.5}, 1};
            if (derivative == 2) return {{1.0, -2.0, 1.0}, 1};
            return {{-0.5, 1.0, 0.0, -1.0, 0.5}, 2};
        case 4:
            if (derivative == 1) return {{1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}, 2};
            if (derivative == 2) return {{-1.0 / 12, 4.0 / 3, -2.5, 4.0 / 3, -1.0 / 12}, 2};
            return {{1.0 / 8, -1.0, 13.0 / 8, 0.0, -13.0 / 8, 1.0, -1.0 / 8}, 3};
        case 6:
            if (derivative == 1) return {{-1.0 / 60, 3.0 / 20, -0.75, 0.0, 0.75, -3.0 / 20, 1.0 / 60}, 3};
            if (derivative == 2) {
                return {{1.0 / 90, -3.0 / 20, 1.5, -49.0 / 18, 1.5, -3.0 / 20, 1.0 / 90}, 3};
            }
            return {{-7.0 / 240, 0.3, -169.0 / 120, 61.0 / 30, 0.0, -61.0 / 30, 169.0 / 120, -0.3, 7.0 / 240}, 4};
        default: throw ConfigError("finite-difference order must be 2, 4 or 6");
    }
}

// max over theta of |sum_k c_k e^{i k theta}|, i.e. the stencil's largest eigenvalue for h = 1
double stencil_symbol_max(const Stencil& s) {
    double best = 0.0;
    for (int t = 0; t <= 720; ++t) {
        const double theta = kPi * t / 720.0;
        cplx acc{0.0, 0.0};
        for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
            const double off = static_cast<double>(static_cast<int>(k) - s.half);
            acc += s.coeffs[k] * std::polar(1.0, off * theta);
        }
        best = std::max(best, std::abs(acc));
    }
    return best;
}

SystemParams with_omega2(SystemParams p, double omega2) {
    p.omega2 = omega2;
    return p;
}

bool keep_mode(std::size_t m, std::size_t n, bool dealias) {
    // signed index of mode m in FFT order
    const std::size_t a = m <= n / 2 ? m : n - m;
    if (a == n / 2) return false;  // Nyquist carries no odd derivative
    return !dealias || 3 * a <= n;
}

// p-direction generator at (x, k): i (V'(x) k + V'''(x) k^3 / 24) - D k^2
cplx p_generator(const Potential& pot, double x, double k, double D) {
    const double c3 = pot.third_derivative(x) / 24.0;
    return {-D * k * k, pot.first_derivative(x) * k + c3 * k * k * k};
}

// Spectral pieces shared by the rhs and the exponential integrator.
struct SpectralOperator {
    const PhaseSpaceGrid& grid;
    AxisTransforms tf;
    std::vector<double> maskp;   // nph
    std::vector<cplx> dx_mult;   // nxh, i kx mask / nx
    mutable RealBuffer real_a, real_b;
    mutable ComplexBuffer half_p, half_x;

    SpectralOperator(const PhaseSpaceGrid& g, bool dealias)
        : grid(g),
          tf(g.nx(), g.np()),
          maskp(g.np() / 2 + 1),
          dx_mult(g.nx() / 2 + 1),
          real_a(g.size()),
          real_b(g.size()),
          half_p(g.nx() * (g.np() / 2 + 1)),
          half_x((g.nx() / 2 + 1) * g.np()) {
        for (std::size_t m = 0; m < maskp.size(); ++m) maskp[m] = keep_mode(m, g.np(), dealias) ? 1.0 : 0.0;
        const auto kx = g.kx();
        const double inv_nx = 1.0 / static_cast<double>(g.nx());
        for (std::size_t m = 0; m < dx_mult.size(); ++m) {
            dx_mult[m] = keep_mode(m, g.nx(), dealias) ? cplx{0.0, kx[m] * inv_nx} : cplx{0.0, 0.0};
        }
    }

    std::size_t nph() const { return grid.np() / 2 + 1; }

    // out = -(p/M) dW/dx, physical in and out. `scale` multiplies the input.
    void advection(const double* w, double mass, double scale, double* out) const {
        const std::size_t np = grid.np();
        tf.forward_x(w, half_x.data());
        for (std::size_t m = 0; m < dx_mult.size(); ++m) {
            const cplx f = dx_mult[m] * scale;
            cplx* row = half_x.data() + m * np;
            for (std::size_t j = 0; j < np; ++j) row[j] *= f;
        }
        tf.inverse_x(half_x.data(), out);
        const auto ps = grid.ps();
        for (std::size_t i = 0; i < grid.nx(); ++i) {
            double* row = out + i * np;
            for (std::size_t j = 0; j < np; ++j) row[j] *= -ps[j] / mass;
        }
    }
};

double max_abs_over_grid(std::span<const double> xs, auto&& f) {
    double best = 0.0;
    for (double x : xs) best = std::max(best, std::abs(f(x)));
    return best;
}

double dealiased_kmax(double spacing, bool dealias) {
    const double kmax = kPi / spacing;
    return dealias ? kmax * (2.0 / 3.0) : kmax;
}

}  // namespace

std::string to_string(Integrator integrator) {
    switch (integrator) {
        case Integrator::Spectral: return "spectral";
        case Integrator::SplitOperator: return "split";
        case Integrator::SpectralRk4: return "spectral_rk4";
        case Integrator::FiniteDifferenceOracle: return "fd_oracle";
    }
    return "unknown";
}

Integrator integrator_from_string(const std::string& name) {
    if (name == "spectral") return Integrator::Spectral;
    if (name == "split") return Integrator::SplitOperator;
    if (name == "spectral_rk4") return Integrator::SpectralRk4;
    if (name == "fd_oracle") return Integrator::FiniteDifferenceOracle;
    throw ConfigError("unknown integrator '" + name + "'");
}

void EvolutionConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!std::isfinite(t_end)) throw ConfigError("t_end must be finite");
    if (sample_every < 1) throw ConfigError("sample_every must be >= 1");
    if (!(wall_stiffness > 0.0)) throw ConfigError("wall_stiffness must be positive");
    if (fd_order != 2 && fd_order != 4 && fd_order != 6) throw ConfigError("fd_order must be 2, 4 or 6");
}

Potential::Potential(const SystemParams& params, const EvolutionConfig& config)
    : mass(params.mass),
      lambda(params.lambda),
      omega2(params.omega2),
      wall(config.wall_enabled),
      wall_stiffness(config.wall_stiffness) {}

double Potential::value(double x) const {
    double v = 0.5 * mass * omega2 * x * x + 0.25 * lambda * x * x * x * x;
    if (wall && x < 0.0) v += wall_stiffness * std::pow(x, 6);
    return v;
}

double Potential::first_derivative(double x) const {
    double v = mass * omega2 * x + lambda * x * x * x;
    if (wall && x < 0.0) v += 6.0 * wall_stiffness * std::pow(x, 5);
    return v;
}

double Potential::third_derivative(double x) const {
    double v = 6.0 * lambda * x;
    if (wall && x < 0.0) v += 120.0 * wall_stiffness * x * x * x;
    return v;
}

std::vector<double> rhs(const WignerField& field, const SystemParams& params, double D,
                        const EvolutionConfig& config) {
    params.validate();
    const auto& g = field.grid;
    SpectralOperator op(g, config.dealias);
    const Potential pot(params, config);
    const std::size_t np = g.np(), nph = op.nph();
    std::vector<double> out(g.size());

    op.advection(field.values.data(), params.mass, 1.0, out.data());

    op.tf.forward_p(field.values.data(), op.half_p.data());
    const auto kp = g.kp();
    const double inv_np = 1.0 / static_cast<double>(np);
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t m = 0; m < nph; ++m) {
            op.half_p[i * nph + m] *= p_generator(pot, g.x(i), std::abs(kp[m]), D) * (op.maskp[m] * inv_np);
        }
    }
    op.tf.inverse_p(op.half_p.data(), op.real_a.data());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += op.real_a[k];
    return out;
}

std::vector<double> rhs_fd(const WignerField& field, const SystemParams& params, double D,
                           const EvolutionConfig& config) {
    params.validate();
    const auto& g = field.grid;
    const Potential pot(params, config);
    const Stencil d1 = fd_stencil(1, config.fd_order);
    const Stencil d2 = fd_stencil(2, config.fd_order);
    const Stencil d3 = fd_stencil(3, config.fd_order);
    const auto nx = static_cast<long>(g.nx()), np = static_cast<long>(g.np());
    const double hx = g.dx(), hp = g.dp();
    const auto& w = field.values;
    auto wrap = [](long a, long n) { return ((a % n) + n) % n; };
    auto at = [&](long i, long j) { return w[static_cast<std::size_t>(wrap(i, nx) * np + wrap(j, np))]; };
    auto apply_p = [&](const Stencil& s, long i, long j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
            if (s.coeffs[k] != 0.0) acc += s.coeffs[k] * at(i, j + static_cast<long>(k) - s.half);
        }
        return acc;
    };
    auto apply_x = [&](const Stencil& s, long i, long j) {
        double acc = 0.0;
        for (std::size_t k = 0; k < s.coeffs.size(); ++k) {
            if (s.coeffs[k] != 0.0) acc += s.coeffs[k] * at(i + static_cast<long>(k) - s.half, j);
        }
        return acc;
    };

    std::vector<double> out(g.size());
    for (long i = 0; i < nx; ++i) {
        const double x = g.x(static_cast<std::size_t>(i));
        const double v1 = pot.first_derivative(x);
        const double c3 = pot.third_derivative(x) / 24.0;
        for (long j = 0; j < np; ++j) {
            const double p = g.p(static_cast<std::size_t>(j));
            const double dwdx = apply_x(d1, i, j) / hx;
            const double dwdp = apply_p(d1, i, j) / hp;
            const double d2wdp2 = apply_p(d2, i, j) / (hp * hp);
            const double d3wdp3 = apply_p(d3, i, j) / (hp * hp * hp);
            out[static_cast<std::size_t>(i * np + j)] =
                -p / params.mass * dwdx + v1 * dwdp - c3 * d3wdp3 + D * d2wdp2;
        }
    }
    return out;
}

double stability_number(const PhaseSpaceGrid& grid, const SystemParams& params, double D, double dt,
                        const EvolutionConfig& config) {
    const Potential pot(params, config);
    const double pmax = std::max(std::abs(grid.p_min()), std::abs(grid.p_max()));
    const double v1max = max_abs_over_grid(grid.xs(), [&](double x) { return pot.first_derivative(x); });
    const double c3max = max_abs_over_grid(grid.xs(), [&](double x) { return pot.third_derivative(x) / 24.0; });

    switch (config.integrator) {
        case Integrator::Spectral: {
            const double kx = dealiased_kmax(grid.dx(), config.dealias);
            return dt * pmax / params.mass * kx / kRk4ImaginaryLimit;
        }
        case Integrator::SplitOperator: return 0.0;
        case Integrator::SpectralRk4: {
            const double kx = dealiased_kmax(grid.dx(), config.dealias);
            const double kp = dealiased_kmax(grid.dp(), config.dealias);
            const double rate = pmax / params.mass * kx + v1max * kp + c3max * kp * kp * kp + D * kp * kp;
            return dt * rate / kRk4MixedLimit;
        }
        case Integrator::FiniteDifferenceOracle: {
            const double s1 = stencil_symbol_max(fd_stencil(1, config.fd_order));
            const double s2 = stencil_symbol_max(fd_stencil(2, config.fd_order));
            const double s3 = stencil_symbol_max(fd_stencil(3, config.fd_order));
            const double hx = grid.dx(), hp = grid.dp();
            const double rate = pmax / params.mass * s1 / hx + v1max * s1 / hp +
                                c3max * s3 / (hp * hp * hp) + D * s2 / (hp * hp);
            return dt * rate / kRk4MixedLimit;
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Propagator implementations

struct Propagator::Impl {
    virtual ~Impl() = default;
    virtual void load(const WignerField& field) = 0;
    virtual void advance(const SystemParams& params, double D, double dt) = 0;
    virtual void store(WignerField& field) const = 0;
    virtual double imag_residue() const = 0;
};

namespace {

/**
 * RK4 in the interaction picture of the p-operator (Lawson RK4).
 *
 * The state is U(x, k_p), the r2c transform of W along p. For fixed x the terms
 * V' dW/dp - (V'''/24) d^3W/dp^3 + D d^2W/dp^2 are diagonal in k_p and are
 * applied exactly through E_h = exp(h L(x, k)); only the advection
 * -(p/M) dW/dx goes through the RK4 stages:
 *
 *   k1 = N(u)
 *   k2 = N(E_{h/2} (u + h/2 k1))
 *   k3 = N(E_{h/2} u + h/2 k2)
 *   k4 = N(E_h u + h E_{h/2} k3)
 *   u' = E_h u + h/6 (E_h k1 + 2 E_{h/2} (k2 + k3) + k4)
 */
class LawsonImpl final : public Propagator::Impl {
public:
    LawsonImpl(const PhaseSpaceGrid& grid, const EvolutionConfig& config)
        : grid_(grid),
          config_(config),
          op_(grid_, config.dealias),
          n_(grid.nx() * (grid.np() / 2 + 1)),
          u_(n_), k1_(n_), k2_(n_), k3_(n_), k4_(n_), stage_(n_), scratch_(n_),
          e_half_(n_), e_full_(n_) {}

    void load(const WignerField& field) override {
        op_.tf.forward_p(field.values.data(), u_.data());
        apply_mask(u_);
    }

    void store(WignerField& field) const override {
        std::copy(u_.data(), u_.data() + n_, scratch_.data());
        op_.tf.inverse_p(scratch_.data(), op_.real_a.data());
        const double inv_np = 1.0 / static_cast<double>(grid_.np());
        for (std::size_t k = 0; k < grid_.size(); ++k) field.values[k] = op_.real_a[k] * inv_np;
    }

    void advance(const SystemParams& params, double D, double dt) override {
        if (dt == 0.0) return;
        update_factors(params, D, dt);
        mass_ = params.mass;
        const double h = dt;

        nonlinear(u_, k1_);
        for (std::size_t k = 0; k < n_; ++k) stage_[k] = e_half_[k] * (u_[k] + 0.5 * h * k1_[k]);
        nonlinear(stage_, k2_);
        for (std::size_t k = 0; k < n_; ++k) stage_[k] = e_half_[k] * u_[k] + 0.5 * h * k2_[k];
        nonlinear(stage_, k3_);
        for (std::size_t k = 0; k < n_; ++k) stage_[k] = e_full_[k] * u_[k] + h * e_half_[k] * k3_[k];
        nonlinear(stage_, k4_);
        const double h6 = h / 6.0;
        for (std::size_t k = 0; k < n_; ++k) {
            u_[k] = e_full_[k] * (u_[k] + h6 * k1_[k]) + h6 * (2.0 * e_half_[k] * (k2_[k] + k3_[k]) + k4_[k]);
        }
    }

    double imag_residue() const override {
        const std::size_t nph = op_.nph();
        double best = 0.0;
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            best = std::max(best, std::abs(u_[i * nph].imag()));
            best = std::max(best, std::abs(u_[i * nph + nph - 1].imag()));
        }
        // relative to the transform scale of W
        return best / static_cast<double>(grid_.np());
    }

private:
    void apply_mask(ComplexBuffer& buf) const {
        const std::size_t nph = op_.nph();
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            for (std::size_t m = 0; m < nph; ++m) buf[i * nph + m] *= op_.maskp[m];
        }
    }

    void update_factors(const SystemParams& params, double D, double dt) {
        const std::array<double, 5> key{params.mass, params.lambda, params.omega2, D, dt};
        if (have_factors_ && key == factor_key_) return;
        const Potential pot(params, config_);
        const std::size_t nph = op_.nph();
        const auto kp = grid_.kp();
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            const double x = grid_.x(i);
            for (std::size_t m = 0; m < nph; ++m) {
                const cplx L = p_generator(pot, x, std::abs(kp[m]), D);
                e_half_[i * nph + m] = std::exp(0.5 * dt * L) * op_.maskp[m];
                e_full_[i * nph + m] = std::exp(dt * L) * op_.maskp[m];
            }
        }
        factor_key_ = key;
        have_factors_ = true;
    }

    // out = F_p[-(p/M) dW/dx] for W = F_p^{-1}[in] / np
    void nonlinear(const ComplexBuffer& in, ComplexBuffer& out) const {
        std::copy(in.data(), in.data() + n_, scratch_.data());
        op_.tf.inverse_p(scratch_.data(), op_.real_a.data());
        op_.advection(op_.real_a.data(), mass_, 1.0 / static_cast<double>(grid_.np()), op_.real_b.data());
        op_.tf.forward_p(op_.real_b.data(), out.data());
        apply_mask(out);
    }

    PhaseSpaceGrid grid_;
    EvolutionConfig config_;
    SpectralOperator op_;
    std::size_t n_;
    ComplexBuffer u_, k1_, k2_, k3_, k4_, stage_;
    mutable ComplexBuffer scratch_;
    ComplexBuffer e_half_, e_full_;
    std::array<double, 5> factor_key_{};
    bool have_factors_{false};
    double mass_{1.0};
};

/**
 * Strang splitting E_{h/2} A_h E_{h/2}. Both factors are exact: E in (x, k_p)
 * as in LawsonImpl, the advection A_h = exp(-h (p/M) d/dx) in (k_x, p) as the
 * phase exp(-i k_x p h / M). Each factor is a contraction in L2, so the scheme
 * is stable for any step; the splitting error is O(h^2).
 */
class SplitImpl final : public Propagator::Impl {
public:
    SplitImpl(const PhaseSpaceGrid& grid, const EvolutionConfig& config)
        : grid_(grid),
          config_(config),
          op_(grid_, config.dealias),
          n_(grid.nx() * (grid.np() / 2 + 1)),
          u_(n_),
          scratch_(n_),
          e_half_(n_),
          shift_((grid.nx() / 2 + 1) * grid.np()) {}

    void load(const WignerField& field) override {
        op_.tf.forward_p(field.values.data(), u_.data());
        const std::size_t nph = op_.nph();
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            for (std::size_t m = 0; m < nph; ++m) u_[i * nph + m] *= op_.maskp[m];
        }
    }

    void store(WignerField& field) const override {
        std::copy(u_.data(), u_.data() + n_, scratch_.data());
        op_.tf.inverse_p(scratch_.data(), op_.real_a.data());
        const double inv_np = 1.0 / static_cast<double>(grid_.np());
        for (std::size_t k = 0; k < grid_.size(); ++k) field.values[k] = op_.real_a[k] * inv_np;
    }

    void advance(const SystemParams& params, double D, double dt) override {
        if (dt == 0.0) return;
        update_factors(params, D, dt);
        for (std::size_t k = 0; k < n_; ++k) u_[k] *= e_half_[k];

        std::copy(u_.data(), u_.data() + n_, scratch_.data());
        op_.tf.inverse_p(scratch_.data(), op_.real_a.data());
        op_.tf.forward_x(op_.real_a.data(), op_.half_x.data());
        for (std::size_t k = 0; k < shift_.size(); ++k) op_.half_x[k] *= shift_[k];
        op_.tf.inverse_x(op_.half_x.data(), op_.real_a.data());
        op_.tf.forward_p(op_.real_a.data(), u_.data());

        for (std::size_t k = 0; k < n_; ++k) u_[k] *= e_half_[k];
    }

    double imag_residue() const override {
        const std::size_t nph = op_.nph();
        double best = 0.0;
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            best = std::max(best, std::abs(u_[i * nph].imag()));
            best = std::max(best, std::abs(u_[i * nph + nph - 1].imag()));
        }
        return best / static_cast<double>(grid_.np());
    }

private:
    void update_factors(const SystemParams& params, double D, double dt) {
        const std::array<double, 5> key{params.mass, params.lambda, params.omega2, D, dt};
        if (have_factors_ && key == factor_key_) return;
        const Potential pot(params, config_);
        const std::size_t nph = op_.nph(), np = grid_.np();
        const auto kp = grid_.kp();
        for (std::size_t i = 0; i < grid_.nx(); ++i) {
            for (std::size_t m = 0; m < nph; ++m) {
                e_half_[i * nph + m] = std::exp(0.5 * dt * p_generator(pot, grid_.x(i), std::abs(kp[m]), D)) *
                                       op_.maskp[m];
            }
        }
        // the 1/(nx np) of both inverse transforms is folded in here
        const auto kx = grid_.kx();
        const auto ps = grid_.ps();
        const double norm = 1.0 / static_cast<double>(grid_.nx() * np);
        for (std::size_t m = 0; m < grid_.nx() / 2 + 1; ++m) {
            const bool keep = keep_mode(m, grid_.nx(), config_.dealias);
            for (std::size_t j = 0; j < np; ++j) {
                shift_[m * np + j] = keep ? std::polar(norm, -kx[m] * ps[j] * dt / params.mass) : cplx{0.0, 0.0};
            }
        }
        factor_key_ = key;
        have_factors_ = true;
    }

    PhaseSpaceGrid grid_;
    EvolutionConfig config_;
    SpectralOperator op_;
    std::size_t n_;
    ComplexBuffer u_;
    mutable ComplexBuffer scratch_;
    ComplexBuffer e_half_, shift_;
    std::array<double, 5> factor_key_{};
    bool have_factors_{false};
};

// Classical RK4 on a physical-space rhs.
class Rk4Impl final : public Propagator::Impl {
public:
    using RhsFn = std::vector<double> (*)(const WignerField&, const SystemParams&, double,
                                          const EvolutionConfig&);

    Rk4Impl(const PhaseSpaceGrid& grid, const EvolutionConfig& config, RhsFn fn)
        : config_(config), state_(grid), stage_(grid), fn_(fn) {}

    void load(const WignerField& field) override { state_.values = field.values; }
    void store(WignerField& field) const override { field.values = state_.values; }
    double imag_residue() const override { return 0.0; }

    void advance(const SystemParams& params, double D, double dt) override {
        if (dt == 0.0) return;
        auto& u = state_.values;
        const std::size_t n = u.size();
        const auto k1 = fn_(state_, params, D, config_);
        for (std::size_t k = 0; k < n; ++k) stage_.values[k] = u[k] + 0.5 * dt * k1[k];
        const auto k2 = fn_(stage_, params, D, config_);
        for (std::size_t k = 0; k < n; ++k) stage_.values[k] = u[k] + 0.5 * dt * k2[k];
        const auto k3 = fn_(stage_, params, D, config_);
        for (std::size_t k = 0; k < n; ++k) stage_.values[k] = u[k] + dt * k3[k];
        const auto k4 = fn_(stage_, params, D, config_);
        for (std::size_t k = 0; k < n; ++k) u[k] += dt / 6.0 * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);
    }

private:
    EvolutionConfig config_;
    WignerField state_, stage_;
    RhsFn fn_;
};

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double a) { return std::isfinite(a); });
}

void require_stable(const PhaseSpaceGrid& grid, const SystemParams& params, double D, double dt,
                    const EvolutionConfig& config) {
    const double s = stability_number(grid, params, D, dt, config);
    if (s > 1.0) {
        throw ConfigError("time step " + std::to_string(dt) + " is unstable for the " +
                          to_string(config.integrator) + " scheme (stability number " + std::to_string(s) +
                          " > 1)");
    }
}

}  // namespace

Propagator::Propagator(const PhaseSpaceGrid& grid, const EvolutionConfig& config) {
    config.validate();
    switch (config.integrator) {
        case Integrator::Spectral: impl_ = std::make_unique<LawsonImpl>(grid, config); break;
        case Integrator::SplitOperator: impl_ = std::make_unique<SplitImpl>(grid, config); break;
        case Integrator::SpectralRk4: impl_ = std::make_unique<Rk4Impl>(grid, config, &rhs); break;
        case Integrator::FiniteDifferenceOracle: impl_ = std::make_unique<Rk4Impl>(grid, config, &rhs_fd); break;
    }
}

Propagator::~Propagator() = default;
Propagator::Propagator(Propagator&&) noexcept = default;
Propagator& Propagator::operator=(Propagator&&) noexcept = default;

void Propagator::load(const WignerField& field) { impl_->load(field); }
void Propagator::advance(const SystemParams& params, double D, double dt) { impl_->advance(params, D, dt); }
void Propagator::store(WignerField& field) const { impl_->store(field); }
double Propagator::imag_residue() const { return impl_->imag_residue(); }

WignerField step(const WignerField& field, const SystemParams& params, double D, double dt,
                 const EvolutionConfig& config) {
    params.validate();
    if (dt == 0.0) return field;
    if (dt < 0.0) throw ConfigError("dt must be non-negative");
    require_stable(field.grid, params, D, dt, config);
    Propagator prop(field.grid, config);
    prop.load(field);
    prop.advance(params, D, dt);
    WignerField out(field.grid, field.time + dt);
    prop.store(out);
    if (!all_finite(out.values)) throw BlowUpError("non-finite Wigner field after step", out.time);
    return out;
}

WignerField oracle_step_fd(const WignerField& field, const SystemParams& params, double D, double dt,
                           const EvolutionConfig& config) {
    EvolutionConfig cfg = config;
    cfg.integrator = Integrator::FiniteDifferenceOracle;
    return step(field, params, D, dt, cfg);
}

EvolutionResult evolve(WignerField field, const SystemParams& params, const GeneralSchedule& schedule,
                       const EvolutionConfig& config, const Observer& observer) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    params.validate();
    const double t0 = field.time;
    const double t_end = config.t_end;
    if (t_end < t0) throw ConfigError("t_end precedes the field time");
    if (schedule.end_time() < t_end) throw ConfigError("schedule ends before t_end");

    DiagnosticsSeries series;
    auto sample = [&](const WignerField& f, double residue) {
        DiagnosticsRecord rec = compute_record(f);
        rec.imag_residue = residue;
        if (!std::isfinite(rec.norm) || !std::isfinite(rec.w_min) || !std::isfinite(rec.purity)) {
            throw BlowUpError("Wigner field became non-finite at t = " + std::to_string(f.time), f.time);
        }
        series.records.push_back(rec);
        if (observer) observer(f, rec);
    };

    sample(field, 0.0);
    if (t_end == t0) return {std::move(field), std::move(series)};

    std::vector<double> bounds{t0};
    for (double s : schedule.switch_times(t0, t_end)) bounds.push_back(s);
    bounds.push_back(t_end);

    Propagator prop(field.grid, config);
    prop.load(field);
    long step_count = 0;
    for (std::size_t seg = 0; seg + 1 < bounds.size(); ++seg) {
        const double a = bounds[seg], b = bounds[seg + 1];
        const auto n = static_cast<long>(std::ceil((b - a) / config.dt - 1e-9));
        const double h = (b - a) / static_cast<double>(n);
        const ScheduleValue sv = schedule.at(a);
        const SystemParams p = with_omega2(params, sv.omega2);
        require_stable(field.grid, p, sv.D, h, config);
        for (long k = 1; k <= n; ++k) {
            prop.advance(p, sv.D, h);
            ++step_count;
            if (step_count % config.sample_every == 0) {
                prop.store(field);
                field.time = k == n ? b : a + static_cast<double>(k) * h;
                sample(field, prop.imag_residue());
            }
        }
    }
    prop.store(field);
    field.time = t_end;
    if (!all_finite(field.values)) throw BlowUpError("Wigner field became non-finite", t_end);

    try {
        fill_entropy_rate(series);
    } catch (const std::invalid_argument&) {
        // non-uniform sampling across segments; rates stay zero
    }
    series.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return {std::move(field), std::move(series)};
}

}  // namespace wq
