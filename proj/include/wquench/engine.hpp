// engine.hpp - time evolution of the Wigner field under the high-temperature
// master equation
//
//   dW/dt = -(p/M) dW/dx + V'(x) dW/dp - (V'''(x)/24) d^3W/dp^3 + D d^2W/dp^2
//
// with V = M Omega^2 x^2 / 2 + lambda x^4 / 4 (+ an optional smooth wall for x < 0).

#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "wquench/core.hpp"
#include "wquench/diagnostics.hpp"

namespace wq {

enum class Integrator {
    Spectral,               ///< RK4 in the interaction picture of the exact p-operator (reference)
    SplitOperator,          ///< Strang splitting of exact advection and exact p-operator; for stiff walls
    SpectralRk4,            ///< classical RK4 on the full spectral rhs; needs a small dt
    FiniteDifferenceOracle  ///< classical RK4 on central finite differences; tests only
};

std::string to_string(Integrator integrator);
Integrator integrator_from_string(const std::string& name);

struct EvolutionConfig {
    double dt{1e-3};
    double t_end{8.0};
    int sample_every{10};
    bool wall_enabled{false};
    double wall_stiffness{1e3};  // V_wall = stiffness * x^6 for x < 0
    Integrator integrator{Integrator::Spectral};
    bool dealias{true};          // 2/3-rule truncation in k_x and k_p (spectral schemes)
    int fd_order{4};             // 2, 4 or 6 (finite-difference oracle)

    void validate() const;
};

/// Potential felt by the field, including the optional wall.
struct Potential {
    double mass{1.0};
    double lambda{0.0};
    double omega2{1.0};
    bool wall{false};
    double wall_stiffness{1e3};

    Potential(const SystemParams& params, const EvolutionConfig& config);

    double value(double x) const;
    double first_derivative(double x) const;
    double third_derivative(double x) const;
};

/// Spectral evaluation of the full right-hand side.
std::vector<double> rhs(const WignerField& field, const SystemParams& params, double D,
                        const EvolutionConfig& config = {});

/// Same operator with central finite differences of order config.fd_order.
std::vector<double> rhs_fd(const WignerField& field, const SystemParams& params, double D,
                           const EvolutionConfig& config = {});

/**
 * dt times the fastest rate the chosen scheme integrates explicitly, divided by
 * the RK4 stability limit 2 sqrt(2). Values <= 1 are stable.
 *
 * Spectral: only the advection -(p/M) d/dx is explicit, so this is
 * dt * max|p| kx_max / M. SplitOperator has no explicit part and returns 0.
 * The RK4 schemes also bound the p-derivative terms (cubic, potential and
 * diffusion), which is much stricter.
 */
double stability_number(const PhaseSpaceGrid& grid, const SystemParams& params, double D, double dt,
                        const EvolutionConfig& config = {});

/// One step with config.integrator; throws ConfigError if unstable, BlowUpError on non-finite output.
WignerField step(const WignerField& field, const SystemParams& params, double D, double dt,
                 const EvolutionConfig& config = {});

/// One RK4 step of rhs_fd.
WignerField oracle_step_fd(const WignerField& field, const SystemParams& params, double D, double dt,
                           const EvolutionConfig& config = {});

/**
 * Reusable stepping state for one grid and scheme. Holds the FFT plans and the
 * exponential factors for the current (Omega^2, D, dt); the field lives in
 * whatever representation the scheme prefers between load() and store().
 */
class Propagator {
public:
    Propagator(const PhaseSpaceGrid& grid, const EvolutionConfig& config);
    ~Propagator();
    Propagator(Propagator&&) noexcept;
    Propagator& operator=(Propagator&&) noexcept;

    void load(const WignerField& field);
    void advance(const SystemParams& params, double D, double dt);
    void store(WignerField& field) const;

    /// Largest |Im| found on the self-conjugate modes after the last advance.
    double imag_residue() const;

    struct Impl;

private:
    std::unique_ptr<Impl> impl_;
};

using Observer = std::function<void(const WignerField&, const DiagnosticsRecord&)>;

struct EvolutionResult {
    WignerField final_field;
    DiagnosticsSeries series;
};

/**
 * Integrates from field.time to config.t_end. Step boundaries are forced onto
 * every schedule breakpoint; within a segment the step is the largest value
 * <= config.dt that divides it evenly. A DiagnosticsRecord is produced at the
 * start and every config.sample_every steps, handed to `observer` and kept in
 * the returned series. Non-finite fields raise BlowUpError.
 */
EvolutionResult evolve(WignerField field, const SystemParams& params, const GeneralSchedule& schedule,
                       const EvolutionConfig& config, const Observer& observer = {});

}  // namespace wq
