// scenario.hpp - configuration, runs and event extraction behind the CLI

#pragma once

#include <cmath>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wquench/core.hpp"
#include "wquench/diagnostics.hpp"
#include "wquench/engine.hpp"
#include "wquench/states.hpp"
#include "wquench/timescales.hpp"

namespace wq {

const char* code_version();

struct GridSpec {
    std::size_t nx{256};
    std::size_t np{256};
    double x_min{-8.0};
    double x_max{8.0};
    double p_min{-8.0};
    double p_max{8.0};

    PhaseSpaceGrid build() const { return build_grid(nx, np, x_min, x_max, p_min, p_max); }
};

/// Constants for reading revival and suppression times off a Gamma series.
struct EventThresholds {
    double revival_peak_fraction{0.05};          // of the post-quench peak
    double revival_floor_factor{10.0};           // times the post-quench noise floor
    double rise_factor{10.0};                    // growth over the running minimum that ends the trough
    double suppression_factor{std::exp(-2.0)};   // of Gamma(t_max)
    double lower_bound_D_below{0.01};            // D_after below this: t_D2 is only a lower bound
};

struct ScenarioConfig {
    std::string name{"scenario"};
    GridSpec grid;
    SystemParams system;
    std::optional<QuenchSchedule> quench;  // set when the schedule came from a two-segment quench
    GeneralSchedule schedule{GeneralSchedule::from_quench(QuenchSchedule{})};
    double reference_time{0.0};            // t_c used by the estimates and event search
    InitialStateSpec state;
    EvolutionConfig evolution;
    std::string output_dir;                // relative to the output root; empty means `name`
    std::vector<double> snapshot_times;
    bool snapshot_csv{false};
    EventThresholds events;
    std::optional<double> gamma0;

    void validate() const;
};

/**
 * INI-style text: [scenario] [grid] [system] [schedule] [state] [evolution]
 * [events]. Unknown sections or keys are errors; absent keys keep the
 * defaults above. Throws ConfigError.
 */
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Every effective parameter as a JSON object text.
std::string config_to_json(const ScenarioConfig& config);

struct MeasuredEvents {
    std::optional<double> first_decay;  // Gamma falls to Gamma(0)/e (states with Gamma(0) > 0)
    std::optional<double> trough_time;  // end of the post-quench decay
    double noise_floor{0.0};            // Gamma at the trough
    std::optional<double> t_max;        // argmax of Gamma after the trough
    double peak_gamma{0.0};
    double revival_threshold{0.0};
    double suppression_threshold{0.0};
    std::optional<double> revival;
    std::optional<double> suppression;
};

/**
 * Trough: running minimum of Gamma over t > reference_time, frozen at the first
 * sample exceeding rise_factor times it. Revival: first crossing after the
 * trough of max(revival_peak_fraction * peak, revival_floor_factor * floor).
 * Suppression: first crossing after t_max below suppression_factor * peak.
 * Crossing times are linearly interpolated between samples.
 */
MeasuredEvents measure_events(const DiagnosticsSeries& series, double reference_time,
                              const EventThresholds& thresholds);

struct TimescaleReport {
    TimescaleEstimates estimates;
    MeasuredEvents measured;
    double sigma_p_at_tc{0.0};
    std::optional<double> sigma_p_at_tmax;
};

TimescaleReport report_timescales(const ScenarioConfig& config, const DiagnosticsSeries& series);

/// Side-by-side estimate / measurement table.
std::string format_report(const TimescaleReport& report);
std::string report_to_json(const TimescaleReport& report);

struct RunOutcome {
    DiagnosticsSeries series;
    std::filesystem::path directory;
    std::vector<std::filesystem::path> snapshots;
    TimescaleReport report;
};

/// WQ_OUTPUT_ROOT when set, else `fallback`.
std::filesystem::path output_root(const std::filesystem::path& fallback = "output");

/**
 * Builds the initial state, evolves it and writes series.csv, manifest.json and
 * the requested snapshots under output_root / (output_dir or name). On blow-up
 * the partial series and a manifest with status "blow_up" are written before
 * the BlowUpError propagates.
 */
RunOutcome run_scenario(const ScenarioConfig& config, const std::filesystem::path& root);

}  // namespace wq
