#include "wquench/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "wquench/io.hpp"

#ifndef WQUENCH_VERSION
#define WQUENCH_VERSION "unknown"
#endif

namespace wq {

namespace {

using boost::property_tree::ptree;
using Json = nlohmann::ordered_json;

const std::map<std::string, std::set<std::string>>& allowed_keys() {
    static const std::map<std::string, std::set<std::string>> keys{
        {"scenario", {"name", "output_dir", "snapshot_times", "snapshot_csv"}},
        {"grid", {"nx", "np", "x_min", "x_max", "p_min", "p_max"}},
        {"system", {"mass", "lambda", "omega2"}},
        {"schedule",
         {"type", "t_c", "omega2_before", "omega2_after", "D_before", "D_after", "breakpoints", "gamma0"}},
        {"state", {"kind", "L0", "P0", "x0", "p0", "delta"}},
        {"evolution",
         {"dt", "t_end", "sample_every", "wall_enabled", "wall_stiffness", "integrator", "dealias", "fd_order"}},
        {"events",
         {"reference_time", "revival_peak_fraction", "revival_floor_factor", "rise_factor", "suppression_factor",
          "lower_bound_D_below"}},
    };
    return keys;
}

double to_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) throw ConfigError(key + ": not a number: '" + s + "'");
    return v;
}

long to_integer(const std::string& s, const std::string& key) {
    long v = 0;
    const char* end = s.data() + s.size();
    const auto res = std::from_chars(s.data(), end, v);
    if (res.ec != std::errc{} || res.ptr != end) throw ConfigError(key + ": not an integer: '" + s + "'");
    return v;
}

bool to_bool(const std::string& s, const std::string& key) {
    if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
    if (s == "false" || s == "no" || s == "off" || s == "0") return false;
    throw ConfigError(key + ": not a boolean: '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, sep)) {
        const auto b = item.find_first_not_of(" \t");
        const auto e = item.find_last_not_of(" \t");
        if (b == std::string::npos) {
            out.emplace_back();
        } else {
            out.push_back(item.substr(b, e - b + 1));
        }
    }
    return out;
}

// Typed lookups within one section; absent keys leave the target untouched.
struct Section {
    const ptree* tree;
    std::string name;

    std::optional<std::string> raw(const char* key) const {
        if (!tree) return std::nullopt;
        if (auto v = tree->get_optional<std::string>(key)) return *v;
        return std::nullopt;
    }
    std::string qualified(const char* key) const { return name + "." + key; }

    void get(const char* key, double& out) const {
        if (auto v = raw(key)) out = to_double(*v, qualified(key));
    }
    void get(const char* key, std::size_t& out) const {
        if (auto v = raw(key)) {
            const long n = to_integer(*v, qualified(key));
            if (n < 0) throw ConfigError(qualified(key) + " must be non-negative");
            out = static_cast<std::size_t>(n);
        }
    }
    void get(const char* key, int& out) const {
        if (auto v = raw(key)) out = static_cast<int>(to_integer(*v, qualified(key)));
    }
    void get(const char* key, bool& out) const {
        if (auto v = raw(key)) out = to_bool(*v, qualified(key));
    }
    void get(const char* key, std::string& out) const {
        if (auto v = raw(key)) out = *v;
    }
};

Section section(const ptree& root, const std::string& name) {
    const auto child = root.get_child_optional(name);
    return {child ? &*child : nullptr, name};
}

std::vector<GeneralSchedule::Breakpoint> parse_breakpoints(const std::string& text) {
    std::vector<GeneralSchedule::Breakpoint> out;
    for (const auto& item : split(text, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 3) {
            throw ConfigError("schedule.breakpoints: expected time:omega2:D, got '" + item + "'");
        }
        out.push_back({to_double(parts[0], "schedule.breakpoints"), to_double(parts[1], "schedule.breakpoints"),
                       to_double(parts[2], "schedule.breakpoints")});
    }
    if (out.empty()) throw ConfigError("schedule.breakpoints is empty");
    return out;
}

double default_reference_time(const GeneralSchedule& schedule) {
    const auto bps = schedule.breakpoints();
    for (const auto& bp : bps) {
        if (bp.omega2 < 0.0) return std::max(0.0, bp.time);
    }
    return std::max(0.0, bps.front().time);
}

// Linear interpolation of a record field at time t.
template <class Getter>
double interpolate(const std::vector<DiagnosticsRecord>& r, double t, Getter get) {
    if (r.empty()) throw std::invalid_argument("empty series");
    if (t <= r.front().t) return get(r.front());
    for (std::size_t k = 1; k < r.size(); ++k) {
        if (r[k].t >= t) {
            const double w = (t - r[k - 1].t) / (r[k].t - r[k - 1].t);
            return (1.0 - w) * get(r[k - 1]) + w * get(r[k]);
        }
    }
    return get(r.back());
}

double crossing(const DiagnosticsRecord& a, const DiagnosticsRecord& b, double level) {
    if (b.gamma == a.gamma) return b.t;
    const double w = (level - a.gamma) / (b.gamma - a.gamma);
    return a.t + std::clamp(w, 0.0, 1.0) * (b.t - a.t);
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string fmt(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

Json schedule_json(const ScenarioConfig& c) {
    Json s;
    if (c.quench) {
        s["type"] = "quench";
        s["t_c"] = c.quench->t_c;
        s["omega2_before"] = c.quench->omega2_before;
        s["omega2_after"] = c.quench->omega2_after;
        s["D_before"] = c.quench->D_before;
        s["D_after"] = c.quench->D_after;
    } else {
        s["type"] = "breakpoints";
    }
    Json bps = Json::array();
    for (const auto& bp : c.schedule.breakpoints()) bps.push_back({{"time", bp.time}, {"omega2", bp.omega2}, {"D", bp.D}});
    s["breakpoints"] = bps;
    s["gamma0"] = optional_json(c.gamma0);
    return s;
}

Json config_json(const ScenarioConfig& c) {
    Json j;
    j["scenario"] = {{"name", c.name},
                     {"output_dir", c.output_dir.empty() ? c.name : c.output_dir},
                     {"snapshot_times", c.snapshot_times},
                     {"snapshot_csv", c.snapshot_csv}};
    j["grid"] = {{"nx", c.grid.nx},       {"np", c.grid.np},       {"x_min", c.grid.x_min},
                 {"x_max", c.grid.x_max}, {"p_min", c.grid.p_min}, {"p_max", c.grid.p_max}};
    j["system"] = {{"mass", c.system.mass}, {"lambda", c.system.lambda}, {"omega2", c.system.omega2}};
    j["schedule"] = schedule_json(c);
    j["state"] = {{"kind", to_string(c.state.kind)}, {"L0", c.state.L0}, {"P0", c.state.P0},
                  {"x0", c.state.x0},                {"p0", c.state.p0}, {"delta", c.state.delta}};
    j["evolution"] = {{"dt", c.evolution.dt},
                      {"t_end", c.evolution.t_end},
                      {"sample_every", c.evolution.sample_every},
                      {"wall_enabled", c.evolution.wall_enabled},
                      {"wall_stiffness", c.evolution.wall_stiffness},
                      {"integrator", to_string(c.evolution.integrator)},
                      {"dealias", c.evolution.dealias},
                      {"fd_order", c.evolution.fd_order}};
    j["events"] = {{"reference_time", c.reference_time},
                   {"revival_peak_fraction", c.events.revival_peak_fraction},
                   {"revival_floor_factor", c.events.revival_floor_factor},
                   {"rise_factor", c.events.rise_factor},
                   {"suppression_factor", c.events.suppression_factor},
                   {"lower_bound_D_below", c.events.lower_bound_D_below}};
    return j;
}

Json flagged_json(const FlaggedTime& f) { return {{"value", f.value}, {"degenerate", f.degenerate}}; }

Json report_json(const TimescaleReport& r) {
    const auto& e = r.estimates;
    const auto& m = r.measured;
    Json j;
    j["estimates"] = {{"t_D1", optional_json(e.t_D1)},
                      {"chi", e.chi},
                      {"Lambda", e.Lambda},
                      {"sigma_c", e.sigma_c},
                      {"t_chi", flagged_json(e.t_chi)},
                      {"t_max", optional_json(e.t_max)},
                      {"t_D2", e.t_D2 ? flagged_json(*e.t_D2) : Json(nullptr)},
                      {"t_D2_lower_bound", e.t_D2_lower_bound},
                      {"high_T_validity", optional_json(e.high_T_validity)}};
    j["measured"] = {{"first_decay", optional_json(m.first_decay)},
                     {"trough_time", optional_json(m.trough_time)},
                     {"noise_floor", m.noise_floor},
                     {"t_max", optional_json(m.t_max)},
                     {"peak_gamma", m.peak_gamma},
                     {"revival_threshold", m.revival_threshold},
                     {"suppression_threshold", m.suppression_threshold},
                     {"revival", optional_json(m.revival)},
                     {"suppression", optional_json(m.suppression)}};
    j["sigma_p_at_tc"] = r.sigma_p_at_tc;
    j["sigma_p_at_tmax"] = optional_json(r.sigma_p_at_tmax);
    return j;
}

struct RunSummary {
    double max_norm_error{0.0};
    double max_imag_residue{0.0};
    double max_purity{0.0};
    double max_boundary_mass{0.0};

    void add(const DiagnosticsRecord& rec) {
        max_norm_error = std::max(max_norm_error, std::abs(rec.norm - 1.0));
        max_imag_residue = std::max(max_imag_residue, rec.imag_residue);
        max_purity = std::max(max_purity, rec.purity);
        max_boundary_mass = std::max(max_boundary_mass, rec.boundary_mass);
    }
};

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

const char* code_version() { return WQUENCH_VERSION; }

void ScenarioConfig::validate() const {
    if (name.empty()) throw ConfigError("scenario.name must not be empty");
    if (name.find_first_of("/\\") != std::string::npos) throw ConfigError("scenario.name must not contain path separators");
    (void)grid.build();
    system.validate();
    if (quench) quench->validate();
    state.validate();
    evolution.validate();
    if (schedule.end_time() < evolution.t_end) throw ConfigError("schedule ends before evolution.t_end");
    if (!(reference_time >= 0.0) || reference_time > evolution.t_end) {
        throw ConfigError("events.reference_time must lie in [0, t_end]");
    }
    for (double t : snapshot_times) {
        if (!(t >= 0.0) || t > evolution.t_end + 1e-12) throw ConfigError("snapshot times must lie in [0, t_end]");
    }
    const auto& e = events;
    if (!(e.revival_peak_fraction > 0.0 && e.revival_peak_fraction < 1.0)) {
        throw ConfigError("events.revival_peak_fraction must lie in (0, 1)");
    }
    if (!(e.revival_floor_factor >= 1.0)) throw ConfigError("events.revival_floor_factor must be >= 1");
    if (!(e.rise_factor > 1.0)) throw ConfigError("events.rise_factor must be > 1");
    if (!(e.suppression_factor > 0.0 && e.suppression_factor < 1.0)) {
        throw ConfigError("events.suppression_factor must lie in (0, 1)");
    }
    if (!(e.lower_bound_D_below >= 0.0)) throw ConfigError("events.lower_bound_D_below must be non-negative");
    if (gamma0 && !(*gamma0 > 0.0)) throw ConfigError("schedule.gamma0 must be positive");
}

ScenarioConfig parse_config(const std::string& text) {
    ptree root;
    try {
        std::istringstream in(text);
        boost::property_tree::ini_parser::read_ini(in, root);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }

    const auto& allowed = allowed_keys();
    for (const auto& [sec_name, sec] : root) {
        const auto it = allowed.find(sec_name);
        if (it == allowed.end()) {
            if (sec.empty()) throw ConfigError("key outside any section: '" + sec_name + "'");
            throw ConfigError("unknown section [" + sec_name + "]");
        }
        for (const auto& [key, value] : sec) {
            if (!it->second.contains(key)) throw ConfigError("unknown key '" + key + "' in [" + sec_name + "]");
        }
    }

    ScenarioConfig c;
    const Section scen = section(root, "scenario");
    scen.get("name", c.name);
    scen.get("output_dir", c.output_dir);
    scen.get("snapshot_csv", c.snapshot_csv);
    if (auto v = scen.raw("snapshot_times")) {
        for (const auto& item : split(*v, ',')) c.snapshot_times.push_back(to_double(item, "scenario.snapshot_times"));
        std::sort(c.snapshot_times.begin(), c.snapshot_times.end());
    }

    const Section grid = section(root, "grid");
    grid.get("nx", c.grid.nx);
    grid.get("np", c.grid.np);
    grid.get("x_min", c.grid.x_min);
    grid.get("x_max", c.grid.x_max);
    grid.get("p_min", c.grid.p_min);
    grid.get("p_max", c.grid.p_max);

    const Section sys = section(root, "system");
    sys.get("mass", c.system.mass);
    sys.get("lambda", c.system.lambda);
    sys.get("omega2", c.system.omega2);

    const Section sched = section(root, "schedule");
    std::string type = "quench";
    sched.get("type", type);
    if (auto g = sched.raw("gamma0")) c.gamma0 = to_double(*g, "schedule.gamma0");
    if (type == "quench") {
        if (sched.raw("breakpoints")) throw ConfigError("schedule.breakpoints requires type = breakpoints");
        QuenchSchedule q;
        sched.get("t_c", q.t_c);
        sched.get("omega2_before", q.omega2_before);
        sched.get("omega2_after", q.omega2_after);
        sched.get("D_before", q.D_before);
        sched.get("D_after", q.D_after);
        q.validate();
        c.quench = q;
        c.schedule = GeneralSchedule::from_quench(q);
        c.reference_time = q.t_c;
    } else if (type == "breakpoints") {
        for (const char* key : {"t_c", "omega2_before", "omega2_after", "D_before", "D_after"}) {
            if (sched.raw(key)) throw ConfigError(std::string("schedule.") + key + " requires type = quench");
        }
        const auto bps = sched.raw("breakpoints");
        if (!bps) throw ConfigError("schedule.breakpoints is required for type = breakpoints");
        c.schedule = GeneralSchedule(parse_breakpoints(*bps));
        c.reference_time = default_reference_time(c.schedule);
    } else {
        throw ConfigError("schedule.type must be 'quench' or 'breakpoints', got '" + type + "'");
    }

    const Section st = section(root, "state");
    if (auto kind = st.raw("kind")) c.state.kind = state_kind_from_string(*kind);
    st.get("L0", c.state.L0);
    st.get("P0", c.state.P0);
    st.get("x0", c.state.x0);
    st.get("p0", c.state.p0);
    st.get("delta", c.state.delta);

    const Section ev = section(root, "evolution");
    ev.get("dt", c.evolution.dt);
    ev.get("t_end", c.evolution.t_end);
    ev.get("sample_every", c.evolution.sample_every);
    ev.get("wall_enabled", c.evolution.wall_enabled);
    ev.get("wall_stiffness", c.evolution.wall_stiffness);
    if (auto integ = ev.raw("integrator")) c.evolution.integrator = integrator_from_string(*integ);
    ev.get("dealias", c.evolution.dealias);
    ev.get("fd_order", c.evolution.fd_order);

    const Section evt = section(root, "events");
    evt.get("reference_time", c.reference_time);
    evt.get("revival_peak_fraction", c.events.revival_peak_fraction);
    evt.get("revival_floor_factor", c.events.revival_floor_factor);
    evt.get("rise_factor", c.events.rise_factor);
    evt.get("suppression_factor", c.events.suppression_factor);
    evt.get("lower_bound_D_below", c.events.lower_bound_D_below);

    c.validate();
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_config(buf.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

std::string config_to_json(const ScenarioConfig& config) { return config_json(config).dump(2); }

MeasuredEvents measure_events(const DiagnosticsSeries& series, double reference_time,
                              const EventThresholds& thresholds) {
    const auto& r = series.records;
    MeasuredEvents m;
    if (r.empty()) return m;

    if (r.front().gamma > 0.0) {
        const double level = r.front().gamma / std::exp(1.0);
        for (std::size_t k = 1; k < r.size(); ++k) {
            if (r[k].gamma <= level) {
                m.first_decay = crossing(r[k - 1], r[k], level);
                break;
            }
        }
    }

    std::size_t k0 = 0;
    while (k0 < r.size() && !(r[k0].t > reference_time + 1e-12)) ++k0;
    if (k0 == r.size()) return m;

    std::size_t trough = k0;
    double running_min = r[k0].gamma;
    bool rose = false;
    for (std::size_t k = k0 + 1; k < r.size(); ++k) {
        if (r[k].gamma < running_min) {
            running_min = r[k].gamma;
            trough = k;
        } else if (r[k].gamma > 0.0 && r[k].gamma > thresholds.rise_factor * running_min) {
            rose = true;
            break;
        }
    }
    m.trough_time = r[trough].t;
    m.noise_floor = running_min;
    if (!rose) return m;

    std::size_t peak = trough;
    for (std::size_t k = trough; k < r.size(); ++k) {
        if (r[k].gamma > r[peak].gamma) peak = k;
    }
    m.t_max = r[peak].t;
    m.peak_gamma = r[peak].gamma;
    m.revival_threshold =
        std::max(thresholds.revival_peak_fraction * m.peak_gamma, thresholds.revival_floor_factor * m.noise_floor);
    m.suppression_threshold = thresholds.suppression_factor * m.peak_gamma;

    for (std::size_t k = trough + 1; k <= peak; ++k) {
        if (r[k].gamma > m.revival_threshold) {
            m.revival = crossing(r[k - 1], r[k], m.revival_threshold);
            break;
        }
    }
    for (std::size_t k = peak + 1; k < r.size(); ++k) {
        if (r[k].gamma < m.suppression_threshold) {
            m.suppression = crossing(r[k - 1], r[k], m.suppression_threshold);
            break;
        }
    }
    return m;
}

TimescaleReport report_timescales(const ScenarioConfig& config, const DiagnosticsSeries& series) {
    if (series.records.empty()) throw std::invalid_argument("report_timescales needs a non-empty series");
    const double tc = config.reference_time;
    const ScheduleValue before = config.schedule.at(0.0);
    const ScheduleValue after = config.schedule.at(tc);
    const double omega0_sq = std::abs(after.omega2);
    if (!(omega0_sq > 0.0)) throw ConfigError("timescale estimates need a non-zero post-quench omega2");
    if (!(config.system.lambda > 0.0)) throw ConfigError("timescale estimates need lambda > 0");

    TimescaleReport rep;
    rep.measured = measure_events(series, tc, config.events);
    auto& e = rep.estimates;
    const auto& recs = series.records;
    rep.sigma_p_at_tc = interpolate(recs, tc, [](const DiagnosticsRecord& r) { return r.sigma_p; });

    if (config.state.kind == StateKind::DoubleGaussian && config.state.L0 > 0.0 && before.D > 0.0) {
        e.t_D1 = estimate_t_d1(config.state.L0, before.D);
    }
    e.Lambda = lyapunov_linear(omega0_sq);
    e.chi = nonlinearity_scale_chi(omega0_sq, config.system.lambda);
    e.t_chi = estimate_t_chi(tc, e.Lambda, e.chi, rep.sigma_p_at_tc);
    e.sigma_c = sigma_critical(after.D, e.Lambda);
    e.t_D2_lower_bound = after.D < config.events.lower_bound_D_below;
    if (rep.measured.t_max) {
        e.t_max = rep.measured.t_max;
        rep.sigma_p_at_tmax = interpolate(recs, *e.t_max, [](const DiagnosticsRecord& r) { return r.sigma_p; });
        if (e.sigma_c > 0.0) e.t_D2 = estimate_t_d2(*e.t_max, e.Lambda, *rep.sigma_p_at_tmax, e.sigma_c);
    }
    if (config.gamma0) {
        const double D = std::min(before.D > 0.0 ? before.D : after.D, after.D > 0.0 ? after.D : before.D);
        if (D > 0.0) e.high_T_validity = high_temperature_validity(*config.gamma0, D);
    }
    return rep;
}

std::string format_report(const TimescaleReport& report) {
    const auto& e = report.estimates;
    const auto& m = report.measured;
    auto opt = [](const std::optional<double>& v) { return v ? fmt(*v, "%.4f") : std::string("absent"); };
    auto flagged = [](const FlaggedTime& f) { return fmt(f.value, "%.4f") + (f.degenerate ? " (degenerate)" : ""); };

    std::ostringstream out;
    char line[160];
    std::snprintf(line, sizeof line, "%-14s %-24s %-14s\n", "quantity", "estimate", "measured");
    out << line;
    auto row = [&](const char* name, const std::string& est, const std::string& meas) {
        std::snprintf(line, sizeof line, "%-14s %-24s %-14s\n", name, est.c_str(), meas.c_str());
        out << line;
    };
    row("t_D1", opt(e.t_D1), opt(m.first_decay));
    row("t_chi", flagged(e.t_chi), opt(m.revival));
    std::string d2 = e.t_D2 ? flagged(*e.t_D2) : std::string("absent");
    if (e.t_D2 && e.t_D2_lower_bound) d2 = ">= " + d2;
    row("t_D2", d2, opt(m.suppression));
    row("t_max", "-", opt(m.t_max));
    row("chi", fmt(e.chi, "%.4f"), "-");
    row("Lambda", fmt(e.Lambda, "%.4f"), "-");
    row("sigma_c", fmt(e.sigma_c, "%.4f"), "-");
    row("sigma_p(t_c)", "-", fmt(report.sigma_p_at_tc, "%.4f"));
    row("sigma_p(t_max)", "-", opt(report.sigma_p_at_tmax));
    row("peak gamma", "-", fmt(m.peak_gamma, "%.4e"));
    row("noise floor", "-", fmt(m.noise_floor, "%.4e"));
    if (e.high_T_validity) row("1/(k_B T)", fmt(*e.high_T_validity, "%.4f"), "-");
    return out.str();
}

std::string report_to_json(const TimescaleReport& report) { return report_json(report).dump(2); }

std::filesystem::path output_root(const std::filesystem::path& fallback) {
    if (const char* env = std::getenv("WQ_OUTPUT_ROOT"); env && *env) return env;
    return fallback;
}

RunOutcome run_scenario(const ScenarioConfig& config, const std::filesystem::path& root) {
    config.validate();
    RunOutcome outcome;
    outcome.directory = root / (config.output_dir.empty() ? config.name : config.output_dir);
    try {
        std::filesystem::create_directories(outcome.directory);
    } catch (const std::filesystem::filesystem_error& e) {
        throw IoError(std::string("cannot create output directory: ") + e.what());
    }
    const auto started = std::chrono::steady_clock::now();

    Json manifest;
    manifest["name"] = config.name;
    manifest["code_version"] = code_version();
    manifest["config"] = config_json(config);
    Json snapshots = Json::array();
    RunSummary summary;
    DiagnosticsSeries partial;

    std::size_t next_snapshot = 0;
    auto write_snapshot = [&](const WignerField& f) {
        char stem[64];
        std::snprintf(stem, sizeof stem, "snapshot_%02zu_t%.4f", next_snapshot, f.time);
        const auto bin = outcome.directory / (std::string(stem) + ".bin");
        export_snapshot(f, bin);
        outcome.snapshots.push_back(bin);
        Json item{{"file", bin.filename().string()},
                  {"requested_time", config.snapshot_times[next_snapshot]},
                  {"time", f.time}};
        if (config.snapshot_csv) {
            const auto csv = outcome.directory / (std::string(stem) + ".csv");
            export_snapshot_csv(f, csv);
            item["csv"] = csv.filename().string();
        }
        snapshots.push_back(item);
        ++next_snapshot;
    };
    const Observer observer = [&](const WignerField& f, const DiagnosticsRecord& rec) {
        partial.records.push_back(rec);
        summary.add(rec);
        while (next_snapshot < config.snapshot_times.size() && rec.t >= config.snapshot_times[next_snapshot] - 1e-9) {
            write_snapshot(f);
        }
    };

    auto finish_manifest = [&](const std::string& status) {
        manifest["status"] = status;
        manifest["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        manifest["records"] = partial.records.size();
        manifest["files"] = {{"series", "series.csv"}, {"snapshots", snapshots}};
        manifest["summary"] = {{"max_norm_error", summary.max_norm_error},
                               {"max_imag_residue", summary.max_imag_residue},
                               {"max_purity", summary.max_purity},
                               {"max_boundary_mass", summary.max_boundary_mass}};
    };

    std::optional<EvolutionResult> result;
    try {
        result = evolve(build_initial_state(config.grid.build(), config.state), config.system, config.schedule,
                        config.evolution, observer);
    } catch (const BlowUpError& err) {
        try {
            fill_entropy_rate(partial);
        } catch (const std::invalid_argument&) {
        }
        export_timeseries(partial, outcome.directory / "series.csv");
        finish_manifest("blow_up");
        manifest["error"] = {{"message", err.what()}, {"time", err.time}};
        write_text(outcome.directory / "manifest.json", manifest.dump(2) + "\n");
        throw;
    }
    while (next_snapshot < config.snapshot_times.size()) write_snapshot(result->final_field);

    outcome.series = std::move(result->series);
    outcome.series.config_echo = manifest["config"].dump();
    outcome.series.code_version = code_version();
    export_timeseries(outcome.series, outcome.directory / "series.csv");

    finish_manifest("ok");
    try {
        outcome.report = report_timescales(config, outcome.series);
        manifest["timescales"] = report_json(outcome.report);
    } catch (const ConfigError& e) {
        manifest["timescales"] = {{"error", e.what()}};
    }
    write_text(outcome.directory / "manifest.json", manifest.dump(2) + "\n");
    return outcome;
}

}  // namespace wq
