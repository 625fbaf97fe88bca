#include "wquench/io.hpp"

#include <bit>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <vector>

namespace wq {

namespace {

constexpr std::string_view kSnapshotMagic = "wquench-snapshot 1";

std::string fmt17(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return {buf, res.ptr};
}

double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw IoError("malformed number '" + std::string(s) + "' in " + context);
    }
    return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    std::ofstream out(path, mode | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream in(path, mode);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    return in;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("write failed for " + path.string());
}

std::uint64_t to_little(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
    return v;
}

}  // namespace

void export_timeseries(const DiagnosticsSeries& series, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << kTimeseriesHeader << '\n';
    for (const auto& r : series.records) {
        out << fmt17(r.t) << ',' << fmt17(r.gamma) << ',' << fmt17(r.s_lin) << ',' << fmt17(r.s_lin_rate)
            << ',' << fmt17(r.mean_x) << ',' << fmt17(r.mean_p) << ',' << fmt17(r.sigma_x) << ','
            << fmt17(r.sigma_p) << ',' << fmt17(r.norm) << ',' << fmt17(r.w_min) << '\n';
    }
    finish(out, path);
}

DiagnosticsSeries import_timeseries(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line) || line != kTimeseriesHeader) {
        throw IoError(path.string() + ": missing or unexpected time-series header");
    }
    DiagnosticsSeries series;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> v;
        std::string_view rest = line;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        while (true) {
            const auto comma = rest.find(',');
            v.push_back(parse_double(rest.substr(0, comma), where));
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (v.size() != 10) throw IoError(where + ": expected 10 columns");
        DiagnosticsRecord r;
        r.t = v[0];
        r.gamma = v[1];
        r.s_lin = v[2];
        r.s_lin_rate = v[3];
        r.mean_x = v[4];
        r.mean_p = v[5];
        r.sigma_x = v[6];
        r.sigma_p = v[7];
        r.norm = v[8];
        r.w_min = v[9];
        series.records.push_back(r);
    }
    return series;
}

void export_snapshot(const WignerField& field, const std::filesystem::path& path) {
    const auto& g = field.grid;
    auto out = open_out(path, std::ios::out | std::ios::binary);
    out << kSnapshotMagic << '\n'
        << "nx " << g.nx() << '\n'
        << "np " << g.np() << '\n'
        << "x_min " << fmt17(g.x_min()) << '\n'
        << "x_max " << fmt17(g.x_max()) << '\n'
        << "p_min " << fmt17(g.p_min()) << '\n'
        << "p_max " << fmt17(g.p_max()) << '\n'
        << "time " << fmt17(field.time) << '\n'
        << "layout float64 little-endian row-major p-fastest\n"
        << "end\n";
    std::vector<std::uint64_t> raw(field.values.size());
    for (std::size_t k = 0; k < raw.size(); ++k) raw[k] = to_little(std::bit_cast<std::uint64_t>(field.values[k]));
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    finish(out, path);
}

WignerField import_snapshot(const std::filesystem::path& path) {
    auto in = open_in(path, std::ios::in | std::ios::binary);
    std::string line;
    if (!std::getline(in, line) || line != kSnapshotMagic) {
        throw IoError(path.string() + ": not a wquench snapshot");
    }
    std::map<std::string, std::string> header;
    while (std::getline(in, line) && line != "end") {
        const auto sp = line.find(' ');
        if (sp == std::string::npos) throw IoError(path.string() + ": malformed header line '" + line + "'");
        header[line.substr(0, sp)] = line.substr(sp + 1);
    }
    if (line != "end") throw IoError(path.string() + ": truncated header");
    auto get = [&](const std::string& key) {
        const auto it = header.find(key);
        if (it == header.end()) throw IoError(path.string() + ": header lacks '" + key + "'");
        return parse_double(it->second, path.string());
    };
    WignerField field(build_grid(static_cast<std::size_t>(get("nx")), static_cast<std::size_t>(get("np")),
                                 get("x_min"), get("x_max"), get("p_min"), get("p_max")),
                      get("time"));
    std::vector<std::uint64_t> raw(field.grid.size());
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8));
    if (in.gcount() != static_cast<std::streamsize>(raw.size() * 8)) {
        throw IoError(path.string() + ": truncated data block");
    }
    for (std::size_t k = 0; k < raw.size(); ++k) field.values[k] = std::bit_cast<double>(to_little(raw[k]));
    return field;
}

void export_snapshot_csv(const WignerField& field, const std::filesystem::path& path) {
    const auto& g = field.grid;
    auto out = open_out(path);
    out << "x,p,w\n";
    for (std::size_t i = 0; i < g.nx(); ++i) {
        for (std::size_t j = 0; j < g.np(); ++j) {
            out << fmt17(g.x(i)) << ',' << fmt17(g.p(j)) << ',' << fmt17(field.at(i, j)) << '\n';
        }
    }
    finish(out, path);
}

}  // namespace wq
