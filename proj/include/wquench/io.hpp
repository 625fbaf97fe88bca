// io.hpp - plain-text time series and snapshot files

#pragma once

#include <filesystem>
#include <string_view>

#include "wquench/core.hpp"
#include "wquench/diagnostics.hpp"

namespace wq {

inline constexpr std::string_view kTimeseriesHeader =
    "t,gamma,s_lin,s_lin_rate,mean_x,mean_p,sigma_x,sigma_p,norm,w_min";

/// One row per record, 17 significant digits. Throws IoError.
void export_timeseries(const DiagnosticsSeries& series, const std::filesystem::path& path);

/// Reads the columns written by export_timeseries; other record fields stay zero.
DiagnosticsSeries import_timeseries(const std::filesystem::path& path);

/**
 * Text header terminated by a line "end", then nx*np little-endian float64
 * values, row-major with p fastest.
 */
void export_snapshot(const WignerField& field, const std::filesystem::path& path);
WignerField import_snapshot(const std::filesystem::path& path);

/// "x,p,w" rows; meant for small grids.
void export_snapshot_csv(const WignerField& field, const std::filesystem::path& path);

}  // namespace wq
