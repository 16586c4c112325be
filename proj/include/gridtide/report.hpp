#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "gridtide/dynamics.hpp"

namespace gridtide {

/// FNV-1a 64-bit digest as 16 lowercase hex digits.
std::string fnv1a64_hex(std::string_view bytes);

/// Shortest-stable text form used in every CSV/JSON output ("%.12g").
std::string format_number(double x);

/// Columns: t, omega_hz_g<bus>..., phi_rad_g<bus>..., v_pu_b<bus>...,
/// p_acvg_mw_b<bus>..., delta_omega_hz. Each comment line is written first,
/// prefixed with "# ".
void write_timeseries_csv(std::ostream& out, const TimeSeries& ts, std::span<const std::string> comments = {});

}  // namespace gridtide
