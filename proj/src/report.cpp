#include <cstdint>
#include <cstdio>
#include <ostream>

#include "gridtide/report.hpp"

namespace gridtide {

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string format_number(double x) {
  if (x == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

void write_timeseries_csv(std::ostream& out, const TimeSeries& ts, std::span<const std::string> comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << 't';
  for (int b : ts.generator_buses) out << ",omega_hz_g" << b;
  for (int b : ts.generator_buses) out << ",phi_rad_g" << b;
  for (int b : ts.acvg_buses) out << ",v_pu_b" << b;
  for (int b : ts.acvg_buses) out << ",p_acvg_mw_b" << b;
  out << ",delta_omega_hz\n";
  for (std::size_t k = 0; k < ts.size(); ++k) {
    out << format_number(ts.times[k]);
    for (double x : ts.omega_hz[k]) out << ',' << format_number(x);
    for (double x : ts.phi_rad[k]) out << ',' << format_number(x);
    for (double x : ts.v_pu[k]) out << ',' << format_number(x);
    for (double x : ts.p_acvg_mw[k]) out << ',' << format_number(x);
    out << ',' << format_number(ts.delta_omega_hz[k]) << '\n';
  }
}

}  // namespace gridtide
