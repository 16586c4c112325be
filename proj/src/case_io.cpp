#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridtide/error.hpp"
#include "gridtide/netmodel.hpp"

namespace gridtide {

using nlohmann::json;

std::string_view to_string(BusKind kind) {
  switch (kind) {
    case BusKind::generator: return "generator";
    case BusKind::acvg: return "acvg";
    case BusKind::stub: return "stub";
  }
  return "?";
}

std::size_t NetworkCase::index_of(int bus_id) const {
  auto it = bus_index.find(bus_id);
  if (it == bus_index.end()) throw ValidationError("unknown bus " + std::to_string(bus_id));
  return it->second;
}

bool NetworkCase::has_bus(int bus_id) const { return bus_index.contains(bus_id); }

const Branch& NetworkCase::branch(int branch_id) const {
  for (const auto& b : branches)
    if (b.id == branch_id) return b;
  throw ValidationError("unknown branch " + std::to_string(branch_id));
}

Branch& NetworkCase::branch(int branch_id) {
  return const_cast<Branch&>(std::as_const(*this).branch(branch_id));
}

std::optional<int> NetworkCase::find_branch(int bus_a, int bus_b) const {
  for (const auto& b : branches)
    if ((b.from_bus == bus_a && b.to_bus == bus_b) || (b.from_bus == bus_b && b.to_bus == bus_a))
      return b.id;
  return std::nullopt;
}

namespace {

std::string where(std::string_view array, std::size_t i, std::string_view field) {
  std::ostringstream os;
  os << array << '[' << i << "]." << field;
  return os.str();
}

double get_number(const json& obj, std::string_view array, std::size_t i, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError("case: missing field " + where(array, i, field));
  if (!it->is_number()) throw ValidationError("case: " + where(array, i, field) + " must be a number");
  double v = it->get<double>();
  if (!std::isfinite(v)) throw ValidationError("case: " + where(array, i, field) + " is not finite");
  return v;
}

double get_number_or(const json& obj, std::string_view array, std::size_t i, const char* field,
                     double fallback) {
  if (!obj.contains(field)) return fallback;
  return get_number(obj, array, i, field);
}

int get_int(const json& obj, std::string_view array, std::size_t i, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ValidationError("case: missing field " + where(array, i, field));
  if (!it->is_number_integer())
    throw ValidationError("case: " + where(array, i, field) + " must be an integer");
  return it->get<int>();
}

bool get_bool_or(const json& obj, std::string_view array, std::size_t i, const char* field,
                 bool fallback) {
  auto it = obj.find(field);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) throw ValidationError("case: " + where(array, i, field) + " must be a boolean");
  return it->get<bool>();
}

const json& get_array(const json& doc, const char* name, bool required = true) {
  static const json empty = json::array();
  auto it = doc.find(name);
  if (it == doc.end()) {
    if (required) throw ValidationError(std::string("case: missing top-level array '") + name + "'");
    return empty;
  }
  if (!it->is_array()) throw ValidationError(std::string("case: '") + name + "' must be an array");
  return *it;
}

std::string locate(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
    if (text[k] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

void finalize_case(NetworkCase& c) {
  std::set<int> ids;
  for (const auto& b : c.buses) {
    if (!ids.insert(b.id).second) throw ValidationError("case: duplicate bus id " + std::to_string(b.id));
  }
  auto require_bus = [&](int id, const std::string& what) {
    if (!ids.contains(id))
      throw ValidationError("case: " + what + " references missing bus " + std::to_string(id));
  };

  std::set<int> branch_ids;
  for (const auto& br : c.branches) {
    const std::string what = "branch " + std::to_string(br.id);
    if (!branch_ids.insert(br.id).second) throw ValidationError("case: duplicate branch id " + std::to_string(br.id));
    require_bus(br.from_bus, what);
    require_bus(br.to_bus, what);
    if (br.from_bus == br.to_bus) throw ValidationError("case: " + what + " connects bus " + std::to_string(br.from_bus) + " to itself");
    if (br.in_service && (std::abs(br.series_admittance) == 0.0 || !std::isfinite(std::abs(br.series_admittance))))
      throw ValidationError("case: " + what + " has zero or non-finite series admittance");
    if (!(br.tap > 0.0)) throw ValidationError("case: " + what + " has non-positive tap");
  }

  std::set<int> gen_buses;
  int swing_count = 0;
  for (const auto& g : c.generators) {
    const std::string what = "generator at bus " + std::to_string(g.bus);
    require_bus(g.bus, what);
    if (!gen_buses.insert(g.bus).second) throw ValidationError("case: two generators at bus " + std::to_string(g.bus));
    if (!(g.transient_reactance_x > 0.0)) throw ValidationError("case: " + what + " needs transient reactance > 0");
    if (!(g.inertia_m > 0.0)) throw ValidationError("case: " + what + " needs inertia > 0");
    if (g.damping_d < 0.0) throw ValidationError("case: " + what + " has negative damping");
    if (g.is_swing) ++swing_count;
  }
  if (swing_count == 0) throw ValidationError("case: no swing generator");
  if (swing_count > 1) throw ValidationError("case: more than one swing generator");

  for (const auto& l : c.loads) require_bus(l.bus, "load");
  for (const auto& s : c.shunts) require_bus(s.bus, "shunt");
  std::set<int> acvg;
  for (int id : c.acvg_buses) {
    require_bus(id, "acvg");
    if (!acvg.insert(id).second) throw ValidationError("case: duplicate acvg at bus " + std::to_string(id));
  }
  c.acvg_buses.assign(acvg.begin(), acvg.end());

  std::sort(c.generators.begin(), c.generators.end(),
            [](const Generator& a, const Generator& b) { return a.bus < b.bus; });

  for (auto& b : c.buses) {
    b.hosts_acvg = acvg.contains(b.id);
    b.kind = gen_buses.contains(b.id) ? BusKind::generator
             : b.hosts_acvg          ? BusKind::acvg
                                     : BusKind::stub;
  }
  auto rank = [](BusKind k) { return k == BusKind::generator ? 0 : k == BusKind::acvg ? 1 : 2; };
  std::sort(c.buses.begin(), c.buses.end(), [&](const Bus& a, const Bus& b) {
    if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
    return a.id < b.id;
  });
  c.bus_index.clear();
  for (std::size_t k = 0; k < c.buses.size(); ++k) c.bus_index[c.buses[k].id] = k;
}

NetworkCase load_case(std::string_view case_text) {
  json doc;
  try {
    doc = json::parse(case_text.begin(), case_text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError("case: parse error at " + locate(case_text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("case: top level must be a JSON object");

  NetworkCase c;
  if (auto it = doc.find("system"); it != doc.end()) {
    c.base.mva_base = get_number_or(*it, "system", 0, "mva_base", 100.0);
    c.base.frequency_hz = get_number_or(*it, "system", 0, "frequency_hz", 60.0);
    if (!(c.base.mva_base > 0.0) || !(c.base.frequency_hz > 0.0))
      throw ValidationError("case: system.mva_base and system.frequency_hz must be positive");
  }
  if (auto it = doc.find("provenance"); it != doc.end() && it->is_string()) c.provenance = it->get<std::string>();
  if (auto it = doc.find("calibration"); it != doc.end()) c.calibration_json = it->dump();
  const double sbase = c.base.mva_base;

  const auto& buses = get_array(doc, "buses");
  for (std::size_t i = 0; i < buses.size(); ++i) {
    Bus b;
    b.id = get_int(buses[i], "buses", i, "id");
    b.base_voltage_kv = get_number_or(buses[i], "buses", i, "base_kv", 0.0);
    c.buses.push_back(b);
  }

  const auto& branches = get_array(doc, "branches");
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& j = branches[i];
    Branch br;
    br.id = j.contains("id") ? get_int(j, "branches", i, "id") : static_cast<int>(i + 1);
    br.from_bus = get_int(j, "branches", i, "from");
    br.to_bus = get_int(j, "branches", i, "to");
    const double r = get_number_or(j, "branches", i, "r", 0.0);
    const double x = get_number(j, "branches", i, "x");
    const double b = get_number_or(j, "branches", i, "b", 0.0);
    const Complex z(r, x);
    if (std::abs(z) == 0.0) throw ValidationError("case: " + where("branches", i, "x") + " gives zero impedance");
    br.series_admittance = 1.0 / z;
    br.shunt_admittance_half = Complex(0.0, b / 2.0);
    br.tap = get_number_or(j, "branches", i, "tap", 1.0);
    if (br.tap == 0.0) br.tap = 1.0;  // MATPOWER convention
    br.in_service = get_bool_or(j, "branches", i, "in_service", true);
    c.branches.push_back(br);
  }

  const auto& gens = get_array(doc, "generators");
  for (std::size_t i = 0; i < gens.size(); ++i) {
    const auto& j = gens[i];
    Generator g;
    g.bus = get_int(j, "generators", i, "bus");
    const double rating = get_number_or(j, "generators", i, "mva_rating", sbase);
    if (!(rating > 0.0)) throw ValidationError("case: " + where("generators", i, "mva_rating") + " must be positive");
    g.p_setpoint = get_number_or(j, "generators", i, "p_mw", 0.0) / sbase;
    g.v_setpoint = get_number_or(j, "generators", i, "v_setpoint_pu", 1.0);
    g.transient_reactance_x = get_number(j, "generators", i, "xd_prime_pu") * sbase / rating;
    g.inertia_m = 2.0 * get_number(j, "generators", i, "h_s") * rating / sbase;
    g.damping_d = get_number_or(j, "generators", i, "damping_pu", 0.0) * rating / sbase;
    g.is_swing = get_bool_or(j, "generators", i, "swing", false);
    g.in_service = get_bool_or(j, "generators", i, "in_service", true);
    if (!(g.v_setpoint > 0.0)) throw ValidationError("case: " + where("generators", i, "v_setpoint_pu") + " must be positive");
    c.generators.push_back(g);
  }

  const auto& loads = get_array(doc, "loads", false);
  for (std::size_t i = 0; i < loads.size(); ++i) {
    ClassicalLoad l;
    l.bus = get_int(loads[i], "loads", i, "bus");
    l.p_mw = get_number(loads[i], "loads", i, "p_mw");
    l.q_mvar = get_number_or(loads[i], "loads", i, "q_mvar", 0.0);
    c.loads.push_back(l);
  }

  const auto& acvgs = get_array(doc, "acvgs", false);
  for (std::size_t i = 0; i < acvgs.size(); ++i) c.acvg_buses.push_back(get_int(acvgs[i], "acvgs", i, "bus"));

  finalize_case(c);
  return c;
}

NetworkCase load_case_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("case: cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_case(ss.str());
}

}  // namespace gridtide
