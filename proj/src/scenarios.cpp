#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "gridtide/error.hpp"
#include "gridtide/scenarios.hpp"

namespace gridtide {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::bus_fault: return "bus_fault";
    case EventKind::bus_fault_clear: return "bus_fault_clear";
    case EventKind::branch_trip: return "branch_trip";
    case EventKind::branch_restore: return "branch_restore";
    case EventKind::load_step: return "load_step";
    case EventKind::generator_trip: return "generator_trip";
  }
  return "?";
}

EventKind event_kind_from_string(std::string_view s) {
  for (auto k : {EventKind::bus_fault, EventKind::bus_fault_clear, EventKind::branch_trip,
                 EventKind::branch_restore, EventKind::load_step, EventKind::generator_trip})
    if (to_string(k) == s) return k;
  throw ValidationError("scenario: unknown event kind '" + std::string(s) + "'");
}

std::vector<DisturbanceEvent> fault_at(int bus, double t_on, double duration) {
  if (!(duration > 0.0)) throw ValidationError("scenario: fault duration must be > 0");
  if (!(t_on >= 0.0)) throw ValidationError("scenario: fault start must be >= 0");
  return {{EventKind::bus_fault, t_on, bus, 0, 0.0}, {EventKind::bus_fault_clear, t_on + duration, bus, 0, 0.0}};
}

std::vector<DisturbanceEvent> branch_outage(int branch, double t_on, double duration) {
  if (!(t_on >= 0.0)) throw ValidationError("scenario: trip start must be >= 0");
  std::vector<DisturbanceEvent> ev{{EventKind::branch_trip, t_on, 0, branch, 0.0}};
  if (duration > 0.0) ev.push_back({EventKind::branch_restore, t_on + duration, 0, branch, 0.0});
  return ev;
}

std::vector<DisturbanceEvent> load_step(int bus, double t_on, double fraction, double hold) {
  if (!(fraction > -1.0)) throw ValidationError("scenario: load step fraction must be > -1");
  if (!(t_on >= 0.0)) throw ValidationError("scenario: load step start must be >= 0");
  std::vector<DisturbanceEvent> ev{{EventKind::load_step, t_on, bus, 0, fraction}};
  if (hold > 0.0) ev.push_back({EventKind::load_step, t_on + hold, bus, 0, 0.0});
  return ev;
}

void apply_event(NetworkCase& c, const DisturbanceEvent& e, const ScenarioOptions& opts) {
  const std::string at = " at t=" + std::to_string(e.t);
  switch (e.kind) {
    case EventKind::bus_fault: {
      c.index_of(e.bus);
      for (const auto& s : c.shunts)
        if (s.bus == e.bus && s.admittance == opts.fault_admittance)
          throw ValidationError("scenario: bus " + std::to_string(e.bus) + " already faulted" + at);
      c.shunts.push_back({e.bus, opts.fault_admittance});
      break;
    }
    case EventKind::bus_fault_clear: {
      auto it = std::find_if(c.shunts.rbegin(), c.shunts.rend(), [&](const BusShunt& s) {
        return s.bus == e.bus && s.admittance == opts.fault_admittance;
      });
      if (it == c.shunts.rend())
        throw ValidationError("scenario: clearing bus " + std::to_string(e.bus) + " which has no active fault" + at);
      c.shunts.erase(std::next(it).base());
      break;
    }
    case EventKind::branch_trip: {
      auto& br = c.branch(e.branch);
      if (!br.in_service) throw ValidationError("scenario: branch " + std::to_string(e.branch) + " already out of service" + at);
      br.in_service = false;
      break;
    }
    case EventKind::branch_restore: {
      auto& br = c.branch(e.branch);
      if (br.in_service) throw ValidationError("scenario: branch " + std::to_string(e.branch) + " is already in service" + at);
      br.in_service = true;
      break;
    }
    case EventKind::load_step: {
      if (!(e.magnitude > -1.0)) throw ValidationError("scenario: load step fraction must be > -1" + at);
      bool found = false;
      for (auto& l : c.loads)
        if (l.bus == e.bus) {
          l.scale = 1.0 + e.magnitude;
          found = true;
        }
      if (!found) throw ValidationError("scenario: load step at bus " + std::to_string(e.bus) + " which has no load");
      break;
    }
    case EventKind::generator_trip: {
      auto it = std::find_if(c.generators.begin(), c.generators.end(), [&](const Generator& g) { return g.bus == e.bus; });
      if (it == c.generators.end()) throw ValidationError("scenario: no generator at bus " + std::to_string(e.bus));
      if (!it->in_service) throw ValidationError("scenario: generator at bus " + std::to_string(e.bus) + " already tripped");
      it->in_service = false;
      break;
    }
  }
}

namespace {

Epoch make_epoch(const NetworkCase& c, double t_start, const ScenarioOptions& opts) {
  Epoch ep;
  ep.t_start = t_start;
  ep.net = reduce_case(c);
  ep.fault_active = std::any_of(c.shunts.begin(), c.shunts.end(),
                                [&](const BusShunt& s) { return s.admittance == opts.fault_admittance; });
  for (std::size_t j = 0; j < c.acvg_buses.size(); ++j)
    for (const auto& s : c.shunts)
      if (s.bus == c.acvg_buses[j] && s.admittance == opts.fault_admittance) {
        ep.faulted_acvg.push_back(j);
        break;
      }
  return ep;
}

}  // namespace

DisturbanceScenario compile_scenario(const NetworkCase& c, std::vector<DisturbanceEvent> events,
                                     const ScenarioOptions& opts) {
  if (!c.initialized()) throw ValidationError("scenario: case must be initialized before compiling");
  for (const auto& e : events)
    if (!(e.t >= 0.0) || !std::isfinite(e.t))
      throw ValidationError("scenario: event " + std::string(to_string(e.kind)) + " has invalid time");
  std::stable_sort(events.begin(), events.end(),
                   [](const DisturbanceEvent& a, const DisturbanceEvent& b) { return a.t < b.t; });

  DisturbanceScenario sc;
  sc.events = events;
  NetworkCase work = c;
  std::size_t k = 0;
  // Events at t = 0 modify the first epoch.
  while (k < events.size() && events[k].t == 0.0) apply_event(work, events[k++], opts);
  sc.epochs.push_back(make_epoch(work, 0.0, opts));
  while (k < events.size()) {
    const double t = events[k].t;
    while (k < events.size() && events[k].t == t) apply_event(work, events[k++], opts);
    try {
      sc.epochs.push_back(make_epoch(work, t, opts));
    } catch (const NumericalError& e) {
      std::ostringstream os;
      os << "scenario: epoch " << sc.epochs.size() << " starting at t=" << t << ": " << e.what();
      throw NumericalError(os.str());
    }
  }
  return sc;
}

std::vector<DisturbanceEvent> parse_scenario(std::string_view json_text) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario: parse error: ") + e.what());
  }
  if (!doc.is_array()) throw ValidationError("scenario: document must be a JSON array of events");
  std::vector<DisturbanceEvent> out;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& j = doc[i];
    const std::string where = "scenario: event " + std::to_string(i);
    if (!j.is_object() || !j.contains("kind") || !j["kind"].is_string() || !j.contains("t") || !j["t"].is_number())
      throw ValidationError(where + " needs string 'kind' and numeric 't'");
    DisturbanceEvent e;
    e.kind = event_kind_from_string(j["kind"].get<std::string>());
    e.t = j["t"].get<double>();
    const bool wants_branch = e.kind == EventKind::branch_trip || e.kind == EventKind::branch_restore;
    const char* target = wants_branch ? "branch" : "bus";
    if (!j.contains(target) || !j[target].is_number_integer())
      throw ValidationError(where + " needs integer '" + target + "'");
    (wants_branch ? e.branch : e.bus) = j[target].get<int>();
    if (e.kind == EventKind::load_step) {
      if (!j.contains("magnitude") || !j["magnitude"].is_number())
        throw ValidationError(where + " (load_step) needs numeric 'magnitude'");
      e.magnitude = j["magnitude"].get<double>();
    }
    out.push_back(e);
  }
  return out;
}

std::string scenario_to_json(const std::vector<DisturbanceEvent>& events) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& e : events) {
    nlohmann::json j{{"kind", to_string(e.kind)}, {"t", e.t}};
    if (e.kind == EventKind::branch_trip || e.kind == EventKind::branch_restore)
      j["branch"] = e.branch;
    else
      j["bus"] = e.bus;
    if (e.kind == EventKind::load_step) j["magnitude"] = e.magnitude;
    doc.push_back(j);
  }
  return doc.dump();
}

}  // namespace gridtide
