#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

#include "gridtide/error.hpp"
#include "gridtide/netmodel.hpp"

namespace gridtide {

AdmittanceMatrix assemble_admittance(const NetworkCase& c, LoadHandling loads) {
  const std::size_t order = c.bus_count();
  AdmittanceMatrix y;
  y.entries = ComplexMatrix::Zero(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(order));
  y.bus_ids.reserve(order);
  for (const auto& b : c.buses) y.bus_ids.push_back(b.id);

  auto& e = y.entries;
  for (const auto& br : c.branches) {
    if (!br.in_service) continue;
    const auto f = static_cast<Eigen::Index>(c.index_of(br.from_bus));
    const auto t = static_cast<Eigen::Index>(c.index_of(br.to_bus));
    const Complex ytt = br.series_admittance + br.shunt_admittance_half;
    e(f, f) += ytt / (br.tap * br.tap);
    e(t, t) += ytt;
    e(f, t) -= br.series_admittance / br.tap;
    e(t, f) -= br.series_admittance / br.tap;
  }
  for (const auto& s : c.shunts) {
    const auto k = static_cast<Eigen::Index>(c.index_of(s.bus));
    e(k, k) += s.admittance;
  }
  if (loads == LoadHandling::include) {
    for (const auto& l : c.loads) {
      if (!l.equivalent_admittance)
        throw ValidationError("admittance: load at bus " + std::to_string(l.bus) +
                              " has no equivalent admittance (case not initialized)");
      const auto k = static_cast<Eigen::Index>(c.index_of(l.bus));
      e(k, k) += *l.equivalent_admittance * l.scale;
    }
  }
  return y;
}

ComplexMatrix kron_reduce(const ComplexMatrix& y, std::span<const std::size_t> keep,
                          std::span<const std::size_t> eliminate) {
  const auto nk = static_cast<Eigen::Index>(keep.size());
  const auto ne = static_cast<Eigen::Index>(eliminate.size());
  ComplexMatrix ykk(nk, nk);
  for (Eigen::Index r = 0; r < nk; ++r)
    for (Eigen::Index s = 0; s < nk; ++s) ykk(r, s) = y(keep[r], keep[s]);
  if (ne == 0) return ykk;

  ComplexMatrix yke(nk, ne), yek(ne, nk), yee(ne, ne);
  for (Eigen::Index r = 0; r < nk; ++r)
    for (Eigen::Index s = 0; s < ne; ++s) {
      yke(r, s) = y(keep[r], eliminate[s]);
      yek(s, r) = y(eliminate[s], keep[r]);
    }
  for (Eigen::Index r = 0; r < ne; ++r)
    for (Eigen::Index s = 0; s < ne; ++s) yee(r, s) = y(eliminate[r], eliminate[s]);

  Eigen::PartialPivLU<ComplexMatrix> lu(yee);
  if (!(lu.rcond() > 1e-14)) throw NumericalError("kron reduction: eliminated block is singular");
  ComplexMatrix reduced = ykk - yke * lu.solve(yek);
  if (!reduced.allFinite()) throw NumericalError("kron reduction: non-finite result");
  return reduced;
}

namespace {

// Eliminated buses with no path to any retained bus.
std::vector<std::size_t> stranded(const ComplexMatrix& y, std::span<const std::size_t> keep) {
  const auto order = static_cast<std::size_t>(y.rows());
  std::vector<bool> seen(order, false);
  std::queue<std::size_t> q;
  for (auto k : keep) {
    seen[k] = true;
    q.push(k);
  }
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (std::size_t v = 0; v < order; ++v) {
      if (!seen[v] && v != u && y(u, v) != Complex(0.0)) {
        seen[v] = true;
        q.push(v);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t v = 0; v < order; ++v)
    if (!seen[v]) out.push_back(v);
  return out;
}

}  // namespace

ReducedNetwork augment_and_reduce(const AdmittanceMatrix& y_bus, const NetworkCase& c) {
  const std::size_t n = c.n();
  const std::size_t nbus = y_bus.order();
  const std::size_t order = n + nbus;
  ComplexMatrix aug = ComplexMatrix::Zero(static_cast<Eigen::Index>(order), static_cast<Eigen::Index>(order));
  aug.bottomRightCorner(static_cast<Eigen::Index>(nbus), static_cast<Eigen::Index>(nbus)) = y_bus.entries;

  ReducedNetwork net;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& g = c.generators[i];
    net.generator_buses.push_back(g.bus);
    net.generator_online.push_back(g.in_service);
    if (!g.in_service) continue;
    if (!(g.transient_reactance_x > 0.0))
      throw ValidationError("reduction: generator at bus " + std::to_string(g.bus) + " has X'd <= 0");
    const Complex yg = 1.0 / Complex(0.0, g.transient_reactance_x);
    const auto a = static_cast<Eigen::Index>(i);
    const auto t = static_cast<Eigen::Index>(n + c.index_of(g.bus));
    aug(a, a) += yg;
    aug(t, t) += yg;
    aug(a, t) -= yg;
    aug(t, a) -= yg;
  }

  std::vector<std::size_t> keep(n), eliminate;
  for (std::size_t i = 0; i < n; ++i) keep[i] = i;
  for (int id : c.acvg_buses) {
    keep.push_back(n + c.index_of(id));
    net.acvg_buses.push_back(id);
  }
  for (std::size_t k = 0; k < nbus; ++k)
    if (!c.buses[k].hosts_acvg) eliminate.push_back(n + k);

  try {
    net.y_red = kron_reduce(aug, keep, eliminate);
  } catch (const NumericalError&) {
    const auto lost = stranded(aug, keep);
    std::ostringstream os;
    os << "reduction: eliminated buses form a singular block";
    if (!lost.empty()) {
      os << "; disconnected from all retained buses:";
      for (auto v : lost) os << ' ' << (v < n ? c.generators[v].bus : y_bus.bus_ids[v - n]);
    }
    throw NumericalError(os.str());
  }
  return net;
}

ReducedNetwork reduce_case(const NetworkCase& c) {
  return augment_and_reduce(assemble_admittance(c, LoadHandling::include), c);
}

PowerFlowSolution solve_power_flow(const NetworkCase& c, const PowerFlowOptions& opts) {
  const std::size_t nb = c.bus_count();
  const ComplexMatrix y = assemble_admittance(c, LoadHandling::exclude).entries;
  const double sbase = c.base.mva_base;

  enum class Role { pq, pv, slack };
  std::vector<Role> role(nb, Role::pq);
  std::vector<Complex> s_spec(nb, Complex(0.0));
  std::vector<double> vm(nb, 1.0), va(nb, 0.0);
  for (const auto& g : c.generators) {
    if (!g.in_service) continue;
    const auto k = c.index_of(g.bus);
    role[k] = g.is_swing ? Role::slack : Role::pv;
    vm[k] = g.v_setpoint;
    s_spec[k] += g.p_setpoint;
  }
  for (const auto& l : c.loads) s_spec[c.index_of(l.bus)] -= Complex(l.p_mw, l.q_mvar) / sbase;

  std::vector<std::size_t> pvpq, pq;
  for (std::size_t k = 0; k < nb; ++k) {
    if (role[k] != Role::slack) pvpq.push_back(k);
    if (role[k] == Role::pq) pq.push_back(k);
  }
  const auto na = static_cast<Eigen::Index>(pvpq.size());
  const auto nm = static_cast<Eigen::Index>(pq.size());

  Eigen::VectorXcd v(static_cast<Eigen::Index>(nb));
  auto rebuild = [&] {
    for (std::size_t k = 0; k < nb; ++k) v[static_cast<Eigen::Index>(k)] = std::polar(vm[k], va[k]);
  };
  rebuild();

  PowerFlowSolution sol;
  Eigen::VectorXd f(na + nm);
  auto mismatch = [&] {
    const Eigen::VectorXcd i = y * v;
    for (Eigen::Index r = 0; r < na; ++r) {
      const auto k = static_cast<Eigen::Index>(pvpq[r]);
      f[r] = (v[k] * std::conj(i[k]) - s_spec[pvpq[r]]).real();
    }
    for (Eigen::Index r = 0; r < nm; ++r) {
      const auto k = static_cast<Eigen::Index>(pq[r]);
      f[na + r] = (v[k] * std::conj(i[k]) - s_spec[pq[r]]).imag();
    }
    return f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  };

  sol.max_mismatch = mismatch();
  while (sol.max_mismatch > opts.tolerance && sol.iterations < opts.max_iterations) {
    // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)); dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
    const Eigen::VectorXcd i = y * v;
    Eigen::MatrixXd jac(na + nm, na + nm);
    auto ds_dva = [&](Eigen::Index r, Eigen::Index s) {
      Complex d = -y(r, s) * v[s];
      if (r == s) d += i[r];
      return Complex(0.0, 1.0) * v[r] * std::conj(d);
    };
    auto ds_dvm = [&](Eigen::Index r, Eigen::Index s) {
      const Complex vn = v[s] / std::abs(v[s]);
      Complex d = v[r] * std::conj(y(r, s) * vn);
      if (r == s) d += std::conj(i[r]) * vn;
      return d;
    };
    for (Eigen::Index a = 0; a < na; ++a) {
      const auto r = static_cast<Eigen::Index>(pvpq[a]);
      for (Eigen::Index b = 0; b < na; ++b) jac(a, b) = ds_dva(r, static_cast<Eigen::Index>(pvpq[b])).real();
      for (Eigen::Index b = 0; b < nm; ++b) jac(a, na + b) = ds_dvm(r, static_cast<Eigen::Index>(pq[b])).real();
    }
    for (Eigen::Index a = 0; a < nm; ++a) {
      const auto r = static_cast<Eigen::Index>(pq[a]);
      for (Eigen::Index b = 0; b < na; ++b) jac(na + a, b) = ds_dva(r, static_cast<Eigen::Index>(pvpq[b])).imag();
      for (Eigen::Index b = 0; b < nm; ++b) jac(na + a, na + b) = ds_dvm(r, static_cast<Eigen::Index>(pq[b])).imag();
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    if (!(lu.rcond() > 1e-14))
      throw NumericalError("power flow: singular Jacobian at iteration " + std::to_string(sol.iterations + 1));
    const Eigen::VectorXd dx = lu.solve(-f);
    for (Eigen::Index a = 0; a < na; ++a) va[pvpq[a]] += dx[a];
    for (Eigen::Index a = 0; a < nm; ++a) vm[pq[a]] += dx[na + a];
    rebuild();
    ++sol.iterations;
    sol.max_mismatch = mismatch();
  }
  sol.converged = sol.max_mismatch <= opts.tolerance;

  const Eigen::VectorXcd i = y * v;
  sol.voltages.resize(nb);
  sol.injections.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    const auto e = static_cast<Eigen::Index>(k);
    sol.voltages[k] = v[e];
    sol.injections[k] = v[e] * std::conj(i[e]);
  }
  return sol;
}

NetworkCase initialize_machine_constants(NetworkCase c, const PowerFlowSolution& pf) {
  if (!pf.converged) throw ValidationError("initialization: power flow did not converge");
  if (pf.voltages.size() != c.bus_count()) throw ValidationError("initialization: power flow size mismatch");
  const double sbase = c.base.mva_base;

  std::vector<Complex> bus_load(c.bus_count(), Complex(0.0));
  for (auto& l : c.loads) {
    const auto k = c.index_of(l.bus);
    const double vmag2 = std::norm(pf.voltages[k]);
    if (vmag2 == 0.0) throw NumericalError("initialization: zero solved voltage at load bus " + std::to_string(l.bus));
    const Complex s(l.p_mw / sbase, l.q_mvar / sbase);
    l.equivalent_admittance = std::conj(s) / vmag2;
    bus_load[k] += s;
  }
  for (auto& g : c.generators) {
    if (!g.in_service) continue;
    const auto k = c.index_of(g.bus);
    const Complex v = pf.voltages[k];
    const Complex s_gen = pf.injections[k] + bus_load[k];
    const Complex current = std::conj(s_gen / v);
    const Complex emf = v + Complex(0.0, g.transient_reactance_x) * current;
    g.emf_magnitude = std::abs(emf);
    g.emf_angle = std::arg(emf);
    g.mech_power_pm = (emf * std::conj(current)).real();
  }
  c.solved_voltage = pf.voltages;
  return c;
}

NetworkCase prepare_case(NetworkCase c) {
  const auto pf = solve_power_flow(c);
  if (!pf.converged) {
    std::ostringstream os;
    os << "power flow did not converge after " << pf.iterations << " iterations (max mismatch "
       << pf.max_mismatch << " pu)";
    throw NumericalError(os.str());
  }
  return initialize_machine_constants(std::move(c), pf);
}

NetworkCase prepare_case(const std::filesystem::path& path) { return prepare_case(load_case_file(path)); }

}  // namespace gridtide
