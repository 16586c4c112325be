#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "gridtide/dynamics.hpp"

namespace gridtide {

MachineSet MachineSet::from_case(const NetworkCase& c) {
  if (!c.initialized()) throw ValidationError("dynamics: case must be initialized");
  MachineSet ms;
  for (const auto& g : c.generators) {
    ms.inertia.push_back(g.inertia_m);
    ms.damping.push_back(g.damping_d);
    ms.mech_power.push_back(g.mech_power_pm);
    ms.emf.push_back(g.emf_magnitude);
  }
  ms.omega_base = 2.0 * std::numbers::pi * c.base.frequency_hz;
  ms.mva_base = c.base.mva_base;
  return ms;
}

SystemState initial_state(const NetworkCase& c) {
  if (!c.initialized()) throw ValidationError("dynamics: case must be initialized");
  SystemState s;
  for (const auto& g : c.generators) {
    s.phi.push_back(g.emf_angle);
    s.omega.push_back(0.0);
  }
  for (int id : c.acvg_buses) s.acvg_voltage.push_back(c.solved_voltage[c.index_of(id)]);
  return s;
}

namespace {

Eigen::VectorXcd full_voltage(std::span<const double> phi, std::span<const Complex> acvg_voltage,
                              std::span<const double> emf) {
  const auto n = static_cast<Eigen::Index>(phi.size());
  Eigen::VectorXcd v(n + static_cast<Eigen::Index>(acvg_voltage.size()));
  for (Eigen::Index i = 0; i < n; ++i) v[i] = std::polar(emf[i], phi[i]);
  for (std::size_t j = 0; j < acvg_voltage.size(); ++j) v[n + static_cast<Eigen::Index>(j)] = acvg_voltage[j];
  return v;
}

void check_dims(std::span<const double> phi, std::size_t acvg, const ReducedNetwork& net,
                std::span<const double> emf) {
  if (phi.size() != net.n() || emf.size() != net.n() || acvg != net.m())
    throw ValidationError("dynamics: state dimensions do not match the reduced network");
}

}  // namespace

std::vector<double> electrical_power(std::span<const double> phi, std::span<const Complex> acvg_voltage,
                                     const ReducedNetwork& net, std::span<const double> emf) {
  check_dims(phi, acvg_voltage.size(), net, emf);
  const auto n = static_cast<Eigen::Index>(net.n());
  const Eigen::VectorXcd v = full_voltage(phi, acvg_voltage, emf);
  const Eigen::VectorXcd i = net.y_red.topRows(n) * v;
  std::vector<double> pe(net.n());
  for (Eigen::Index k = 0; k < n; ++k) pe[k] = (v[k] * std::conj(i[k])).real();
  return pe;
}

double algebraic_residual(std::span<const double> phi, std::span<const Complex> acvg_voltage,
                          std::span<const double> acvg_power_pu, const ReducedNetwork& net,
                          std::span<const double> emf) {
  check_dims(phi, acvg_voltage.size(), net, emf);
  const auto n = static_cast<Eigen::Index>(net.n());
  const auto m = static_cast<Eigen::Index>(net.m());
  const Eigen::VectorXcd v = full_voltage(phi, acvg_voltage, emf);
  const Eigen::VectorXcd i = net.y_red.bottomRows(m) * v;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    const Complex s = v[n + j] * std::conj(i[j]);
    worst = std::max({worst, std::abs(s.real() + acvg_power_pu[j]), std::abs(s.imag())});
  }
  return worst;
}

NetworkSolution solve_network(std::span<const double> phi, std::span<const double> acvg_power_pu,
                              const ReducedNetwork& net, std::span<const double> emf,
                              std::span<const Complex> guess, const NetworkSolveOptions& opts) {
  check_dims(phi, guess.size(), net, emf);
  if (acvg_power_pu.size() != net.m()) throw ValidationError("dynamics: ACVG power count mismatch");
  for (const auto& g : guess)
    if (std::abs(g) == 0.0) throw ValidationError("dynamics: network guess has a zero-magnitude phasor");

  const auto n = static_cast<Eigen::Index>(net.n());
  const auto m = static_cast<Eigen::Index>(net.m());
  NetworkSolution out;
  if (m == 0) {
    out.report.converged = true;
    return out;
  }

  std::vector<double> theta(m), mag(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    theta[j] = std::arg(guess[j]);
    mag[j] = std::abs(guess[j]);
  }
  Eigen::VectorXcd v = full_voltage(phi, guess, emf);
  const auto ya = net.y_red.bottomRows(m);
  Eigen::VectorXd f(2 * m);
  Eigen::MatrixXd jac(2 * m, 2 * m);
  const Complex jay(0.0, 1.0);

  auto& rep = out.report;
  while (true) {
    const Eigen::VectorXcd cur = ya * v;
    for (Eigen::Index j = 0; j < m; ++j) {
      const Complex s = v[n + j] * std::conj(cur[j]);
      f[j] = s.real() + acvg_power_pu[j];
      f[m + j] = s.imag();
    }
    rep.final_residual = f.cwiseAbs().maxCoeff();
    if (!std::isfinite(rep.final_residual)) break;
    if (rep.final_residual <= opts.tolerance) {
      rep.converged = true;
      break;
    }
    if (rep.iterations >= opts.max_iterations) break;

    for (Eigen::Index l = 0; l < m; ++l) {
      const Complex vl = v[n + l];
      const Complex vnl = vl / std::abs(vl);
      for (Eigen::Index j = 0; j < m; ++j) {
        const Complex yjl = ya(j, n + l);
        const Complex vj = v[n + j];
        Complex dtheta = -yjl * vl;
        Complex dmag = vj * std::conj(yjl * vnl);
        if (j == l) {
          dtheta += cur[j];
          dmag += std::conj(cur[j]) * vnl;
        }
        dtheta = jay * vj * std::conj(dtheta);
        jac(j, l) = dtheta.real();
        jac(m + j, l) = dtheta.imag();
        jac(j, m + l) = dmag.real();
        jac(m + j, m + l) = dmag.imag();
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
    const Eigen::VectorXd dx = lu.solve(-f);
    ++rep.iterations;
    if (!dx.allFinite()) {
      rep.singular = true;
      break;
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      theta[j] += dx[j];
      mag[j] += dx[m + j];
      v[n + j] = Complex(mag[j] * std::cos(theta[j]), mag[j] * std::sin(theta[j]));
    }
  }

  out.voltage.resize(m);
  for (Eigen::Index j = 0; j < m; ++j) out.voltage[j] = v[n + j];
  return out;
}

Derivatives swing_rhs(const SystemState& s, const ReducedNetwork& net, const MachineSet& machines) {
  const auto pe = electrical_power(s.phi, s.acvg_voltage, net, machines.emf);
  Derivatives d;
  d.dphi.resize(net.n());
  d.domega.resize(net.n());
  for (std::size_t i = 0; i < net.n(); ++i) {
    if (!net.generator_online[i]) continue;
    d.dphi[i] = machines.omega_base * s.omega[i];
    d.domega[i] = (machines.mech_power[i] - machines.damping[i] * s.omega[i] - pe[i]) / machines.inertia[i];
  }
  return d;
}

namespace {

double online_delta_omega(const StepContext& ctx, std::span<const double> omega) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < omega.size(); ++i)
    if (ctx.net->generator_online[i]) {
      sum += omega[i];
      ++count;
    }
  return count ? ctx.f_base_hz * sum / static_cast<double>(count) : 0.0;
}

std::vector<Complex> flat_profile(const ReducedNetwork& net, std::span<const double> phi) {
  double ref = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < net.n(); ++i)
    if (net.generator_online[i]) {
      ref += phi[i];
      ++count;
    }
  if (count) ref /= static_cast<double>(count);
  return std::vector<Complex>(net.m(), std::polar(1.0, ref));
}

// ACVG voltages with every ACVG idle: a linear solve that lands on the
// high-voltage branch, used to re-seed Newton when the topology changes.
// Carrying the previous epoch's voltages across a fault clearing can
// otherwise converge to the spurious low-voltage root.
std::vector<Complex> passive_voltage(const ReducedNetwork& net, std::span<const double> phi,
                                     std::span<const double> emf, std::span<const Complex> fallback) {
  const auto n = static_cast<Eigen::Index>(net.n()), m = static_cast<Eigen::Index>(net.m());
  if (m == 0) return {};
  Eigen::VectorXcd e(n);
  for (Eigen::Index i = 0; i < n; ++i) e[i] = std::polar(emf[i], phi[i]);
  Eigen::PartialPivLU<ComplexMatrix> lu(net.y_red.bottomRightCorner(m, m));
  const Eigen::VectorXcd v = lu.solve(-(net.y_red.bottomLeftCorner(m, n) * e));
  if (!v.allFinite()) return {fallback.begin(), fallback.end()};
  return {v.begin(), v.end()};
}

std::vector<Complex> solve_stage(std::span<const double> phi, std::span<const double> omega,
                                 std::span<const Complex> guess, double t, StepContext& ctx) {
  auto p = dispatch_power(ctx, omega);
  auto attempt = [&](std::span<const Complex> start) {
    auto sol = solve_network(phi, p, *ctx.net, ctx.machines->emf, start, ctx.newton);
    ctx.stats.newton_iterations += sol.report.iterations;
    if (sol.report.converged) ctx.stats.max_residual = std::max(ctx.stats.max_residual, sol.report.final_residual);
    return sol;
  };
  // A shorted, dropped ACVG bus can settle exactly on 0; re-seed those entries.
  std::vector<Complex> seed(guess.begin(), guess.end());
  const auto flat = flat_profile(*ctx.net, phi);
  for (std::size_t j = 0; j < seed.size(); ++j)
    if (!(std::abs(seed[j]) > 0.0) || !std::isfinite(std::abs(seed[j]))) seed[j] = flat[j];
  auto warm_then_flat = [&] {
    auto sol = attempt(seed);
    if (sol.report.converged) return sol;
    ++ctx.stats.flat_restarts;
    return attempt(flat);
  };

  auto sol = warm_then_flat();
  if (!sol.report.converged && ctx.fault_active && ctx.dispatch) {
    auto drop = [&](std::size_t j) {
      ctx.dropped[j] = 1;
      p[j] = 0.0;
    };
    bool changed = false;
    for (auto j : ctx.faulted_acvg)
      if (!ctx.dropped[j]) {
        drop(j);
        changed = true;
      }
    if (changed) sol = warm_then_flat();
    while (!sol.report.converged) {
      std::optional<std::size_t> weakest;
      for (std::size_t j = 0; j < p.size(); ++j)
        if (!ctx.dropped[j] && p[j] != 0.0 && (!weakest || std::abs(seed[j]) < std::abs(seed[*weakest])))
          weakest = j;
      if (!weakest) break;
      drop(*weakest);
      sol = warm_then_flat();
    }
  }
  if (!sol.report.converged) {
    std::ostringstream os;
    os << "network solve failed at t=" << t << " s (" << sol.report.iterations << " iterations, residual "
       << sol.report.final_residual << " pu" << (sol.report.singular ? ", singular Jacobian" : "") << ")";
    throw StepFailure(os.str(), t, sol.report);
  }
  return std::move(sol.voltage);
}

}  // namespace

std::vector<double> dispatch_power(const StepContext& ctx, std::span<const double> omega) {
  std::vector<double> p(ctx.net->m(), 0.0);
  if (ctx.dispatch) {
    const double dw = ctx.held_delta_omega_hz ? *ctx.held_delta_omega_hz : online_delta_omega(ctx, omega);
    ctx.dispatch->power_pu(dw, p);
  }
  for (std::size_t j = 0; j < ctx.dropped.size(); ++j)
    if (ctx.dropped[j]) p[j] = 0.0;
  for (auto& x : p) x += 0.0;  // no negative zeros
  return p;
}

void settle_network(SystemState& s, StepContext& ctx) {
  s.acvg_voltage = solve_stage(s.phi, s.omega, s.acvg_voltage, s.t, ctx);
}

SystemState step(const SystemState& s, double dt, StepContext& ctx) {
  if (!(dt > 0.0)) throw ValidationError("dynamics: dt must be > 0");
  const std::size_t n = s.phi.size();
  const MachineSet& ms = *ctx.machines;

  SystemState stage = s;
  auto eval = [&](double t, std::span<const Complex> guess) {
    stage.t = t;
    stage.acvg_voltage = solve_stage(stage.phi, stage.omega, guess, t, ctx);
    return swing_rhs(stage, *ctx.net, ms);
  };
  auto advance = [&](const Derivatives& k, double h) {
    for (std::size_t i = 0; i < n; ++i) {
      stage.phi[i] = s.phi[i] + h * k.dphi[i];
      stage.omega[i] = s.omega[i] + h * k.domega[i];
    }
  };

  const Derivatives k1 = eval(s.t, s.acvg_voltage);
  advance(k1, 0.5 * dt);
  const Derivatives k2 = eval(s.t + 0.5 * dt, stage.acvg_voltage);
  advance(k2, 0.5 * dt);
  const Derivatives k3 = eval(s.t + 0.5 * dt, stage.acvg_voltage);
  advance(k3, dt);
  const Derivatives k4 = eval(s.t + dt, stage.acvg_voltage);

  SystemState next;
  next.t = s.t + dt;
  next.phi.resize(n);
  next.omega.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    next.phi[i] = s.phi[i] + dt / 6.0 * (k1.dphi[i] + 2.0 * k2.dphi[i] + 2.0 * k3.dphi[i] + k4.dphi[i]);
    next.omega[i] = s.omega[i] + dt / 6.0 * (k1.domega[i] + 2.0 * k2.domega[i] + 2.0 * k3.domega[i] + k4.domega[i]);
  }
  next.acvg_voltage = stage.acvg_voltage;
  settle_network(next, ctx);
  return next;
}

long steps_for(double t, double dt, const char* what) {
  const double ratio = t / dt;
  const double k = std::round(ratio);
  if (std::abs(ratio - k) > 1e-6 * std::max(1.0, std::abs(ratio)))
    throw ValidationError(std::string("dynamics: ") + what + " (" + std::to_string(t) +
                          " s) is not on a step boundary of dt=" + std::to_string(dt));
  return static_cast<long>(k);
}

SimulationResult simulate(const SystemState& initial, const DisturbanceScenario& scenario,
                          const MachineSet& machines, const AcvgDispatch* dispatch, double f_base_hz,
                          const SimulationOptions& opts) {
  if (!(opts.dt > 0.0)) throw ValidationError("dynamics: dt must be > 0");
  if (!(opts.horizon > 0.0)) throw ValidationError("dynamics: horizon must be > 0");
  if (!(opts.output_interval >= opts.dt)) throw ValidationError("dynamics: output interval must be >= dt");
  if (opts.control_delay_s < 0.0) throw ValidationError("dynamics: control delay must be >= 0");
  if (scenario.epochs.empty()) throw ValidationError("dynamics: scenario has no epochs");
  const long total = steps_for(opts.horizon, opts.dt, "horizon");
  const long stride = steps_for(opts.output_interval, opts.dt, "output interval");
  const long delay_steps = steps_for(opts.control_delay_s, opts.dt, "control delay");
  std::vector<long> epoch_step;
  for (const auto& ep : scenario.epochs) {
    if (ep.t_start > opts.horizon) throw ValidationError("dynamics: event time beyond horizon");
    epoch_step.push_back(steps_for(ep.t_start, opts.dt, "event time"));
  }

  const ReducedNetwork& net0 = scenario.epochs.front().net;
  if (initial.phi.size() != net0.n() || initial.omega.size() != net0.n() || initial.acvg_voltage.size() != net0.m() ||
      machines.size() != net0.n())
    throw ValidationError("dynamics: initial state does not match the network");

  StepContext ctx;
  ctx.machines = &machines;
  ctx.dispatch = dispatch;
  ctx.f_base_hz = f_base_hz;
  ctx.newton = opts.newton;

  SimulationResult result;
  auto& ts = result.series;
  ts.generator_buses = net0.generator_buses;
  ts.acvg_buses = net0.acvg_buses;

  std::vector<double> dw_history;
  auto record = [&](const SystemState& s) {
    ts.times.push_back(s.t);
    std::vector<double> w(s.omega.size()), v(s.acvg_voltage.size()), p_mw;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.omega[i] * f_base_hz;
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = std::abs(s.acvg_voltage[j]);
    const auto p = dispatch_power(ctx, s.omega);
    result.stats.max_algebraic_residual = std::max(
        result.stats.max_algebraic_residual, algebraic_residual(s.phi, s.acvg_voltage, p, *ctx.net, machines.emf));
    p_mw.reserve(p.size());
    for (double x : p) p_mw.push_back(x * machines.mva_base);
    ts.omega_hz.push_back(std::move(w));
    ts.phi_rad.push_back(s.phi);
    ts.v_pu.push_back(std::move(v));
    ts.p_acvg_mw.push_back(std::move(p_mw));
    ts.delta_omega_hz.push_back(online_delta_omega(ctx, s.omega) + 0.0);
  };

  SystemState s = initial;
  s.t = 0.0;
  std::size_t next_epoch = 0;
  for (long k = 0;; ++k) {
    bool switched = false;
    while (next_epoch < scenario.epochs.size() && epoch_step[next_epoch] == k) {
      const auto& ep = scenario.epochs[next_epoch++];
      result.stats.dropped_acvgs += static_cast<int>(std::count(ctx.dropped.begin(), ctx.dropped.end(), 1));
      ctx.net = &ep.net;
      ctx.faulted_acvg = ep.faulted_acvg;
      ctx.fault_active = ep.fault_active;
      ctx.dropped.assign(ep.net.m(), 0);
      switched = true;
    }
    if (opts.control_delay_s > 0.0 && dispatch) {
      dw_history.push_back(online_delta_omega(ctx, s.omega));
      ctx.held_delta_omega_hz = dw_history[static_cast<std::size_t>(std::max(0L, k - delay_steps))];
    }
    if (switched && k > 0) s.acvg_voltage = passive_voltage(*ctx.net, s.phi, machines.emf, s.acvg_voltage);
    if (switched || k == 0) settle_network(s, ctx);
    if (k % stride == 0) record(s);
    if (k == total) break;

    s = step(s, opts.dt, ctx);
    s.t = static_cast<double>(k + 1) * opts.dt;
    ++result.stats.steps;

    if (opts.abort_angle_spread) {
      double lo = 0.0, hi = 0.0;
      bool any = false;
      for (std::size_t i = 0; i < s.phi.size(); ++i) {
        if (!ctx.net->generator_online[i]) continue;
        lo = any ? std::min(lo, s.phi[i]) : s.phi[i];
        hi = any ? std::max(hi, s.phi[i]) : s.phi[i];
        any = true;
      }
      if (hi - lo > *opts.abort_angle_spread) {
        record(s);
        result.aborted = true;
        break;
      }
    }
  }
  result.stats.dropped_acvgs += static_cast<int>(std::count(ctx.dropped.begin(), ctx.dropped.end(), 1));
  result.stats.newton_iterations = ctx.stats.newton_iterations;
  result.stats.flat_restarts = ctx.stats.flat_restarts;
  result.stats.max_algebraic_residual = std::max(result.stats.max_algebraic_residual, ctx.stats.max_residual);
  result.final_state = std::move(s);
  return result;
}

}  // namespace gridtide
