// Copyright 2026 The stap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "stap/gates.hpp"

namespace {

using namespace stap;
using std::numbers::pi;
using std::numbers::sqrt2;

struct Outcome {
  bool pass = false;
  std::string detail;
};

/// Worst conservation metrics seen across every run below.
struct Conservation {
  double norm_drift = 0.0;
  double trace_drift = 0.0;
  double min_eigenvalue = 1.0;
  double step_halving = 0.0;

  void closed(const TrajectoryRecord& r) { norm_drift = std::max(norm_drift, r.max_norm_drift); }
  void open(const TrajectoryRecord& r) {
    trace_drift = std::max(trace_drift, r.max_norm_drift);
    min_eigenvalue = std::min(min_eigenvalue, r.min_eigenvalue);
  }
  void gate(const GateReport& r) {
    if (r.open_system) {
      trace_drift = std::max(trace_drift, r.max_norm_drift);
      min_eigenvalue = std::min(min_eigenvalue, r.min_eigenvalue);
    } else {
      norm_drift = std::max(norm_drift, r.max_norm_drift);
    }
  }
};

Conservation g_conservation;

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

BasisLabel L(const char* s) { return parse_label(s); }

const SpaceDescriptor kOne(1, 0);
const SpaceDescriptor kTwo(2, 1);

PulsePair full_sweep(double eps, double t_f) { return pulses_from_trajectory(AuxiliaryTrajectory::full_sweep(eps, t_f)); }

TrajectoryRecord one_qubit_closed(double eps, double t_f) {
  auto rec = schrodinger_evolve(one_qubit_hamiltonian(full_sweep(eps, t_f)), ket(kOne, L("1")), {t_f, 20000, 0});
  g_conservation.closed(rec);
  return rec;
}

Outcome criterion1() {
  const auto rec = one_qubit_closed(0.25, 10.0);
  const double f = fidelity(rec.final_state(), Complex(-1.0) * ket(kOne, L("1"))).population;
  const double analytic = std::norm(closed_form_final_state(AuxiliaryTrajectory::full_sweep(0.25, 10.0))[1]);
  return {f >= 0.99 && std::abs(f - analytic) < 1e-4,
          fmt("F=%.7f analytic=%.7f |diff|=%.2e", f, analytic, std::abs(f - analytic))};
}

Outcome criterion2() {
  const double eps = std::asin(0.25);
  const auto rec = one_qubit_closed(eps, 10.0);
  const double dist = (rec.final_state().amplitudes() + ket(kOne, L("1")).amplitudes()).norm();
  const auto rep = execute_plan(one_qubit_phase_plan(eps, 10.0));
  g_conservation.gate(rep);
  const double mdist = (rep.realized - rep.ideal).cwiseAbs().maxCoeff();
  return {dist < 1e-4 && mdist < 1e-3, fmt("|psi+|1>|=%.2e max|U-diag(1,-1)|=%.2e", dist, mdist)};
}

Outcome criterion3() {
  double worst = 0.0;
  for (double eps : {0.1, 0.25, 0.5, 1.0}) {
    const auto tr = AuxiliaryTrajectory::full_sweep(eps, 10.0);
    const auto r = lr_phase_quadrature(tr, pulses_from_trajectory(tr));
    const double ref = pi / std::sin(eps);
    worst = std::max({worst, std::abs(std::abs(r.alpha_plus) - ref), std::abs(std::abs(r.alpha_minus) - ref)});
  }
  return {worst < 1e-6, fmt("max ||alpha|-pi/sin eps|=%.2e", worst)};
}

Outcome criterion4() {
  double worst = 0.0;
  for (double eps : {0.1, 0.25, 0.5, 1.0})
    for (bool half : {false, true}) {
      const auto tr = half ? AuxiliaryTrajectory::half_sweep(eps, 10.0) : AuxiliaryTrajectory::full_sweep(eps, 10.0);
      const auto p = pulses_from_trajectory(tr);
      for (int k = 0; k < 100; ++k) worst = std::max(worst, invariant_residual(tr, p, tr.t_f * k / 99.0));
    }
  return {worst < 1e-10, fmt("max defect=%.2e over 100 times x 8 trajectories", worst)};
}

Outcome criterion5() {
  const auto gammas = linspace(0.0, 0.1, 30);
  const auto m = one_qubit_hamiltonian(full_sweep(0.25, 10.0));
  const auto target = Complex(-1.0) * ket(kOne, L("1"));
  double worst = 1.0, last_good = -1.0;
  for (double gamma : gammas) {
    const auto rec = lindblad_evolve(m, atomic_decay_set(kOne, 0, gamma), DensityMatrix::pure(ket(kOne, L("1"))),
                                     {10.0, 20000, 0});
    g_conservation.open(rec);
    const double f = fidelity(rec.final_density(), target).population;
    worst = std::min(worst, f);
    if (f >= 0.997) last_good = gamma;
  }
  return {worst >= 0.997,
          fmt("gamma in [0, 0.1g], 30 points: min F=%.6f; F>=0.997 holds up to gamma=%.4f g", worst, last_good)};
}

Outcome criterion6() {
  const double t_f = 20.0 * sqrt2;
  const auto p = full_sweep(0.25, t_f);
  const auto m = pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1);
  const auto z = zeno_reduce(m, L("12"));
  const double r = 1.0 / sqrt2;
  const Vector expected = (r * (ket(kTwo, L("23")).amplitudes() - ket(kTwo, L("32")).amplitudes()));
  double err = z.bright_states.size() == 1 ? (z.bright_state().amplitudes() - expected).norm() : 1.0;
  for (int k = 0; k <= 20; ++k) {
    const double t = t_f * k / 20.0;
    const auto mu = z.bright_state();
    err = std::max(err, std::abs(std::abs(z.effective_element(mu, ket(kTwo, L("12")), t)) - std::abs(p.omega1(t)) * r));
    err = std::max(err, std::abs(std::abs(z.effective_element(mu, ket(kTwo, L("21")), t)) - std::abs(p.omega2(t)) * r));
    err = std::max(err, std::abs(z.effective_element(ket(kTwo, L("12")), ket(kTwo, L("21")), t)));
  }
  std::vector<double> inf;
  for (double ratio : {5.0, 10.0, 20.0}) {
    const auto mg = pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1, ratio * p.peak());
    inf.push_back(zeno_infidelity(mg, L("12"), {t_f, 40000, 0}));
  }
  const bool decreasing = inf[0] > inf[1] && inf[1] > inf[2];
  return {err < 1e-10 && decreasing,
          fmt("reduction error=%.2e; infidelity at g/Omega_max 5,10,20: %.3e %.3e %.3e", err, inf[0], inf[1], inf[2])};
}

Outcome criterion7() {
  const auto paper = execute_plan(two_qubit_cz_plan(ProtocolParameters::paper()));
  const auto exact = execute_plan(two_qubit_cz_plan(ProtocolParameters::exact()));
  g_conservation.gate(paper);
  g_conservation.gate(exact);
  const double frozen_pop[4] = {1.0, 0.9999343407, 0.9963556771, 0.6143398399};
  bool frozen = true;
  for (int i = 0; i < 4; ++i) frozen = frozen && std::abs(paper.per_state[i].population - frozen_pop[i]) < 1e-7;
  const double min_pop = paper.min_population_fidelity();
  const Complex a11 = paper.realized(3, 3);
  const double phase_dev = std::abs(std::abs(std::arg(a11)) - pi);
  const double err_paper = std::abs(a11 + 1.0);
  const double err_exact = std::abs(exact.realized(3, 3) + 1.0);
  const bool pass = min_pop >= 0.95 && phase_dev <= 0.15 && frozen && err_exact < err_paper;
  return {pass, fmt("paper pops %.6f %.6f %.6f %.6f (min %.4f); |11> phase off pi by %.2e rad; "
                    "|U11+1| paper %.4f exact %.4f; regression %s",
                    paper.per_state[0].population, paper.per_state[1].population, paper.per_state[2].population,
                    paper.per_state[3].population, min_pop, phase_dev, err_paper, err_exact,
                    frozen ? "ok" : "CHANGED")};
}

/// Step-2 fidelity of -|12> at t_f for decay (kappa, gamma).
struct PairRun {
  double eps;
  double t_f = 20.0 * sqrt2;
  FidelityReport run(double kappa, double gamma) const {
    const auto p = full_sweep(eps, t_f);
    const auto m = pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1);
    const auto rec = lindblad_evolve(m, cavity_decay_set(kTwo, kappa, gamma, {0, 1}),
                                     DensityMatrix::pure(ket(kTwo, L("12"))), {t_f, 20000, 0});
    g_conservation.open(rec);
    return fidelity(rec.final_density(), Complex(-1.0) * ket(kTwo, L("12")));
  }
};

Outcome criterion8() {
  const PairRun paper{0.25};
  const auto rates = linspace(0.0, 0.1, 30);
  const auto times = linspace(0.0, paper.t_f, 30);
  auto time_rows = [&](bool kappa_axis) {
    return sweep_rows(times, rates, [&](double y) {
      const auto p = full_sweep(paper.eps, paper.t_f);
      const auto m = pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1);
      const auto set = kappa_axis ? cavity_decay_set(kTwo, y, 0.0, {0, 1}) : cavity_decay_set(kTwo, 0.0, y, {0, 1});
      const auto rec = lindblad_evolve(m, set, DensityMatrix::pure(ket(kTwo, L("12"))),
                                       EvolutionConfig::with_snapshots(paper.t_f, 29, 20000));
      g_conservation.open(rec);
      std::vector<FidelityReport> out;
      for (const auto& rho : rec.densities) out.push_back(fidelity(rho, Complex(-1.0) * ket(kTwo, L("12"))));
      return out;
    });
  };
  const auto kappa_grid = time_rows(true);
  const auto gamma_grid = time_rows(false);
  auto monotone = [&](const SweepGrid& g) {
    for (std::size_t iy = 1; iy < g.ys.size(); ++iy)
      if (!(g.at(29, iy).report.population < g.at(29, iy - 1).report.population)) return false;
    return true;
  };
  const bool mono = monotone(kappa_grid) && monotone(gamma_grid);

  const auto p = full_sweep(paper.eps, paper.t_f);
  const auto closed = schrodinger_evolve(pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1), ket(kTwo, L("12")),
                                         {paper.t_f, 20000, 0});
  g_conservation.closed(closed);
  const double f_closed = fidelity(closed.final_state(), Complex(-1.0) * ket(kTwo, L("12"))).population;
  const double f_zero = kappa_grid.at(29, 0).report.population;

  const double kappa = 3.5 / 750.0, gamma = 2.62 / 750.0;
  const double f_cited = paper.run(kappa, gamma).population;
  const PairRun exact{ProtocolParameters::exact().eps_imprint};
  const double f_cited_exact = exact.run(kappa, gamma).population;

  const bool pass = mono && std::abs(f_zero - f_closed) < 1e-6 && f_cited >= 0.99;
  return {pass, fmt("monotone in kappa and gamma: %s; F(0,0)=%.7f closed=%.7f; F at cited ratios=%.6f "
                    "(compensated epsilon, informational: %.6f); final F at rate 0.1: kappa %.4f gamma %.4f",
                    mono ? "yes" : "no", f_zero, f_closed, f_cited, f_cited_exact,
                    kappa_grid.at(29, 29).report.population, gamma_grid.at(29, 29).report.population)};
}

Outcome criterion9() {
  const auto rep = execute_plan(three_qubit_ccz_plan(ProtocolParameters::exact()));
  g_conservation.gate(rep);
  std::string minus_on;
  bool sign_ok = true;
  for (int i = 0; i < 8; ++i) {
    const bool minus = rep.realized(i, i).real() < 0.0;
    if (minus) minus_on += to_string(rep.basis[i]) + " ";
    sign_ok = sign_ok && (minus == (i == 7));
  }
  double worst_photon = 0.0, worst_excited = 0.0;
  for (const auto& b : rep.boundaries) {
    worst_photon = std::max(worst_photon, b.photon_population);
    worst_excited = std::max(worst_excited, b.excited_population);
  }
  const double min_pop = rep.min_population_fidelity();
  const bool pass = sign_ok && min_pop >= 0.95 && worst_photon < 1e-3 && worst_excited < 1e-3;
  return {pass, fmt("-1 phase on: %s; min pop=%.4f; max boundary photon=%.3e excited=%.3e", minus_on.c_str(), min_pop,
                    worst_photon, worst_excited)};
}

Outcome criterion10() {
  const auto m1 = one_qubit_hamiltonian(full_sweep(0.25, 10.0));
  const EvolutionConfig c1{10.0, 20000, 0};
  double halving = step_halving_change(m1, ket(kOne, L("1")), c1);
  halving = std::max(halving, step_halving_change(m1, atomic_decay_set(kOne, 0, 0.1),
                                                  DensityMatrix::pure(ket(kOne, L("1"))), c1));
  const double t_f = 20.0 * sqrt2;
  const auto p = full_sweep(0.25, t_f);
  const auto m2 = pair_step_hamiltonian(kTwo, 0, 1, p.omega1, p.omega2, 1);
  const EvolutionConfig c2{t_f, 20000, 0};
  halving = std::max(halving, step_halving_change(m2, ket(kTwo, L("12")), c2));
  halving = std::max(halving, step_halving_change(m2, cavity_decay_set(kTwo, 0.05, 0.05, {0, 1}),
                                                  DensityMatrix::pure(ket(kTwo, L("12"))), c2));
  g_conservation.step_halving = halving;
  const auto& c = g_conservation;
  const bool pass = c.norm_drift < 1e-9 && c.trace_drift < 1e-7 && c.min_eigenvalue > -1e-6 && halving < 1e-8;
  return {pass, fmt("norm drift=%.2e trace drift=%.2e min eigenvalue=%.2e step halving=%.2e", c.norm_drift,
                    c.trace_drift, c.min_eigenvalue, halving)};
}

Outcome criterion11() {
  double lo = 1.0, hi = 0.0;
  for (double t_f : {5.0, 10.0, 20.0, 50.0}) {
    const auto rec = one_qubit_closed(0.25, t_f);
    const double f = fidelity(rec.final_state(), Complex(-1.0) * ket(kOne, L("1"))).population;
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  return {hi - lo < 1e-6, fmt("F spread over g t_f in {5,10,20,50}: %.2e", hi - lo)};
}

}  // namespace

int main() {
  set_warning_handler([](std::string_view) {});
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"one-qubit gate, paper parameters", criterion1},
      {"one-qubit gate, exact epsilon", criterion2},
      {"LR phase quadrature", criterion3},
      {"invariant defect", criterion4},
      {"open one-qubit gate vs gamma", criterion5},
      {"Zeno reduction and convergence", criterion6},
      {"two-qubit CZ, paper mode", criterion7},
      {"two-qubit step 2 with decay", criterion8},
      {"three-qubit CCZ, exact mode", criterion9},
      {"conservation suite", criterion10},
      {"t_f independence", criterion11},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
