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

// Multi-step controlled-phase protocols and their execution.
//
// A plan is declarative: each step lists drives and durations, and the
// Hamiltonians are only assembled by execute_plan. This keeps plan
// construction cheap for any number of atoms.

#pragma once

#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "stap/dynamics.hpp"
#include "stap/invariant.hpp"
#include "stap/models.hpp"

namespace stap {

/// One continuous pulse segment: drives on a common duration, every atom
/// coupled to the cavity when `cavity` is set.
struct StepSegment {
  std::vector<DriveSpec> drives;
  double t_f = 10.0;
  bool cavity = true;
};

struct GateStep {
  std::string description;
  std::vector<StepSegment> segments;
  double epsilon = 0.25;
  double delta_beta = std::numbers::pi;
  std::vector<int> driven_atoms;
  /// Steps relying on Zeno dynamics of the cavity coupling.
  bool zeno = false;

  double duration() const {
    double t = 0.0;
    for (const auto& s : segments) t += s.t_f;
    return t;
  }
};

struct GatePlan {
  int n_qubits = 1;
  SpaceDescriptor space{1, 0};
  double g = 1.0;
  std::vector<GateStep> steps;
  std::vector<BasisLabel> computational_basis;
  std::vector<std::string> warnings;

  /// diag(+1, ..., +1, -1), the -1 on the all-ones input.
  Matrix ideal_matrix() const {
    const int n = static_cast<int>(computational_basis.size());
    Matrix u = Matrix::Identity(n, n);
    u(n - 1, n - 1) = -1.0;
    return u;
  }

  HamiltonianModel segment_model(const StepSegment& seg) const {
    if (seg.cavity && space.photon_cutoff > 0) return HamiltonianModel(space, seg.drives, couple_all_atoms(space, g));
    return HamiltonianModel(space, seg.drives, {});
  }
};

/// Per-step epsilons and durations shared by the multi-atom protocols.
struct ProtocolParameters {
  /// Half sweep |1> -> -|2> on a single atom.
  double eps_transfer = 0.25;
  /// Half sweep |12> -> |21> on a pair through the cavity.
  double eps_pair = 0.25;
  /// Full sweep imprinting the -1 through the cavity.
  double eps_imprint = 0.25;
  double t_transfer = 10.0;
  double t_pair = 20.0 * std::numbers::sqrt2;
  double t_imprint = 20.0 * std::numbers::sqrt2;
  double g = 1.0;
  int photon_cutoff = 1;

  static ProtocolParameters paper() { return {}; }

  /// Epsilons meeting alpha = 2 N pi exactly, with the 1/sqrt2 of the Zeno
  /// coupling compensated on the cavity steps.
  static ProtocolParameters exact() {
    ProtocolParameters p;
    p.eps_transfer = epsilon_for_phase_condition(std::numbers::pi / 2, 1);
    p.eps_pair = epsilon_for_phase_condition(std::numbers::pi / 2, 1, std::numbers::sqrt2);
    p.eps_imprint = epsilon_for_phase_condition(std::numbers::pi, 2, std::numbers::sqrt2);
    return p;
  }
};

namespace detail {

inline PulsePair sweep_pulses(double eps, double t_f, bool half) {
  return pulses_from_trajectory(half ? AuxiliaryTrajectory::half_sweep(eps, t_f)
                                     : AuxiliaryTrajectory::full_sweep(eps, t_f));
}

/// |1> -> -|2> on `atom`, or |2> -> -|1> when `reverse`.
inline GateStep transfer_step(int atom, double eps, double t_f, bool reverse) {
  auto p = sweep_pulses(eps, t_f, true);
  if (reverse) p = p.swapped();
  GateStep s;
  s.description = std::string(reverse ? "reverse transfer |2> -> |1>" : "transfer |1> -> |2>") + " on atom " +
                  std::to_string(atom + 1);
  s.segments.push_back({{{atom, 1, 4, p.omega1}, {atom, 2, 4, p.omega2}}, t_f, true});
  s.epsilon = eps;
  s.delta_beta = std::numbers::pi / 2;
  s.driven_atoms = {atom};
  return s;
}

/// |12> -> |21> on atoms (a, b) through the cavity; `reverse` swaps the roles.
inline StepSegment pair_transfer_segment(int a, int b, double eps, double t_f, bool reverse) {
  auto p = sweep_pulses(eps, t_f, true);
  if (reverse) p = p.swapped();
  return {{{a, 1, 3, p.omega1}, {b, 1, 3, p.omega2}}, t_f, true};
}

inline std::vector<BasisLabel> basis_for(const SpaceDescriptor& space) { return computational_basis(space); }

inline void zeno_advisory(GatePlan& plan, const GateStep& step) {
  double peak = 0.0;
  for (const auto& seg : step.segments)
    for (const auto& d : seg.drives) peak = std::max(peak, d.pulse.peak(seg.t_f));
  if (peak > plan.g / 5.0) {
    std::string msg = step.description + ": peak drive " + std::to_string(peak) + " exceeds g/5; Zeno regime not assured";
    warn(msg);
    plan.warnings.push_back(std::move(msg));
  }
}

}  // namespace detail

/// Single atom, one full sweep: |1> -> -|1> when pi / sin(eps) = 2 N pi.
inline GatePlan one_qubit_phase_plan(double eps, double t_f) {
  AuxiliaryTrajectory::full_sweep(eps, t_f).validate();
  const auto p = detail::sweep_pulses(eps, t_f, false);
  GatePlan plan;
  plan.n_qubits = 1;
  plan.space = SpaceDescriptor(1, 0);
  GateStep s;
  s.description = "full sweep on atom 1";
  s.segments.push_back({{{0, 1, 4, p.omega1}, {0, 2, 4, p.omega2}}, t_f, false});
  s.epsilon = eps;
  s.delta_beta = std::numbers::pi;
  s.driven_atoms = {0};
  plan.steps.push_back(std::move(s));
  plan.computational_basis = detail::basis_for(plan.space);
  return plan;
}

/// Transfer on atom 2, cavity imprint on the |12> pair, reverse transfer.
inline GatePlan two_qubit_cz_plan(double eps1, double eps2, double t_f1, double t_f2, double g = 1.0,
                                  int photon_cutoff = 1) {
  if (!(g > 0.0)) throw ParameterError("g must be positive");
  GatePlan plan;
  plan.n_qubits = 2;
  plan.space = SpaceDescriptor(2, photon_cutoff);
  plan.g = g;
  if (photon_cutoff < 1) throw ParameterError("two-qubit protocol needs photon cutoff >= 1");

  plan.steps.push_back(detail::transfer_step(1, eps1, t_f1, false));

  const auto p = detail::sweep_pulses(eps2, t_f2, false);
  GateStep imprint;
  imprint.description = "cavity imprint on |12>";
  imprint.segments.push_back({{{0, 1, 3, p.omega1}, {1, 1, 3, p.omega2}}, t_f2, true});
  imprint.epsilon = eps2;
  imprint.delta_beta = std::numbers::pi;
  imprint.driven_atoms = {0, 1};
  imprint.zeno = true;
  detail::zeno_advisory(plan, imprint);
  plan.steps.push_back(std::move(imprint));

  plan.steps.push_back(detail::transfer_step(1, eps1, t_f1, true));
  plan.computational_basis = detail::basis_for(plan.space);
  return plan;
}

inline GatePlan two_qubit_cz_plan(const ProtocolParameters& p) {
  return two_qubit_cz_plan(p.eps_transfer, p.eps_imprint, p.t_transfer, p.t_imprint, p.g, p.photon_cutoff);
}

/// Four steps on n_plus_1 atoms: transfer on the last atom, pair transfer on
/// the last two, imprint driving |0> -> |3> on atoms 1..n (sine pulse on all
/// but atom n, cosine on atom n), then the inverse transfers.
inline GatePlan multiqubit_plan(int n_plus_1, const ProtocolParameters& p = ProtocolParameters::paper()) {
  if (n_plus_1 < 3) throw ParameterError("use the one- or two-qubit plans below three atoms");
  if (!(p.g > 0.0)) throw ParameterError("g must be positive");
  if (p.photon_cutoff < 1) throw ParameterError("multi-qubit protocol needs photon cutoff >= 1");
  const int last = n_plus_1 - 1;
  const int nth = n_plus_1 - 2;

  GatePlan plan;
  plan.n_qubits = n_plus_1;
  plan.space = SpaceDescriptor(n_plus_1, p.photon_cutoff);
  plan.g = p.g;

  plan.steps.push_back(detail::transfer_step(last, p.eps_transfer, p.t_transfer, false));

  GateStep pair;
  pair.description = "pair transfer on atoms " + std::to_string(nth + 1) + "," + std::to_string(last + 1);
  pair.segments.push_back(detail::pair_transfer_segment(nth, last, p.eps_pair, p.t_pair, false));
  pair.epsilon = p.eps_pair;
  pair.delta_beta = std::numbers::pi / 2;
  pair.driven_atoms = {nth, last};
  pair.zeno = true;
  detail::zeno_advisory(plan, pair);
  plan.steps.push_back(std::move(pair));

  const auto im = detail::sweep_pulses(p.eps_imprint, p.t_imprint, false);
  GateStep imprint;
  imprint.description = "cavity imprint driving |0> -> |3> on atoms 1.." + std::to_string(nth + 1);
  StepSegment seg{{}, p.t_imprint, true};
  for (int k = 0; k < nth; ++k) {
    seg.drives.push_back({k, 0, 3, im.omega1});
    imprint.driven_atoms.push_back(k);
  }
  seg.drives.push_back({nth, 0, 3, im.omega2});
  imprint.driven_atoms.push_back(nth);
  imprint.segments.push_back(std::move(seg));
  imprint.epsilon = p.eps_imprint;
  imprint.delta_beta = std::numbers::pi;
  imprint.zeno = true;
  detail::zeno_advisory(plan, imprint);
  plan.steps.push_back(std::move(imprint));

  GateStep undo;
  undo.description = "inverse pair transfer then inverse transfer on atom " + std::to_string(last + 1);
  undo.segments.push_back(detail::pair_transfer_segment(nth, last, p.eps_pair, p.t_pair, true));
  undo.segments.push_back(detail::transfer_step(last, p.eps_transfer, p.t_transfer, true).segments.front());
  undo.epsilon = p.eps_pair;
  undo.delta_beta = std::numbers::pi / 2;
  undo.driven_atoms = {nth, last};
  undo.zeno = true;
  plan.steps.push_back(std::move(undo));

  plan.computational_basis = detail::basis_for(plan.space);
  return plan;
}

inline GatePlan three_qubit_ccz_plan(const ProtocolParameters& p = ProtocolParameters::paper()) {
  return multiqubit_plan(3, p);
}

/// Population outside the qubit levels after one segment.
struct BoundaryCheck {
  int step = 0;
  int segment = 0;
  std::string input;
  double photon_population = 0.0;
  /// Population in atomic levels 3 or 4, any photon number.
  double excited_population = 0.0;
  bool flagged = false;
};

enum class LeakagePolicy { Flag, Strict };

struct ExecutionOptions {
  bool use_effective = false;
  std::optional<LindbladSet> lindblad;
  LeakagePolicy leakage_policy = LeakagePolicy::Flag;
  double boundary_tolerance = 1e-3;
  int n_steps = 20000;
  /// Largest atom count executed; plans beyond it can be built but not run.
  int max_atoms = 3;
  int workers = default_workers();
};

struct GateReport {
  std::vector<BasisLabel> basis;
  /// realized(j, i) = <j|U|i>; for open runs |realized(j, i)|^2 = <j|rho_i|j>
  /// and phases are not available.
  Matrix realized;
  Matrix ideal;
  std::vector<FidelityReport> per_state;
  /// arg <i|U|i>, closed runs only.
  std::vector<double> phases;
  std::vector<double> leakage;
  std::vector<BoundaryCheck> boundaries;
  double gate_fidelity = 0.0;
  double max_norm_drift = 0.0;
  double min_eigenvalue = 0.0;
  bool open_system = false;
  std::vector<std::string> warnings;

  bool boundary_flagged() const {
    return std::any_of(boundaries.begin(), boundaries.end(), [](const BoundaryCheck& b) { return b.flagged; });
  }
  double max_leakage() const { return leakage.empty() ? 0.0 : *std::max_element(leakage.begin(), leakage.end()); }
  double min_population_fidelity() const {
    double m = 1.0;
    for (const auto& f : per_state) m = std::min(m, f.population);
    return m;
  }
};

namespace detail {

inline std::pair<double, double> boundary_populations(const SpaceDescriptor& space, const Eigen::VectorXd& diag_pop) {
  double photon = 0.0, excited = 0.0;
  for (int i = 0; i < space.dim(); ++i) {
    if (diag_pop(i) == 0.0) continue;
    if (photons_of(space, i) > 0) photon += diag_pop(i);
    for (int k = 0; k < space.n_atoms; ++k) {
      const int l = level_of(space, i, k);
      if (l == 3 || l == 4) {
        excited += diag_pop(i);
        break;
      }
    }
  }
  return {photon, excited};
}

}  // namespace detail

/// Evolves every computational-basis input through all steps and compares
/// with the ideal controlled-phase gate.
inline GateReport execute_plan(const GatePlan& plan, const ExecutionOptions& options = {}) {
  if (plan.space.n_atoms > options.max_atoms) {
    throw ParameterError("plan has " + std::to_string(plan.space.n_atoms) + " atoms; execution is limited to " +
                         std::to_string(options.max_atoms));
  }
  if (options.lindblad) require_same_space(plan.space, options.lindblad->space);
  const auto& space = plan.space;

  struct Segment {
    int step;
    int index;
    HamiltonianModel model;
    double t_f;
  };
  std::vector<Segment> segments;
  for (std::size_t s = 0; s < plan.steps.size(); ++s) {
    for (std::size_t k = 0; k < plan.steps[s].segments.size(); ++k) {
      const auto& seg = plan.steps[s].segments[k];
      auto model = plan.segment_model(seg);
      if (options.use_effective && seg.cavity && space.photon_cutoff > 0) model = zeno_effective_model(model);
      segments.push_back({static_cast<int>(s), static_cast<int>(k), std::move(model), seg.t_f});
    }
  }

  const auto& basis = plan.computational_basis;
  const int n = static_cast<int>(basis.size());
  GateReport report;
  report.basis = basis;
  report.ideal = plan.ideal_matrix();
  report.realized = Matrix::Zero(n, n);
  report.per_state.resize(n);
  report.phases.assign(n, 0.0);
  report.leakage.assign(n, 0.0);
  report.open_system = options.lindblad.has_value();
  report.warnings = plan.warnings;
  report.min_eigenvalue = report.open_system ? 1.0 : 0.0;

  std::vector<std::vector<BoundaryCheck>> checks(n);
  std::vector<double> drift(n, 0.0), min_eig(n, 1.0);
  std::vector<std::vector<std::string>> warnings(n);
  std::vector<std::exception_ptr> failures(n);
  std::vector<Vector> finals(n);
  std::vector<Matrix> final_rho(n);

  detail::run_parallel(n, options.workers, [&](std::size_t i) {
    try {
      const std::string name = to_string(basis[i]);
      StateVector psi = ket(space, basis[i]);
      DensityMatrix rho = DensityMatrix::pure(psi);
      for (const auto& seg : segments) {
        EvolutionConfig cfg{seg.t_f, options.n_steps, 0};
        Eigen::VectorXd pop;
        if (options.lindblad) {
          auto rec = lindblad_evolve(seg.model, *options.lindblad, rho, cfg);
          rho = rec.final_density();
          drift[i] = std::max(drift[i], rec.max_norm_drift);
          min_eig[i] = std::min(min_eig[i], rec.min_eigenvalue);
          for (auto& w : rec.warnings) warnings[i].push_back(std::move(w));
          pop = rho.entries().diagonal().real();
        } else {
          auto rec = schrodinger_evolve(seg.model, psi, cfg);
          psi = rec.final_state();
          drift[i] = std::max(drift[i], rec.max_norm_drift);
          pop = psi.amplitudes().cwiseAbs2();
        }
        const auto [photon, excited] = detail::boundary_populations(space, pop);
        BoundaryCheck b{seg.step, seg.index, name, photon, excited, false};
        b.flagged = photon >= options.boundary_tolerance || excited >= options.boundary_tolerance;
        if (photon >= options.boundary_tolerance && options.leakage_policy == LeakagePolicy::Strict) {
          throw LeakageError("photon population " + std::to_string(photon) + " after step " +
                                 std::to_string(seg.step + 1) + " for input " + name,
                             seg.step, name);
        }
        checks[i].push_back(b);
      }
      if (options.lindblad) {
        final_rho[i] = rho.entries();
      } else {
        finals[i] = psi.amplitudes();
      }
    } catch (...) {
      failures[i] = std::current_exception();
    }
  });
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<StateVector> kets;
  for (const auto& b : basis) kets.push_back(ket(space, b));
  for (int i = 0; i < n; ++i) {
    const StateVector target = report.ideal(i, i) * kets[i];
    double inside = 0.0;
    if (report.open_system) {
      const DensityMatrix rho(space, final_rho[i]);
      for (int j = 0; j < n; ++j) {
        const double p = rho.population(basis[j]);
        report.realized(j, i) = std::sqrt(std::max(0.0, p));
        inside += p;
      }
      report.per_state[i] = fidelity(rho, target, to_string(basis[i]));
      report.min_eigenvalue = std::min(report.min_eigenvalue, min_eig[i]);
    } else {
      const StateVector psi(space, finals[i]);
      for (int j = 0; j < n; ++j) {
        report.realized(j, i) = inner_product(kets[j], psi);
        inside += std::norm(report.realized(j, i));
      }
      report.per_state[i] = fidelity(psi, target, to_string(basis[i]));
      report.phases[i] = std::arg(report.realized(i, i));
    }
    report.leakage[i] = std::max(0.0, 1.0 - inside);
    report.max_norm_drift = std::max(report.max_norm_drift, drift[i]);
    for (auto& c : checks[i]) report.boundaries.push_back(std::move(c));
    for (auto& w : warnings[i]) report.warnings.push_back(std::move(w));
  }
  if (report.open_system) {
    double sum = 0.0;
    for (const auto& f : report.per_state) sum += f.population;
    report.gate_fidelity = sum / n;
  } else {
    report.gate_fidelity = std::abs((report.ideal.adjoint() * report.realized).trace()) / n;
  }
  return report;
}

/// 1 - |<psi_full|psi_eff>|^2 after evolving `initial` with the model and
/// with its Zeno-limit effective model.
inline double zeno_infidelity(const HamiltonianModel& model, const BasisLabel& initial, const EvolutionConfig& config) {
  const auto psi0 = ket(model.space(), initial);
  const auto full = schrodinger_evolve(model, psi0, config).final_state();
  const auto eff = schrodinger_evolve(zeno_effective_model(model), psi0, config).final_state();
  return 1.0 - std::norm(inner_product(full, eff));
}

}  // namespace stap
