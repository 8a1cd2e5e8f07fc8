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

// Closed- and open-system time evolution, observables and parameter sweeps.
//
// Both integrators are fixed-step classical Runge-Kutta of order four. A run
// only touches the basis states reachable from the initial support under the
// generators, which is exact and keeps multi-atom runs small.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "stap/hilbert.hpp"
#include "stap/models.hpp"

namespace stap {

struct EvolutionConfig {
  double t_f = 10.0;
  int n_steps = 20000;
  /// Snapshot stride in steps; 0 records only the endpoints.
  int record_every = 0;

  /// n_steps >= min_steps and a multiple of `snapshots`, recording
  /// snapshots + 1 equally spaced states including both endpoints.
  static EvolutionConfig with_snapshots(double t_f, int snapshots, int min_steps = 20000) {
    if (snapshots < 1) throw ParameterError("snapshots must be >= 1");
    const int per = (min_steps + snapshots - 1) / snapshots;
    return EvolutionConfig{t_f, per * snapshots, per};
  }

  EvolutionConfig refined() const {
    EvolutionConfig c = *this;
    c.n_steps *= 2;
    if (c.record_every > 0) c.record_every *= 2;
    return c;
  }

  void validate() const {
    if (!(t_f > 0.0)) throw ParameterError("t_f must be positive");
    if (n_steps < 1) throw ParameterError("n_steps must be >= 1");
    if (record_every < 0) throw ParameterError("record_every must be >= 0");
  }
};

/// Collapse operators L_k = sqrt(rate_k) * jump_k.
struct LindbladSet {
  struct Channel {
    std::string name;
    double rate = 0.0;
    Matrix jump;
  };
  SpaceDescriptor space;
  std::vector<Channel> channels;

  explicit LindbladSet(SpaceDescriptor s) : space(s) {}

  void add(std::string name, double rate, const OperatorMatrix& jump) {
    require_same_space(space, jump.space());
    if (!(rate >= 0.0)) throw ParameterError("decay rate must be non-negative: " + name);
    channels.push_back({std::move(name), rate, jump.entries()});
  }

  bool empty() const {
    return std::all_of(channels.begin(), channels.end(), [](const Channel& c) { return c.rate == 0.0; });
  }
};

/// |4> -> |1> and |4> -> |2> on one atom, each at rate gamma / 2.
inline LindbladSet atomic_decay_set(const SpaceDescriptor& space, int atom, double gamma) {
  LindbladSet set(space);
  set.add("gamma/2 |1><4|", gamma / 2.0, transition_op(space, atom, 1, 4));
  set.add("gamma/2 |2><4|", gamma / 2.0, transition_op(space, atom, 2, 4));
  return set;
}

/// Cavity loss sqrt(kappa) a plus |3> -> |1>, |3> -> |2> at rate gamma on each
/// listed atom.
inline LindbladSet cavity_decay_set(const SpaceDescriptor& space, double kappa, double gamma,
                                    const std::vector<int>& atoms) {
  LindbladSet set(space);
  set.add("kappa a", kappa, annihilation_op(space));
  for (int k : atoms) {
    set.add("gamma |1><3| atom " + std::to_string(k + 1), gamma, transition_op(space, k, 1, 3));
    set.add("gamma |2><3| atom " + std::to_string(k + 1), gamma, transition_op(space, k, 2, 3));
  }
  return set;
}

struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<StateVector> states;
  std::vector<DensityMatrix> densities;
  std::vector<std::string> warnings;
  /// Largest |norm - 1| (closed) or |Tr rho - 1| (open) seen at any step.
  double max_norm_drift = 0.0;
  /// Smallest eigenvalue over the recorded density matrices.
  double min_eigenvalue = 0.0;
  /// Basis states the run actually evolved.
  std::vector<int> support;

  bool is_open() const { return !densities.empty(); }
  std::size_t size() const { return times.size(); }
  const StateVector& final_state() const { return states.back(); }
  const DensityMatrix& final_density() const { return densities.back(); }
};

/// overlap: Re<target|psi> or |<target|rho|target>|; population:
/// |<target|psi>|^2 or <target|rho|target>.
struct FidelityReport {
  double overlap = 0.0;
  double population = 0.0;
  std::string target;
};

inline FidelityReport fidelity(const StateVector& state, const StateVector& target, std::string name = {}) {
  require_same_space(state.space(), target.space());
  const Complex a = inner_product(target, state);
  return {a.real(), std::norm(a), std::move(name)};
}

inline FidelityReport fidelity(const DensityMatrix& rho, const StateVector& target, std::string name = {}) {
  const Complex e = rho.expectation_in(target);
  return {std::abs(e), e.real(), std::move(name)};
}

namespace detail {

struct RestrictedGenerator {
  std::vector<int> index;
  Matrix static_part;
  std::vector<std::pair<Pulse, Matrix>> terms;

  Matrix at(double t) const {
    Matrix h = static_part;
    for (const auto& [p, m] : terms) h += p(t) * m;
    return h;
  }
};

inline RestrictedGenerator restrict_model(const HamiltonianModel& model, std::vector<int> index) {
  RestrictedGenerator r;
  r.static_part = restrict_to(model.static_part(), index);
  for (const auto& t : model.terms()) r.terms.emplace_back(t.pulse, restrict_to(t.matrix, index));
  r.index = std::move(index);
  return r;
}

inline double time_at(const EvolutionConfig& c, int n) {
  return n == c.n_steps ? c.t_f : c.t_f * static_cast<double>(n) / c.n_steps;
}

inline bool should_record(const EvolutionConfig& c, int n) {
  return n == 0 || n == c.n_steps || (c.record_every > 0 && n % c.record_every == 0);
}

inline void report(TrajectoryRecord& rec, std::string msg) {
  warn(msg);
  rec.warnings.push_back(std::move(msg));
}

}  // namespace detail

/// Integrates i dpsi/dt = H(t) psi over [0, t_f].
inline TrajectoryRecord schrodinger_evolve(const HamiltonianModel& model, const StateVector& initial,
                                           const EvolutionConfig& config) {
  config.validate();
  require_same_space(model.space(), initial.space());
  if (std::abs(initial.norm() - 1.0) > 1e-6) throw ParameterError("initial state is not normalized");

  const auto& space = model.space();
  const auto gen = detail::restrict_model(model, closed_support(model.generators(), support_of(initial.amplitudes())));
  const int d = static_cast<int>(gen.index.size());
  const Complex mi(0.0, -1.0);

  Vector psi(d);
  for (int i = 0; i < d; ++i) psi(i) = initial[gen.index[i]];
  const double norm0 = psi.norm();

  TrajectoryRecord rec;
  rec.support = gen.index;
  auto snapshot = [&](double t) {
    Vector full = Vector::Zero(space.dim());
    for (int i = 0; i < d; ++i) full(gen.index[i]) = psi(i);
    rec.times.push_back(t);
    rec.states.emplace_back(space, std::move(full));
  };

  const double h = config.t_f / config.n_steps;
  Matrix h_start = gen.at(0.0);
  snapshot(0.0);
  for (int n = 0; n < config.n_steps; ++n) {
    const double t = detail::time_at(config, n);
    const double t_next = detail::time_at(config, n + 1);
    const Matrix h_mid = gen.at(t + 0.5 * h);
    const Matrix h_end = gen.at(t_next);
    const Vector k1 = mi * (h_start * psi);
    const Vector k2 = mi * (h_mid * (psi + 0.5 * h * k1));
    const Vector k3 = mi * (h_mid * (psi + 0.5 * h * k2));
    const Vector k4 = mi * (h_end * (psi + h * k3));
    psi += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    h_start = h_end;
    rec.max_norm_drift = std::max(rec.max_norm_drift, std::abs(psi.norm() - norm0));
    if (detail::should_record(config, n + 1)) snapshot(t_next);
  }
  if (rec.max_norm_drift > 1e-6) {
    throw AccuracyError("norm drift " + std::to_string(rec.max_norm_drift) + " exceeds 1e-6; increase n_steps",
                        rec.max_norm_drift);
  }
  return rec;
}

/// Integrates drho/dt = -i[H, rho] + sum_k (L_k rho L_k^dag - {L_k^dag L_k, rho} / 2).
inline TrajectoryRecord lindblad_evolve(const HamiltonianModel& model, const LindbladSet& lindblad,
                                        const DensityMatrix& initial, const EvolutionConfig& config) {
  config.validate();
  require_same_space(model.space(), initial.space());
  require_same_space(model.space(), lindblad.space);
  initial.validate(1e-6);

  const auto& space = model.space();
  std::vector<Matrix> jumps;
  for (const auto& c : lindblad.channels)
    if (c.rate > 0.0) jumps.push_back(std::sqrt(c.rate) * c.jump);
  std::vector<const Matrix*> ops = model.generators();
  for (const auto& j : jumps) ops.push_back(&j);

  auto gen = detail::restrict_model(model, closed_support(ops, support_of(initial.entries())));
  const auto& idx = gen.index;
  const int d = static_cast<int>(idx.size());
  std::vector<Matrix> l_r;
  Matrix decay = Matrix::Zero(d, d);
  for (const auto& j : jumps) {
    l_r.push_back(detail::restrict_to(j, idx));
    decay += l_r.back().adjoint() * l_r.back();
  }
  // H_eff = H - (i/2) sum L^dag L, so that drho = -i H_eff rho + h.c. + sum L rho L^dag.
  gen.static_part -= Complex(0.0, 0.5) * decay;

  Matrix rho = detail::restrict_to(initial.entries(), idx);
  const Complex trace0 = rho.trace();
  const Complex mi(0.0, -1.0);
  auto rhs = [&](const Matrix& heff, const Matrix& r) {
    Matrix a = mi * (heff * r);
    Matrix out = a + a.adjoint();
    for (const auto& l : l_r) out.noalias() += l * r * l.adjoint();
    return out;
  };

  TrajectoryRecord rec;
  rec.support = idx;
  rec.min_eigenvalue = 1.0;
  auto snapshot = [&](double t) {
    Matrix full = Matrix::Zero(space.dim(), space.dim());
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) full(idx[i], idx[j]) = rho(i, j);
    rec.times.push_back(t);
    rec.densities.emplace_back(space, std::move(full));
    const double lo = Eigen::SelfAdjointEigenSolver<Matrix>(rho, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    rec.min_eigenvalue = std::min(rec.min_eigenvalue, lo);
  };

  const double h = config.t_f / config.n_steps;
  Matrix h_start = gen.at(0.0);
  snapshot(0.0);
  for (int n = 0; n < config.n_steps; ++n) {
    const double t = detail::time_at(config, n);
    const double t_next = detail::time_at(config, n + 1);
    const Matrix h_mid = gen.at(t + 0.5 * h);
    const Matrix h_end = gen.at(t_next);
    const Matrix k1 = rhs(h_start, rho);
    const Matrix k2 = rhs(h_mid, rho + 0.5 * h * k1);
    const Matrix k3 = rhs(h_mid, rho + 0.5 * h * k2);
    const Matrix k4 = rhs(h_end, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    h_start = h_end;
    rec.max_norm_drift = std::max(rec.max_norm_drift, std::abs(rho.trace() - trace0));
    if (detail::should_record(config, n + 1)) snapshot(t_next);
  }
  if (rec.max_norm_drift > 1e-5) {
    throw AccuracyError("trace drift " + std::to_string(rec.max_norm_drift) + " exceeds 1e-5; increase n_steps",
                        rec.max_norm_drift);
  }
  if (rec.min_eigenvalue < -1e-6) {
    detail::report(rec, "density matrix eigenvalue " + std::to_string(rec.min_eigenvalue) + " below -1e-6");
  }
  return rec;
}

/// Population time series, one row per label.
inline std::vector<std::vector<double>> populations(const TrajectoryRecord& record,
                                                    const std::vector<BasisLabel>& labels) {
  std::vector<std::vector<double>> out;
  for (const auto& label : labels) {
    std::vector<double> series;
    series.reserve(record.size());
    for (std::size_t i = 0; i < record.size(); ++i) {
      series.push_back(record.is_open() ? record.densities[i].population(label) : record.states[i].population(label));
    }
    out.push_back(std::move(series));
  }
  return out;
}

/// ||psi(n) - psi(2n)|| for the final states.
inline double step_halving_change(const HamiltonianModel& model, const StateVector& initial,
                                  const EvolutionConfig& config) {
  EvolutionConfig coarse = config;
  coarse.record_every = 0;
  const auto a = schrodinger_evolve(model, initial, coarse).final_state();
  const auto b = schrodinger_evolve(model, initial, coarse.refined()).final_state();
  return (a.amplitudes() - b.amplitudes()).norm();
}

/// Max-entry distance between the final density matrices at n and 2n steps.
inline double step_halving_change(const HamiltonianModel& model, const LindbladSet& lindblad,
                                  const DensityMatrix& initial, const EvolutionConfig& config) {
  EvolutionConfig coarse = config;
  coarse.record_every = 0;
  const auto a = lindblad_evolve(model, lindblad, initial, coarse).final_density();
  const auto b = lindblad_evolve(model, lindblad, initial, coarse.refined()).final_density();
  return (a.entries() - b.entries()).cwiseAbs().maxCoeff();
}

/// A sweep cell failed; carries its grid coordinates.
class SweepError : public Error {
 public:
  SweepError(const std::string& what, double x, double y)
      : Error(what + " at (" + std::to_string(x) + ", " + std::to_string(y) + ")"), x_(x), y_(y) {}
  double x() const { return x_; }
  double y() const { return y_; }

 private:
  double x_, y_;
};

struct SweepCell {
  FidelityReport report;
  /// Empty when the cell succeeded.
  std::string error;
  bool ok() const { return error.empty(); }
};

/// Row-major grid: cells[iy * xs.size() + ix].
struct SweepGrid {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<SweepCell> cells;

  const SweepCell& at(std::size_t ix, std::size_t iy) const { return cells.at(iy * xs.size() + ix); }
  bool all_ok() const {
    return std::all_of(cells.begin(), cells.end(), [](const SweepCell& c) { return c.ok(); });
  }
  /// Throws SweepError for the first failed cell in row-major order.
  void rethrow_first() const {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!cells[i].ok()) throw SweepError(cells[i].error, xs[i % xs.size()], ys[i / xs.size()]);
    }
  }
};

enum class CellErrorPolicy { Propagate, Record };

inline int default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

namespace detail {

template <typename Job>
void run_parallel(std::size_t n_jobs, int workers, Job job) {
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < n_jobs; i = next++) job(i);
  };
  const int n = std::max(1, std::min<int>(workers, static_cast<int>(n_jobs)));
  std::vector<std::thread> pool;
  for (int w = 1; w < n; ++w) pool.emplace_back(loop);
  loop();
  for (auto& t : pool) t.join();
}

}  // namespace detail

/// Evaluates cell(x, y) on every grid point. Cells are independent; the
/// result does not depend on the worker count.
inline SweepGrid sweep_2d(const std::vector<double>& xs, const std::vector<double>& ys,
                          const std::function<FidelityReport(double, double)>& cell,
                          CellErrorPolicy policy = CellErrorPolicy::Propagate, int workers = default_workers()) {
  if (xs.empty() || ys.empty()) throw ParameterError("sweep grids must be non-empty");
  SweepGrid grid{xs, ys, std::vector<SweepCell>(xs.size() * ys.size())};
  detail::run_parallel(grid.cells.size(), workers, [&](std::size_t i) {
    try {
      grid.cells[i].report = cell(xs[i % xs.size()], ys[i / xs.size()]);
    } catch (const std::exception& e) {
      grid.cells[i].error = e.what();
    }
  });
  if (policy == CellErrorPolicy::Propagate) grid.rethrow_first();
  return grid;
}

/// Like sweep_2d when x is the time axis: row(y) evolves once and returns one
/// report per entry of xs.
inline SweepGrid sweep_rows(const std::vector<double>& xs, const std::vector<double>& ys,
                            const std::function<std::vector<FidelityReport>(double)>& row,
                            CellErrorPolicy policy = CellErrorPolicy::Propagate, int workers = default_workers()) {
  if (xs.empty() || ys.empty()) throw ParameterError("sweep grids must be non-empty");
  SweepGrid grid{xs, ys, std::vector<SweepCell>(xs.size() * ys.size())};
  detail::run_parallel(ys.size(), workers, [&](std::size_t iy) {
    try {
      auto reports = row(ys[iy]);
      if (reports.size() != xs.size()) throw ShapeError("row returned the wrong number of cells");
      for (std::size_t ix = 0; ix < xs.size(); ++ix) grid.cells[iy * xs.size() + ix].report = std::move(reports[ix]);
    } catch (const std::exception& e) {
      for (std::size_t ix = 0; ix < xs.size(); ++ix) grid.cells[iy * xs.size() + ix].error = e.what();
    }
  });
  if (policy == CellErrorPolicy::Propagate) grid.rethrow_first();
  return grid;
}

/// n evenly spaced values from lo to hi inclusive.
inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ParameterError("grid count must be >= 1");
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace stap
