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

// Lewis-Riesenfeld invariant machinery for the three-level SU(2) problem
//
//   H(t) = Omega1(t) |4><1| + Omega2(t) |4><2| + h.c.
//
// with invariant
//
//   I(t) = chi ( cos g sin b |4><1| + cos g cos b |4><2| + i sin g |2><1| ) + h.c.
//
// parameterised by the auxiliary angles g (held constant at epsilon) and b
// (an affine sweep). Units: hbar = 1, frequencies in units of the cavity
// coupling g0, times in units of 1/g0.

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "stap/hilbert.hpp"

namespace stap {

/// Closed-form pulse amplitude * sin(beta(t)) or amplitude * cos(beta(t)),
/// with beta(t) = beta_start + beta_rate * t.
struct Pulse {
  enum class Shape { Sine, Cosine };

  Shape shape = Shape::Sine;
  double amplitude = 0.0;
  double beta_start = 0.0;
  double beta_rate = 0.0;

  double operator()(double t) const {
    const double b = beta_start + beta_rate * t;
    return amplitude * (shape == Shape::Sine ? std::sin(b) : std::cos(b));
  }

  static Pulse constant(double value) { return Pulse{Shape::Cosine, value, 0.0, 0.0}; }
  static Pulse zero() { return constant(0.0); }

  Pulse scaled(double factor) const {
    Pulse p = *this;
    p.amplitude *= factor;
    return p;
  }

  /// max |pulse(t)| for t in [0, t_f].
  double peak(double t_f) const {
    const double b0 = beta_start;
    const double b1 = beta_start + beta_rate * t_f;
    const double lo = std::min(b0, b1);
    const double hi = std::max(b0, b1);
    // extrema of |sin| at pi/2 + k pi, of |cos| at k pi
    const double offset = shape == Shape::Sine ? std::numbers::pi / 2 : 0.0;
    const double k = std::ceil((lo - offset) / std::numbers::pi);
    if (offset + k * std::numbers::pi <= hi) return std::abs(amplitude);
    return std::max(std::abs((*this)(0.0)), std::abs((*this)(t_f)));
  }
};

/// Drive schedule on the |1>-|4> (omega1) and |2>-|4> (omega2) transitions.
struct PulsePair {
  Pulse omega1;
  Pulse omega2;
  double t_f = 0.0;

  /// Exchanges the roles of the two pulses; used for reverse transfers.
  PulsePair swapped() const { return PulsePair{omega2, omega1, t_f}; }
  double peak() const { return std::max(omega1.peak(t_f), omega2.peak(t_f)); }
};

/// gamma(t) = epsilon, beta(t) affine from beta_start to beta_end over [0, t_f].
struct AuxiliaryTrajectory {
  double epsilon = 0.25;
  double beta_start = 0.0;
  double beta_end = std::numbers::pi;
  double t_f = 10.0;
  double chi = 1.0;

  static AuxiliaryTrajectory full_sweep(double epsilon, double t_f, double chi = 1.0) {
    return {epsilon, 0.0, std::numbers::pi, t_f, chi};
  }
  static AuxiliaryTrajectory half_sweep(double epsilon, double t_f, double chi = 1.0) {
    return {epsilon, 0.0, std::numbers::pi / 2, t_f, chi};
  }

  double delta_beta() const { return beta_end - beta_start; }
  double beta_rate() const { return delta_beta() / t_f; }
  double beta(double t) const { return beta_start + beta_rate() * t; }
  double gamma(double) const { return epsilon; }
  double gamma_rate() const { return 0.0; }

  void validate() const {
    if (!(epsilon > 0.0 && epsilon < std::numbers::pi / 2)) {
      throw ParameterError("epsilon must lie in (0, pi/2)");
    }
    if (!(t_f > 0.0)) throw ParameterError("t_f must be positive");
    if (chi == 0.0) throw ParameterError("chi must be nonzero");
  }
};

struct LRPhaseResult {
  double alpha_plus = 0.0;
  double alpha_minus = 0.0;
  double alpha_zero = 0.0;
  int grid_points = 0;
  /// |alpha(n) - alpha(2n-1)| of the final Richardson check.
  double step_halving_change = 0.0;
};

/// Omega1 = b' cot g sin b + g' cos b,  Omega2 = b' cot g cos b - g' sin b.
inline std::pair<double, double> synthesize_pulse_values(double gamma, double gamma_rate, double beta,
                                                         double beta_rate) {
  const double cot = 1.0 / std::tan(gamma);
  return {beta_rate * cot * std::sin(beta) + gamma_rate * std::cos(beta),
          beta_rate * cot * std::cos(beta) - gamma_rate * std::sin(beta)};
}

inline PulsePair pulses_from_trajectory(const AuxiliaryTrajectory& traj) {
  traj.validate();
  const double amp = traj.beta_rate() / std::tan(traj.epsilon);
  return PulsePair{Pulse{Pulse::Shape::Sine, amp, traj.beta_start, traj.beta_rate()},
                   Pulse{Pulse::Shape::Cosine, amp, traj.beta_start, traj.beta_rate()}, traj.t_f};
}

namespace detail {

inline const SpaceDescriptor& single_atom_space() {
  static const SpaceDescriptor s(1, 0);
  return s;
}

inline Matrix sym(const OperatorMatrix& a) { return a.entries() + a.entries().adjoint(); }

struct InvariantParts {
  Matrix s41, s42, j21;  // |4><1|+h.c., |4><2|+h.c., i(|2><1| - |1><2|)
};

inline const InvariantParts& invariant_parts() {
  static const InvariantParts parts = [] {
    const auto& sp = single_atom_space();
    const Matrix t21 = transition_op(sp, 0, 2, 1).entries();
    return InvariantParts{sym(transition_op(sp, 0, 4, 1)), sym(transition_op(sp, 0, 4, 2)),
                          Complex(0, 1) * (t21 - t21.adjoint())};
  }();
  return parts;
}

inline Matrix invariant_entries(double gamma, double beta, double chi) {
  const auto& p = invariant_parts();
  return chi * (std::cos(gamma) * std::sin(beta) * p.s41 + std::cos(gamma) * std::cos(beta) * p.s42 +
                std::sin(gamma) * p.j21);
}

inline Matrix invariant_time_derivative(double gamma, double gamma_rate, double beta, double beta_rate,
                                        double chi) {
  const auto& p = invariant_parts();
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  const double cb = std::cos(beta), sb = std::sin(beta);
  return chi * (beta_rate * (cg * cb * p.s41 - cg * sb * p.s42) +
                gamma_rate * (-sg * sb * p.s41 - sg * cb * p.s42 + cg * p.j21));
}

inline Matrix one_atom_hamiltonian(double omega1, double omega2) {
  const auto& p = invariant_parts();
  return omega1 * p.s41 + omega2 * p.s42;
}

// Eigenvectors of I/chi in the order (0, +, -) and their derivatives with
// respect to beta (d/dgamma is unused while gamma is constant).
struct Eigenbasis {
  Vector v[3];
  Vector dv_dbeta[3];
};

inline Eigenbasis eigenbasis(double gamma, double beta) {
  const Complex i(0, 1);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double r = 1.0 / std::sqrt(2.0);
  Eigenbasis e;
  for (int n = 0; n < 3; ++n) {
    e.v[n] = Vector::Zero(kLevelsPerAtom);
    e.dv_dbeta[n] = Vector::Zero(kLevelsPerAtom);
  }
  e.v[0](1) = cg * cb;
  e.v[0](4) = -i * sg;
  e.v[0](2) = -cg * sb;
  e.dv_dbeta[0](1) = -cg * sb;
  e.dv_dbeta[0](2) = -cg * cb;
  for (int n = 1; n <= 2; ++n) {
    const double s = n == 1 ? 1.0 : -1.0;
    e.v[n](1) = r * (sg * cb + s * i * sb);
    e.v[n](4) = r * i * cg;
    e.v[n](2) = -r * (sg * sb - s * i * cb);
    e.dv_dbeta[n](1) = r * (-sg * sb + s * i * cb);
    e.dv_dbeta[n](2) = -r * (sg * cb + s * i * sb);
  }
  return e;
}

inline double simpson(const auto& f, double a, double b, int points) {
  const int intervals = points - 1;
  const double h = (b - a) / intervals;
  double sum = f(a) + f(b);
  for (int k = 1; k < intervals; ++k) sum += (k % 2 ? 4.0 : 2.0) * f(a + k * h);
  return sum * h / 3.0;
}

}  // namespace detail

/// The invariant on a single-atom space (levels |0>..|4>, no cavity).
inline OperatorMatrix invariant_matrix(const AuxiliaryTrajectory& traj, double t) {
  traj.validate();
  return OperatorMatrix(detail::single_atom_space(),
                        detail::invariant_entries(traj.gamma(t), traj.beta(t), traj.chi));
}

/// max-entry norm of i dI/dt - [H, I] for drive values omega1, omega2 at t.
inline double invariant_residual(const AuxiliaryTrajectory& traj, double omega1, double omega2, double t) {
  traj.validate();
  const Matrix inv = detail::invariant_entries(traj.gamma(t), traj.beta(t), traj.chi);
  const Matrix dinv = detail::invariant_time_derivative(traj.gamma(t), traj.gamma_rate(), traj.beta(t),
                                                        traj.beta_rate(), traj.chi);
  const Matrix h = detail::one_atom_hamiltonian(omega1, omega2);
  return (Complex(0, 1) * dinv - (h * inv - inv * h)).cwiseAbs().maxCoeff();
}

inline double invariant_residual(const AuxiliaryTrajectory& traj, const PulsePair& pulses, double t) {
  return invariant_residual(traj, pulses.omega1(t), pulses.omega2(t), t);
}

struct InvariantEigenstates {
  StateVector zero;
  StateVector plus;
  StateVector minus;
};

/// Eigenvectors of I(t) with eigenvalues 0, +chi, -chi.
inline InvariantEigenstates invariant_eigenstates(const AuxiliaryTrajectory& traj, double t) {
  traj.validate();
  const auto e = detail::eigenbasis(traj.gamma(t), traj.beta(t));
  const auto& sp = detail::single_atom_space();
  return {StateVector(sp, e.v[0]), StateVector(sp, e.v[1]), StateVector(sp, e.v[2])};
}

struct QuadratureOptions {
  int min_points = 2001;
  int max_points = 1 << 20;
  double tolerance = 1e-8;
};

/// alpha_n = integral over [0, t_f] of <Phi_n| i d/dt - H |Phi_n>, composite
/// Simpson with a step-halving check.
inline LRPhaseResult lr_phase_quadrature(const AuxiliaryTrajectory& traj, const PulsePair& pulses,
                                         const QuadratureOptions& opts = {}) {
  traj.validate();
  auto integrand = [&](int n) {
    return [&, n](double t) {
      const auto e = detail::eigenbasis(traj.gamma(t), traj.beta(t));
      const Vector dphi = traj.beta_rate() * e.dv_dbeta[n];
      const Matrix h = detail::one_atom_hamiltonian(pulses.omega1(t), pulses.omega2(t));
      const Complex val = e.v[n].dot(Complex(0, 1) * dphi - h * e.v[n]);
      return val.real();
    };
  };

  LRPhaseResult result;
  int points = opts.min_points | 1;
  double alpha[3];
  for (int n = 0; n < 3; ++n) alpha[n] = detail::simpson(integrand(n), 0.0, traj.t_f, points);
  while (true) {
    const int finer = 2 * points - 1;
    double refined[3];
    double change = 0.0;
    for (int n = 0; n < 3; ++n) {
      refined[n] = detail::simpson(integrand(n), 0.0, traj.t_f, finer);
      change = std::max(change, std::abs(refined[n] - alpha[n]));
    }
    std::copy(refined, refined + 3, alpha);
    points = finer;
    result.step_halving_change = change;
    if (change <= opts.tolerance) break;
    if (2 * points - 1 > opts.max_points) {
      throw AccuracyError("LR phase quadrature did not converge", change);
    }
  }
  result.alpha_zero = alpha[0];
  result.alpha_plus = alpha[1];
  result.alpha_minus = alpha[2];
  result.grid_points = points;
  return result;
}

/// Final state of the one-qubit gate from |1> after a full sweep:
///   (-cos^2 e - sin^2 e cos a)|1> + i sin e cos e (cos a - 1)|4> - sin e sin a |2>
/// with a = pi / sin e.
inline StateVector closed_form_final_state(const AuxiliaryTrajectory& traj) {
  traj.validate();
  if (std::abs(traj.delta_beta() - std::numbers::pi) > 1e-12 || traj.beta_start != 0.0) {
    throw ParameterError("closed-form final state only exists for the full sweep 0 -> pi");
  }
  const double e = traj.epsilon;
  const double a = std::numbers::pi / std::sin(e);
  const double c = std::cos(e), s = std::sin(e);
  Vector v = Vector::Zero(kLevelsPerAtom);
  v(1) = -c * c - s * s * std::cos(a);
  v(4) = Complex(0, s * c * (std::cos(a) - 1.0));
  v(2) = -s * std::sin(a);
  return StateVector(detail::single_atom_space(), v);
}

/// epsilon such that the (possibly Zeno-scaled) SU(2) problem accumulates
/// |alpha| = delta_beta / sin(eps_eff) = 2 N pi. Drives scaled by
/// 1/zeno_scale map cot(eps) to cot(eps)/zeno_scale.
inline double epsilon_for_phase_condition(double delta_beta, int n, double zeno_scale = 1.0) {
  if (n < 1) throw ParameterError("N must be a positive integer");
  if (!(delta_beta > 0.0)) throw ParameterError("delta_beta must be positive");
  if (!(zeno_scale >= 1.0)) throw ParameterError("zeno_scale must be >= 1");
  const double ratio = delta_beta / (2.0 * n * std::numbers::pi);
  if (ratio >= 1.0) throw ParameterError("no epsilon satisfies the phase condition");
  const double effective = std::asin(ratio);
  return std::atan(std::tan(effective) / zeno_scale);
}

}  // namespace stap
