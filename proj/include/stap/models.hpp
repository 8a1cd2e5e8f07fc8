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

// Time-dependent cavity-QED Hamiltonians for the gate protocols, their
// quantum Zeno reduction and instantaneous dark states.
//
// Every model is H(t) = H_c + sum_k pulse_k(t) D_k with H_c the atom-cavity
// coupling g a |3>_k<2| + h.c. summed over the coupled atoms and D_k the
// Hermitian drive |u>_k<l| + h.c.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stap/hilbert.hpp"
#include "stap/invariant.hpp"

namespace stap {

/// Classical resonant drive |lower>_atom <-> |upper>_atom.
struct DriveSpec {
  int atom = 0;
  int lower = 1;
  int upper = 4;
  Pulse pulse;
};

/// Coupling g a|3>_atom<2| + h.c. to the single cavity mode.
struct CouplingSpec {
  int atom = 0;
  double g = 1.0;
};

/// A Hermitian operator multiplied by a real pulse.
struct HamiltonianTerm {
  Pulse pulse;
  Matrix matrix;
};

inline bool is_laser_transition(int lower, int upper) {
  return (lower == 1 && upper == 4) || (lower == 2 && upper == 4) || (lower == 1 && upper == 3) ||
         (lower == 0 && upper == 3);
}

class HamiltonianModel {
 public:
  HamiltonianModel(SpaceDescriptor space, std::vector<DriveSpec> drives, std::vector<CouplingSpec> couplings)
      : space_(space),
        drives_(std::move(drives)),
        couplings_(std::move(couplings)),
        static_(Matrix::Zero(space.dim(), space.dim())) {
    for (const auto& d : drives_) {
      check_atom_level(space_, d.atom, d.lower);
      check_atom_level(space_, d.atom, d.upper);
      if (!is_laser_transition(d.lower, d.upper)) {
        throw ParameterError("drive |" + std::to_string(d.lower) + "> -> |" + std::to_string(d.upper) +
                             "> is not a laser-driven transition");
      }
      const Matrix t = transition_op(space_, d.atom, d.upper, d.lower).entries();
      terms_.push_back({d.pulse, t + t.adjoint()});
    }
    for (const auto& c : couplings_) {
      const Matrix a = cavity_coupling_op(space_, c.atom).entries();
      static_ += c.g * (a + a.adjoint());
    }
  }

  /// A model given directly by its operator content (effective Hamiltonians).
  static HamiltonianModel from_terms(SpaceDescriptor space, Matrix static_part, std::vector<HamiltonianTerm> terms) {
    HamiltonianModel m(space, {}, {});
    if (static_part.rows() != space.dim() || static_part.cols() != space.dim()) {
      throw ShapeError("static part has wrong dimension");
    }
    for (const auto& t : terms) {
      if (t.matrix.rows() != space.dim() || t.matrix.cols() != space.dim()) {
        throw ShapeError("term matrix has wrong dimension");
      }
    }
    m.static_ = std::move(static_part);
    m.terms_ = std::move(terms);
    return m;
  }

  const SpaceDescriptor& space() const { return space_; }
  const std::vector<DriveSpec>& drives() const { return drives_; }
  const std::vector<CouplingSpec>& couplings() const { return couplings_; }
  const Matrix& static_part() const { return static_; }
  const std::vector<HamiltonianTerm>& terms() const { return terms_; }

  /// Fresh matrix H(t); safe to call concurrently.
  OperatorMatrix evaluate(double t) const {
    Matrix h = static_;
    for (const auto& term : terms_) h += term.pulse(t) * term.matrix;
    return OperatorMatrix(space_, std::move(h));
  }
  OperatorMatrix coupling_hamiltonian() const { return OperatorMatrix(space_, static_); }
  OperatorMatrix drive_hamiltonian(double t) const {
    Matrix h = Matrix::Zero(space_.dim(), space_.dim());
    for (const auto& term : terms_) h += term.pulse(t) * term.matrix;
    return OperatorMatrix(space_, std::move(h));
  }

  /// Every operator that can move amplitude, for support closure.
  std::vector<const Matrix*> generators() const {
    std::vector<const Matrix*> out{&static_};
    for (const auto& t : terms_) out.push_back(&t.matrix);
    return out;
  }

  /// Largest |pulse(t)| over [0, t_f] among the drives.
  double peak_drive(double t_f) const {
    double p = 0.0;
    for (const auto& t : terms_) p = std::max(p, t.pulse.peak(t_f));
    return p;
  }

 private:
  SpaceDescriptor space_;
  std::vector<DriveSpec> drives_;
  std::vector<CouplingSpec> couplings_;
  Matrix static_;
  std::vector<HamiltonianTerm> terms_;
};

inline std::vector<CouplingSpec> couple_all_atoms(const SpaceDescriptor& space, double g) {
  std::vector<CouplingSpec> out;
  for (int k = 0; k < space.n_atoms; ++k) out.push_back({k, g});
  return out;
}

/// Omega1 (|4><1| + h.c.) + Omega2 (|4><2| + h.c.) on a single atom; the
/// cavity is not coupled.
inline HamiltonianModel one_qubit_hamiltonian(const PulsePair& pulses, SpaceDescriptor space = SpaceDescriptor(1, 0)) {
  if (space.n_atoms != 1) throw ParameterError("one-qubit Hamiltonian needs a single-atom space");
  return HamiltonianModel(space, {{0, 1, 4, pulses.omega1}, {0, 2, 4, pulses.omega2}}, {});
}

/// Single-atom |1>-|4>-|2> transfer inside a multi-atom cavity: the drives
/// act on `atom` only, every atom stays coupled to the cavity.
inline HamiltonianModel transfer_step_hamiltonian(const SpaceDescriptor& space, int atom, const PulsePair& pulses,
                                                  double g = 1.0) {
  return HamiltonianModel(space, {{atom, 1, 4, pulses.omega1}, {atom, 2, 4, pulses.omega2}},
                          space.photon_cutoff > 0 ? couple_all_atoms(space, g) : std::vector<CouplingSpec>{});
}

/// Drives |lower> -> |3> on each listed atom plus cavity coupling on every atom.
inline HamiltonianModel cavity_drive_hamiltonian(const SpaceDescriptor& space, std::vector<DriveSpec> drives,
                                                 double g = 1.0) {
  if (space.photon_cutoff < 1) throw ParameterError("cavity-mediated steps need photon cutoff >= 1");
  return HamiltonianModel(space, std::move(drives), couple_all_atoms(space, g));
}

/// pulse_a |3>_a<lower| + pulse_b |3>_b<lower| + g a sum_k |3>_k<2| + h.c.
inline HamiltonianModel pair_step_hamiltonian(const SpaceDescriptor& space, int atom_a, int atom_b,
                                              const Pulse& pulse_a, const Pulse& pulse_b, int driven_lower_level,
                                              double g = 1.0) {
  if (atom_a == atom_b) throw ParameterError("pair step needs two distinct atoms");
  if (driven_lower_level != 0 && driven_lower_level != 1) {
    throw ParameterError("pair step drives |0> or |1> to |3>");
  }
  return cavity_drive_hamiltonian(
      space, {{atom_a, driven_lower_level, 3, pulse_a}, {atom_b, driven_lower_level, 3, pulse_b}}, g);
}

/// True when the basis state has an atom in |3> or |4> or a photon.
inline bool is_excited_index(const SpaceDescriptor& space, int index) {
  if (photons_of(space, index) > 0) return true;
  for (int k = 0; k < space.n_atoms; ++k) {
    const int l = level_of(space, index, k);
    if (l == 3 || l == 4) return true;
  }
  return false;
}

/// Quantum Zeno reduction on the sector reachable from one basis state.
struct ZenoReduction {
  SpaceDescriptor space;
  /// Basis states of the reachable sector, in flat-index order.
  std::vector<BasisLabel> sector;
  std::vector<StateVector> subspace_basis;
  /// Orthonormal basis of the zero eigenspace of the coupling on the sector,
  /// Gram-Schmidt in flat-index order.
  std::vector<StateVector> zero_basis;
  /// zero_basis members carrying excitation (atomic |3>,|4> or photons).
  std::vector<StateVector> bright_states;
  /// zero_basis members in the unexcited ground manifold.
  std::vector<StateVector> slow_states;
  /// Projected drives in zero_basis coordinates.
  std::vector<HamiltonianTerm> effective_terms;
  bool frozen = false;
  std::string diagnostic;

  /// First bright state (|mu>); zero vector when there is none.
  StateVector bright_state() const {
    return bright_states.empty() ? StateVector(space) : bright_states.front();
  }

  Matrix effective_hamiltonian(double t) const {
    const int k = static_cast<int>(zero_basis.size());
    Matrix h = Matrix::Zero(k, k);
    for (const auto& term : effective_terms) h += term.pulse(t) * term.matrix;
    return h;
  }

  /// <a| H_eff(t) |b> for two states of the full space.
  Complex effective_element(const StateVector& a, const StateVector& b, double t) const {
    const int k = static_cast<int>(zero_basis.size());
    Vector ca(k), cb(k);
    for (int i = 0; i < k; ++i) {
      ca(i) = inner_product(zero_basis[i], a);
      cb(i) = inner_product(zero_basis[i], b);
    }
    return ca.dot(effective_hamiltonian(t) * cb);
  }
};

namespace detail {

inline Matrix restrict_to(const Matrix& m, const std::vector<int>& idx) {
  const int n = static_cast<int>(idx.size());
  Matrix r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = m(idx[i], idx[j]);
  return r;
}

/// Orthonormal basis of the kernel of the Hermitian matrix h, obtained by
/// projecting unit vectors e_0, e_1, ... onto the kernel and applying
/// Gram-Schmidt in that order.
inline std::vector<Vector> ordered_kernel_basis(const Matrix& h, double tol) {
  const int n = static_cast<int>(h.rows());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  std::vector<int> zero_cols;
  for (int i = 0; i < n; ++i)
    if (std::abs(es.eigenvalues()(i)) <= tol) zero_cols.push_back(i);
  Matrix v0(n, static_cast<int>(zero_cols.size()));
  for (int c = 0; c < static_cast<int>(zero_cols.size()); ++c) v0.col(c) = es.eigenvectors().col(zero_cols[c]);
  const Matrix projector = v0 * v0.adjoint();

  std::vector<Vector> basis;
  for (int i = 0; i < n && basis.size() < zero_cols.size(); ++i) {
    Vector v = projector.col(i);
    for (const auto& b : basis) v -= b.dot(v) * b;
    for (const auto& b : basis) v -= b.dot(v) * b;
    const double nv = v.norm();
    if (nv > 1e-8) basis.push_back(v / nv);
  }
  return basis;
}

}  // namespace detail

/// Basis states reachable from `initial` under every operator of the model.
inline std::vector<int> reachable_sector(const HamiltonianModel& model, const BasisLabel& initial) {
  return closed_support(model.generators(), {flat_index(model.space(), initial)});
}

inline ZenoReduction zeno_reduce(const HamiltonianModel& model, const BasisLabel& initial) {
  const auto& space = model.space();
  const auto sector = reachable_sector(model, initial);
  const int n = static_cast<int>(sector.size());

  ZenoReduction z;
  z.space = space;
  for (int idx : sector) {
    z.sector.push_back(label_at(space, idx));
    z.subspace_basis.push_back(ket(space, z.sector.back()));
  }

  const Matrix hc = detail::restrict_to(model.static_part(), sector);
  const double scale = std::max(1.0, hc.cwiseAbs().maxCoeff());
  const auto kernel = detail::ordered_kernel_basis(hc, 1e-9 * scale);

  Matrix v0(n, static_cast<int>(kernel.size()));
  for (int c = 0; c < static_cast<int>(kernel.size()); ++c) {
    v0.col(c) = kernel[c];
    Vector full = Vector::Zero(space.dim());
    bool excited = false;
    for (int i = 0; i < n; ++i) {
      full(sector[i]) = kernel[c](i);
      if (std::abs(kernel[c](i)) > 1e-12 && is_excited_index(space, sector[i])) excited = true;
    }
    z.zero_basis.emplace_back(space, full);
    (excited ? z.bright_states : z.slow_states).push_back(z.zero_basis.back());
  }

  double largest = 0.0;
  for (const auto& term : model.terms()) {
    Matrix projected = v0.adjoint() * detail::restrict_to(term.matrix, sector) * v0;
    largest = std::max(largest, projected.cwiseAbs().maxCoeff());
    z.effective_terms.push_back({term.pulse, std::move(projected)});
  }
  if (largest <= 1e-12) {
    z.frozen = true;
    z.diagnostic = z.bright_states.empty()
                       ? "no excited zero mode in the reachable sector; effective Hamiltonian vanishes"
                       : "drives do not connect the zero modes; effective Hamiltonian vanishes";
    for (auto& t : z.effective_terms) t.matrix.setZero();
  }
  return z;
}

/// Zeno-limit model on the full space: every drive projected onto the kernel
/// of the cavity coupling, P0 D_k P0, with the coupling itself dropped.
inline HamiltonianModel zeno_effective_model(const HamiltonianModel& model) {
  const Matrix& hc = model.static_part();
  const double scale = std::max(1.0, hc.cwiseAbs().maxCoeff());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hc);
  const int dim = static_cast<int>(hc.rows());
  Matrix projector = Matrix::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (std::abs(es.eigenvalues()(i)) <= 1e-9 * scale) {
      projector += es.eigenvectors().col(i) * es.eigenvectors().col(i).adjoint();
    }
  }
  // Clean numerical dust so support closure sees the true sparsity.
  projector = projector.unaryExpr([](Complex c) { return std::abs(c) < 1e-13 ? Complex(0.0) : c; });
  std::vector<HamiltonianTerm> terms;
  for (const auto& t : model.terms()) {
    Matrix p = projector * t.matrix * projector;
    p = p.unaryExpr([](Complex c) { return std::abs(c) < 1e-13 ? Complex(0.0) : c; });
    terms.push_back({t.pulse, std::move(p)});
  }
  return HamiltonianModel::from_terms(model.space(), Matrix::Zero(dim, dim), std::move(terms));
}

/// Normalized zero-energy eigenvector of H(t) on the sector reachable from
/// `initial`, with maximal overlap with `initial` and real positive phase.
inline StateVector dark_state(const HamiltonianModel& model, const BasisLabel& initial, double t) {
  const auto& space = model.space();
  const auto sector = reachable_sector(model, initial);
  const Matrix h = detail::restrict_to(model.evaluate(t).entries(), sector);
  const double scale = h.cwiseAbs().maxCoeff();
  if (scale == 0.0) throw ParameterError("dark state is undefined when both coupling and drive vanish");
  const auto kernel = detail::ordered_kernel_basis(h, 1e-10 * std::max(1.0, scale));

  const int start = flat_index(space, initial);
  const int pos = static_cast<int>(std::find(sector.begin(), sector.end(), start) - sector.begin());
  Vector v = Vector::Zero(static_cast<int>(sector.size()));
  for (const auto& k : kernel) v += std::conj(k(pos)) * k;
  const double nv = v.norm();
  if (nv < 1e-12) throw ParameterError("initial state has no overlap with the dark subspace");
  v /= nv;
  v *= std::polar(1.0, -std::arg(v(pos)));

  Vector full = Vector::Zero(space.dim());
  for (int i = 0; i < static_cast<int>(sector.size()); ++i) full(sector[i]) = v(i);
  return StateVector(space, full);
}

}  // namespace stap
