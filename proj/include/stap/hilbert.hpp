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

// Composite Hilbert space of N five-level atoms and one truncated cavity mode.
//
// Basis ordering is fixed: atom 1 is the most significant base-5 digit and the
// photon number is the least significant digit, so
//   index(|l1 l2 ... lN>|n>_c) = ((l1*5 + l2)*5 + ... + lN) * (n_max+1) + n.
// CSV outputs depend on this ordering.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <string_view>
#include <vector>

#include "stap/errors.hpp"

namespace stap {

using Complex = std::complex<double>;
using Vector = Eigen::VectorXcd;
using Matrix = Eigen::MatrixXcd;

inline constexpr int kLevelsPerAtom = 5;

struct SpaceDescriptor {
  int n_atoms = 1;
  int photon_cutoff = 1;

  SpaceDescriptor() = default;
  SpaceDescriptor(int atoms, int cutoff) : n_atoms(atoms), photon_cutoff(cutoff) {
    if (atoms < 1) throw ParameterError("space needs at least one atom");
    if (cutoff < 0) throw ParameterError("photon cutoff must be non-negative");
    if (atoms > 6) throw ParameterError("more than 6 atoms exceeds dense-matrix scale");
  }

  static constexpr int levels_per_atom() { return kLevelsPerAtom; }
  int photon_states() const { return photon_cutoff + 1; }
  int atomic_dim() const {
    int d = 1;
    for (int k = 0; k < n_atoms; ++k) d *= kLevelsPerAtom;
    return d;
  }
  int dim() const { return atomic_dim() * photon_states(); }

  bool operator==(const SpaceDescriptor&) const = default;
};

struct BasisLabel {
  std::vector<int> atom_levels;
  int photons = 0;

  bool operator==(const BasisLabel&) const = default;
};

/// Formats as |12>|0>_c.
inline std::string to_string(const BasisLabel& label) {
  std::string s = "|";
  for (int l : label.atom_levels) s += static_cast<char>('0' + l);
  s += ">|" + std::to_string(label.photons) + ">_c";
  return s;
}

/// Parses "12", "12,1", "|12>" or "|12>|1>_c" into a label.
inline BasisLabel parse_label(std::string_view text) {
  BasisLabel label;
  std::size_t i = 0;
  auto skip = [&](char c) {
    if (i < text.size() && text[i] == c) ++i;
  };
  skip('|');
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
    label.atom_levels.push_back(text[i] - '0');
    ++i;
  }
  if (label.atom_levels.empty()) {
    throw ConfigError("cannot parse basis label '" + std::string(text) + "'");
  }
  skip('>');
  if (i < text.size() && (text[i] == ',' || text[i] == '|')) {
    ++i;
    int n = 0;
    bool any = false;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      n = n * 10 + (text[i] - '0');
      any = true;
      ++i;
    }
    if (!any) throw ConfigError("cannot parse photon number in '" + std::string(text) + "'");
    label.photons = n;
    skip('>');
    if (i < text.size() && text.substr(i) == "_c") i += 2;
  }
  if (i != text.size()) {
    throw ConfigError("trailing characters in basis label '" + std::string(text) + "'");
  }
  return label;
}

inline void check_label(const SpaceDescriptor& space, const BasisLabel& label) {
  if (static_cast<int>(label.atom_levels.size()) != space.n_atoms) {
    throw RangeError("label " + to_string(label) + " has wrong number of atoms");
  }
  for (int l : label.atom_levels) {
    if (l < 0 || l >= kLevelsPerAtom) {
      throw RangeError("atomic level out of range in " + to_string(label));
    }
  }
  if (label.photons < 0 || label.photons > space.photon_cutoff) {
    throw RangeError("photon number out of range in " + to_string(label));
  }
}

inline int flat_index(const SpaceDescriptor& space, const BasisLabel& label) {
  check_label(space, label);
  int idx = 0;
  for (int l : label.atom_levels) idx = idx * kLevelsPerAtom + l;
  return idx * space.photon_states() + label.photons;
}

inline BasisLabel label_at(const SpaceDescriptor& space, int index) {
  if (index < 0 || index >= space.dim()) throw RangeError("flat index out of range");
  BasisLabel label;
  label.photons = index % space.photon_states();
  int atomic = index / space.photon_states();
  label.atom_levels.assign(space.n_atoms, 0);
  for (int k = space.n_atoms - 1; k >= 0; --k) {
    label.atom_levels[k] = atomic % kLevelsPerAtom;
    atomic /= kLevelsPerAtom;
  }
  return label;
}

/// Level of atom `atom` in flat basis index `index`, without building a label.
inline int level_of(const SpaceDescriptor& space, int index, int atom) {
  int atomic = index / space.photon_states();
  for (int k = space.n_atoms - 1; k > atom; --k) atomic /= kLevelsPerAtom;
  return atomic % kLevelsPerAtom;
}

inline int photons_of(const SpaceDescriptor& space, int index) {
  return index % space.photon_states();
}

inline void require_same_space(const SpaceDescriptor& a, const SpaceDescriptor& b) {
  if (!(a == b)) throw ShapeError("operands belong to different spaces");
}

class StateVector {
 public:
  explicit StateVector(SpaceDescriptor space)
      : space_(space), amps_(Vector::Zero(space.dim())) {}
  StateVector(SpaceDescriptor space, Vector amplitudes)
      : space_(space), amps_(std::move(amplitudes)) {
    if (amps_.size() != space_.dim()) throw ShapeError("amplitude vector has wrong dimension");
  }

  const SpaceDescriptor& space() const { return space_; }
  const Vector& amplitudes() const { return amps_; }
  int dim() const { return static_cast<int>(amps_.size()); }

  Complex operator[](int index) const { return amps_(index); }
  Complex amplitude(const BasisLabel& label) const { return amps_(flat_index(space_, label)); }
  double population(const BasisLabel& label) const { return std::norm(amplitude(label)); }

  double norm() const { return amps_.norm(); }
  StateVector normalized() const {
    const double n = norm();
    if (n == 0.0) throw ParameterError("cannot normalize the zero vector");
    return StateVector(space_, amps_ / n);
  }

  StateVector operator+(const StateVector& o) const {
    require_same_space(space_, o.space_);
    return StateVector(space_, amps_ + o.amps_);
  }
  StateVector operator-(const StateVector& o) const {
    require_same_space(space_, o.space_);
    return StateVector(space_, amps_ - o.amps_);
  }
  friend StateVector operator*(Complex c, const StateVector& v) {
    return StateVector(v.space_, c * v.amps_);
  }

 private:
  SpaceDescriptor space_;
  Vector amps_;
};

class OperatorMatrix {
 public:
  explicit OperatorMatrix(SpaceDescriptor space)
      : space_(space), m_(Matrix::Zero(space.dim(), space.dim())) {}
  OperatorMatrix(SpaceDescriptor space, Matrix entries)
      : space_(space), m_(std::move(entries)) {
    if (m_.rows() != space_.dim() || m_.cols() != space_.dim()) {
      throw ShapeError("operator matrix has wrong dimension");
    }
  }

  const SpaceDescriptor& space() const { return space_; }
  const Matrix& entries() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

  OperatorMatrix adjoint() const { return OperatorMatrix(space_, m_.adjoint()); }

  /// max |M - M^dag| over all entries.
  double hermiticity_error() const { return (m_ - m_.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = 1e-12) const { return hermiticity_error() <= tol; }
  bool is_zero(double tol = 0.0) const { return m_.cwiseAbs().maxCoeff() <= tol; }

  OperatorMatrix operator+(const OperatorMatrix& o) const {
    require_same_space(space_, o.space_);
    return OperatorMatrix(space_, m_ + o.m_);
  }
  OperatorMatrix operator-(const OperatorMatrix& o) const {
    require_same_space(space_, o.space_);
    return OperatorMatrix(space_, m_ - o.m_);
  }
  OperatorMatrix operator*(const OperatorMatrix& o) const {
    require_same_space(space_, o.space_);
    return OperatorMatrix(space_, m_ * o.m_);
  }
  StateVector operator*(const StateVector& v) const {
    require_same_space(space_, v.space());
    return StateVector(space_, m_ * v.amplitudes());
  }
  friend OperatorMatrix operator*(Complex c, const OperatorMatrix& a) {
    return OperatorMatrix(a.space_, c * a.m_);
  }

 private:
  SpaceDescriptor space_;
  Matrix m_;
};

class DensityMatrix {
 public:
  DensityMatrix(SpaceDescriptor space, Matrix entries) : space_(space), rho_(std::move(entries)) {
    if (rho_.rows() != space_.dim() || rho_.cols() != space_.dim()) {
      throw ShapeError("density matrix has wrong dimension");
    }
  }

  static DensityMatrix pure(const StateVector& psi) {
    return DensityMatrix(psi.space(), psi.amplitudes() * psi.amplitudes().adjoint());
  }

  const SpaceDescriptor& space() const { return space_; }
  const Matrix& entries() const { return rho_; }
  int dim() const { return static_cast<int>(rho_.rows()); }

  Complex trace() const { return rho_.trace(); }
  double hermiticity_error() const { return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff(); }
  double min_eigenvalue() const {
    const Matrix herm = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Matrix> es(herm, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }
  double population(const BasisLabel& label) const {
    const int i = flat_index(space_, label);
    return rho_(i, i).real();
  }
  /// <psi|rho|psi>
  Complex expectation_in(const StateVector& psi) const {
    require_same_space(space_, psi.space());
    return psi.amplitudes().dot(rho_ * psi.amplitudes());
  }

  /// Throws if rho is not a density matrix within `tol`.
  void validate(double tol = 1e-8) const {
    if (hermiticity_error() > tol) throw ParameterError("density matrix is not Hermitian");
    if (std::abs(trace() - Complex(1.0)) > tol) throw ParameterError("density matrix trace is not 1");
    if (min_eigenvalue() < -tol) throw ParameterError("density matrix has a negative eigenvalue");
  }

 private:
  SpaceDescriptor space_;
  Matrix rho_;
};

inline StateVector ket(const SpaceDescriptor& space, const BasisLabel& label) {
  Vector amps = Vector::Zero(space.dim());
  amps(flat_index(space, label)) = 1.0;
  return StateVector(space, std::move(amps));
}

inline void check_atom_level(const SpaceDescriptor& space, int atom, int level) {
  if (atom < 0 || atom >= space.n_atoms) throw RangeError("atom index out of range");
  if (level < 0 || level >= kLevelsPerAtom) throw RangeError("atomic level out of range");
}

namespace detail {
inline int atom_stride(const SpaceDescriptor& space, int atom) {
  int stride = space.photon_states();
  for (int k = space.n_atoms - 1; k > atom; --k) stride *= kLevelsPerAtom;
  return stride;
}
}  // namespace detail

/// |upper><lower| on atom `atom` (0-based), identity on every other factor.
inline OperatorMatrix transition_op(const SpaceDescriptor& space, int atom, int upper, int lower) {
  check_atom_level(space, atom, upper);
  check_atom_level(space, atom, lower);
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  const int stride = detail::atom_stride(space, atom);
  for (int j = 0; j < space.dim(); ++j) {
    if (level_of(space, j, atom) != lower) continue;
    m(j + (upper - lower) * stride, j) = 1.0;
  }
  return OperatorMatrix(space, std::move(m));
}

/// Cavity annihilation operator a (identity on atoms).
inline OperatorMatrix annihilation_op(const SpaceDescriptor& space) {
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  for (int j = 0; j < space.dim(); ++j) {
    const int n = photons_of(space, j);
    if (n > 0) m(j - 1, j) = std::sqrt(static_cast<double>(n));
  }
  return OperatorMatrix(space, std::move(m));
}

/// a |3>_k<2|: maps |2, n+1> to sqrt(n+1) |3, n> on atom k. The Hermitian
/// conjugate is added by the Hamiltonian builder.
inline OperatorMatrix cavity_coupling_op(const SpaceDescriptor& space, int atom) {
  check_atom_level(space, atom, 0);
  if (space.photon_cutoff == 0) {
    warn("cavity_coupling_op with photon cutoff 0 is identically zero");
  }
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  const int stride = detail::atom_stride(space, atom);
  for (int j = 0; j < space.dim(); ++j) {
    if (level_of(space, j, atom) != 2) continue;
    const int n = photons_of(space, j);
    if (n == 0) continue;
    m(j + stride - 1, j) = std::sqrt(static_cast<double>(n));
  }
  return OperatorMatrix(space, std::move(m));
}

/// |level><level| on one atom.
inline OperatorMatrix level_projector(const SpaceDescriptor& space, int atom, int level) {
  return transition_op(space, atom, level, level);
}

inline OperatorMatrix photon_number_op(const SpaceDescriptor& space) {
  Matrix m = Matrix::Zero(space.dim(), space.dim());
  for (int j = 0; j < space.dim(); ++j) m(j, j) = photons_of(space, j);
  return OperatorMatrix(space, std::move(m));
}

inline OperatorMatrix identity_op(const SpaceDescriptor& space) {
  return OperatorMatrix(space, Matrix::Identity(space.dim(), space.dim()));
}

inline Complex inner_product(const StateVector& bra, const StateVector& ket_) {
  require_same_space(bra.space(), ket_.space());
  return bra.amplitudes().dot(ket_.amplitudes());
}

inline double norm(const StateVector& v) { return v.norm(); }

inline StateVector matrix_apply(const OperatorMatrix& op, const StateVector& v) { return op * v; }

/// <state|op|state>
inline Complex expectation(const OperatorMatrix& op, const StateVector& state) {
  require_same_space(op.space(), state.space());
  return state.amplitudes().dot(op.entries() * state.amplitudes());
}

/// AB - BA
inline OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  return a * b - b * a;
}

inline std::vector<BasisLabel> all_labels(const SpaceDescriptor& space) {
  std::vector<BasisLabel> out;
  out.reserve(space.dim());
  for (int i = 0; i < space.dim(); ++i) out.push_back(label_at(space, i));
  return out;
}

/// The 2^n labels with every atom in {0,1} and the cavity empty, ordered as
/// binary numbers with atom 1 most significant.
inline std::vector<BasisLabel> computational_basis(const SpaceDescriptor& space) {
  std::vector<BasisLabel> out;
  const int n = space.n_atoms;
  for (int bits = 0; bits < (1 << n); ++bits) {
    BasisLabel l;
    l.atom_levels.resize(n);
    for (int k = 0; k < n; ++k) l.atom_levels[k] = (bits >> (n - 1 - k)) & 1;
    out.push_back(std::move(l));
  }
  return out;
}

}  // namespace stap

namespace stap {

/// Smallest set of basis indices containing `seeds` and closed under the
/// nonzero pattern of every operator in `ops` (column j reaches row i when
/// op(i, j) != 0). Any evolution generated by these operators from a state
/// supported on `seeds` stays inside the returned set. Sorted ascending.
inline std::vector<int> closed_support(const std::vector<const Matrix*>& ops, const std::vector<int>& seeds) {
  if (ops.empty()) {
    std::vector<int> out = seeds;
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
  const int dim = static_cast<int>(ops.front()->rows());
  std::vector<char> in(dim, 0);
  std::vector<int> stack;
  for (int s : seeds) {
    if (!in[s]) {
      in[s] = 1;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const int j = stack.back();
    stack.pop_back();
    for (const Matrix* op : ops) {
      for (int i = 0; i < dim; ++i) {
        if (!in[i] && (*op)(i, j) != Complex(0.0)) {
          in[i] = 1;
          stack.push_back(i);
        }
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < dim; ++i)
    if (in[i]) out.push_back(i);
  return out;
}

/// Indices of the nonzero amplitudes of v.
inline std::vector<int> support_of(const Vector& v) {
  std::vector<int> out;
  for (int i = 0; i < v.size(); ++i)
    if (v(i) != Complex(0.0)) out.push_back(i);
  return out;
}

/// Indices of rows/columns of rho that carry any nonzero entry.
inline std::vector<int> support_of(const Matrix& rho) {
  std::vector<int> out;
  for (int i = 0; i < rho.rows(); ++i) {
    bool any = false;
    for (int j = 0; j < rho.cols() && !any; ++j) any = rho(i, j) != Complex(0.0) || rho(j, i) != Complex(0.0);
    if (any) out.push_back(i);
  }
  return out;
}

/// Sum over atoms of the projectors onto `counted_levels`, plus a^dag a.
inline OperatorMatrix excitation_number_op(const SpaceDescriptor& space, const std::vector<int>& counted_levels) {
  Matrix m = photon_number_op(space).entries();
  for (int k = 0; k < space.n_atoms; ++k)
    for (int l : counted_levels) m += level_projector(space, k, l).entries();
  return OperatorMatrix(space, std::move(m));
}

}  // namespace stap
