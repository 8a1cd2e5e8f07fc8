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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stap/dynamics.hpp"

namespace {

using namespace stap;
using std::numbers::pi;

const double kAsinQuarter = std::asin(0.25);
const SpaceDescriptor kOne(1, 0);

BasisLabel L(const char* s) { return parse_label(s); }

PulsePair full(double eps, double t_f) { return pulses_from_trajectory(AuxiliaryTrajectory::full_sweep(eps, t_f)); }

StateVector evolve_one_qubit(double eps, double t_f, int steps = 20000) {
  return schrodinger_evolve(one_qubit_hamiltonian(full(eps, t_f)), ket(kOne, L("1")), {t_f, steps, 0}).final_state();
}

TEST(Config, Validation) {
  EXPECT_THROW((EvolutionConfig{0.0, 10, 0}.validate()), ParameterError);
  EXPECT_THROW((EvolutionConfig{1.0, 0, 0}.validate()), ParameterError);
  const auto c = EvolutionConfig::with_snapshots(10.0, 300);
  EXPECT_GE(c.n_steps, 20000);
  EXPECT_EQ(c.n_steps % 300, 0);
  EXPECT_EQ(c.n_steps / c.record_every, 300);
}

TEST(Schrodinger, ZeroHamiltonianKeepsState) {
  const auto m = one_qubit_hamiltonian(PulsePair{Pulse::zero(), Pulse::zero(), 5.0});
  const auto psi = Complex(1.0 / std::sqrt(2.0)) * (ket(kOne, L("1")) + ket(kOne, L("2")));
  const auto rec = schrodinger_evolve(m, psi, {5.0, 100, 10});
  EXPECT_EQ(rec.size(), 11u);
  EXPECT_LT((rec.final_state().amplitudes() - psi.amplitudes()).norm(), 1e-15);
}

TEST(Schrodinger, ExactEpsilonGivesMinusOne) {
  const auto psi = evolve_one_qubit(kAsinQuarter, 10.0);
  EXPECT_NEAR(std::abs(psi[1] + 1.0), 0.0, 1e-4);
}

TEST(Schrodinger, MatchesClosedFormAndOracle) {
  for (double eps : {0.25, 0.4, 0.9}) {
    const auto psi = evolve_one_qubit(eps, 10.0);
    const auto cf = oracle::one_qubit_closed_form(eps);
    EXPECT_NEAR(std::abs(psi[1] - cf.a1), 0.0, 1e-6) << eps;
    EXPECT_NEAR(std::abs(psi[2] - cf.a2), 0.0, 1e-6) << eps;
    EXPECT_NEAR(std::abs(psi[4] - cf.a4), 0.0, 1e-6) << eps;

    const double rate = pi / 10.0;
    const oracle::Vec ref = oracle::propagate(
        [&](double t) {
          return oracle::hamiltonian(1, 0, {{0, 1, 4, oracle::omega1(eps, rate, t)}, {0, 2, 4, oracle::omega2(eps, rate, t)}},
                                     0.0, false);
        },
        ket(kOne, L("1")).amplitudes(), 10.0, 2000);
    EXPECT_LT((psi.amplitudes() - ref).norm(), 1e-6);
  }
}

TEST(Schrodinger, PaperEpsilonFinalAmplitudes) {
  const auto psi = evolve_one_qubit(0.25, 10.0);
  EXPECT_NEAR(psi[1].real(), -0.999469, 1e-6);
  EXPECT_NEAR(psi[2].real(), -0.0325284, 1e-6);
  EXPECT_NEAR(psi[4].imag(), -0.00208095, 1e-7);
}

TEST(Schrodinger, PairStepMatchesOracle) {
  const SpaceDescriptor s(2, 1);
  const double t_f = 20.0 * std::numbers::sqrt2;
  const auto p = full(0.25, t_f);
  const auto m = pair_step_hamiltonian(s, 0, 1, p.omega1, p.omega2, 1);
  const auto psi = schrodinger_evolve(m, ket(s, L("12")), {t_f, 20000, 0}).final_state();
  const oracle::Vec ref = oracle::propagate(
      [&](double t) { return oracle::hamiltonian(2, 1, {{0, 1, 3, p.omega1(t)}, {1, 1, 3, p.omega2(t)}}, 1.0, true); },
      ket(s, L("12")).amplitudes(), t_f, 3000);
  EXPECT_LT((psi.amplitudes() - ref).norm(), 1e-6);
  EXPECT_NEAR(psi.amplitude(L("12")).real(), -0.78426184190, 1e-7);
}

TEST(Schrodinger, RestrictsToReachableSupport) {
  const SpaceDescriptor s(2, 1);
  const auto p = full(0.25, 20.0);
  const auto rec = schrodinger_evolve(pair_step_hamiltonian(s, 0, 1, p.omega1, p.omega2, 1), ket(s, L("12")),
                                      {20.0, 2000, 0});
  EXPECT_EQ(rec.support.size(), 5u);
}

TEST(Schrodinger, NormAndStepHalving) {
  const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
  const auto rec = schrodinger_evolve(m, ket(kOne, L("1")), {10.0, 20000, 100});
  EXPECT_LT(rec.max_norm_drift, 1e-9);
  for (std::size_t i = 0; i < rec.size(); ++i) {
    double sum = 0.0;
    for (const auto& l : all_labels(kOne)) sum += rec.states[i].population(l);
    ASSERT_NEAR(sum, 1.0, 1e-9);
  }
  EXPECT_LT(step_halving_change(m, ket(kOne, L("1")), {10.0, 20000, 0}), 1e-8);
}

TEST(Schrodinger, Deterministic) {
  const auto a = evolve_one_qubit(0.3, 10.0, 5000);
  const auto b = evolve_one_qubit(0.3, 10.0, 5000);
  EXPECT_EQ(a.amplitudes(), b.amplitudes());
}

TEST(Schrodinger, FinalStateIndependentOfDuration) {
  const auto ref = evolve_one_qubit(0.25, 10.0);
  for (double t_f : {5.0, 20.0, 50.0}) {
    const auto psi = evolve_one_qubit(0.25, t_f);
    EXPECT_LT((psi.amplitudes() - ref.amplitudes()).norm(), 1e-6) << t_f;
  }
}

TEST(Schrodinger, RejectsUnnormalizedInput) {
  const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
  EXPECT_THROW(schrodinger_evolve(m, Complex(2.0) * ket(kOne, L("1")), {10.0, 100, 0}), ParameterError);
}

TEST(Schrodinger, TooCoarseGridRaisesAccuracyError) {
  const auto m = one_qubit_hamiltonian(full(0.05, 10.0));
  EXPECT_THROW(schrodinger_evolve(m, ket(kOne, L("1")), {10.0, 20, 0}), AccuracyError);
}

TEST(Lindblad, ZeroRatesReproduceSchrodinger) {
  const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
  const EvolutionConfig c = EvolutionConfig::with_snapshots(10.0, 50);
  const auto closed = schrodinger_evolve(m, ket(kOne, L("1")), c);
  const auto open = lindblad_evolve(m, atomic_decay_set(kOne, 0, 0.0), DensityMatrix::pure(ket(kOne, L("1"))), c);
  ASSERT_EQ(closed.size(), open.size());
  EXPECT_TRUE(open.states.empty());
  for (std::size_t i = 0; i < closed.size(); ++i) {
    const Matrix pure = closed.states[i].amplitudes() * closed.states[i].amplitudes().adjoint();
    ASSERT_LT((open.densities[i].entries() - pure).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(Lindblad, DecaySignConvention) {
  const auto m = one_qubit_hamiltonian(PulsePair{Pulse::zero(), Pulse::zero(), 3.0});
  const double gamma = 0.4;
  const auto rec = lindblad_evolve(m, atomic_decay_set(kOne, 0, gamma), DensityMatrix::pure(ket(kOne, L("4"))),
                                   {3.0, 3000, 0});
  const auto& rho = rec.final_density();
  const double left = std::exp(-gamma * 3.0);
  EXPECT_NEAR(rho.population(L("4")), left, 1e-10);
  EXPECT_NEAR(rho.population(L("1")), (1 - left) / 2, 1e-10);
  EXPECT_NEAR(rho.population(L("2")), (1 - left) / 2, 1e-10);
}

TEST(Lindblad, CavityLossSignConvention) {
  const SpaceDescriptor s(1, 1);
  const auto m = cavity_drive_hamiltonian(s, {{0, 1, 3, Pulse::zero()}}, 0.0);
  const auto rec = lindblad_evolve(m, cavity_decay_set(s, 0.5, 0.0, {0}), DensityMatrix::pure(ket(s, L("2,1"))),
                                   {2.0, 2000, 0});
  EXPECT_NEAR(rec.final_density().population(L("2,1")), std::exp(-1.0), 1e-10);
  EXPECT_NEAR(rec.final_density().population(L("2,0")), 1 - std::exp(-1.0), 1e-10);
}

TEST(Lindblad, MatchesLiouvillianOracle) {
  const double gamma = 0.1, t_f = 10.0, eps = 0.25, rate = pi / t_f;
  const auto m = one_qubit_hamiltonian(full(eps, t_f));
  const auto set = atomic_decay_set(kOne, 0, gamma);
  const auto rec = lindblad_evolve(m, set, DensityMatrix::pure(ket(kOne, L("1"))), {t_f, 20000, 0});
  std::vector<oracle::Mat> jumps;
  for (const auto& c : set.channels) jumps.push_back(std::sqrt(c.rate) * c.jump);
  const oracle::Mat rho0 = DensityMatrix::pure(ket(kOne, L("1"))).entries();
  const oracle::Mat ref = oracle::propagate_density(
      [&](double t) {
        return oracle::hamiltonian(1, 0, {{0, 1, 4, oracle::omega1(eps, rate, t)}, {0, 2, 4, oracle::omega2(eps, rate, t)}},
                                   0.0, false);
      },
      jumps, rho0, t_f, 400);
  EXPECT_LT((rec.final_density().entries() - ref).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Lindblad, FrozenDecayCurve) {
  const std::vector<std::pair<double, double>> expected{{0.0, 0.9989376},  {0.001, 0.9984436}, {0.01, 0.9940597},
                                                        {0.02, 0.9893174}, {0.05, 0.9758653},  {0.1, 0.9558139}};
  const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
  for (auto [gamma, f] : expected) {
    const auto rec = lindblad_evolve(m, atomic_decay_set(kOne, 0, gamma), DensityMatrix::pure(ket(kOne, L("1"))),
                                     {10.0, 20000, 0});
    EXPECT_NEAR(fidelity(rec.final_density(), ket(kOne, L("1"))).population, f, 1e-7) << gamma;
  }
}

TEST(Lindblad, TracePositivityAndStepHalving) {
  const SpaceDescriptor s(2, 1);
  const double t_f = 20.0 * std::numbers::sqrt2;
  const auto p = full(0.25, t_f);
  const auto m = pair_step_hamiltonian(s, 0, 1, p.omega1, p.omega2, 1);
  const auto set = cavity_decay_set(s, 0.05, 0.02, {0, 1});
  const auto rho0 = DensityMatrix::pure(ket(s, L("12")));
  const auto rec = lindblad_evolve(m, set, rho0, EvolutionConfig::with_snapshots(t_f, 20));
  EXPECT_TRUE(rec.is_open());
  EXPECT_EQ(rec.support.size(), 6u);
  EXPECT_LT(rec.max_norm_drift, 1e-9);
  EXPECT_GT(rec.min_eigenvalue, -1e-9);
  for (const auto& rho : rec.densities) {
    ASSERT_NEAR(rho.entries().trace().real(), 1.0, 1e-9);
    ASSERT_LT(rho.hermiticity_error(), 1e-14);
  }
  EXPECT_LT(step_halving_change(m, set, rho0, {t_f, 20000, 0}), 1e-8);
}

TEST(Fidelity, Definitions) {
  const auto t = ket(kOne, L("1"));
  const auto psi = Complex(-0.6) * t + Complex(0.0, 0.8) * ket(kOne, L("2"));
  const auto f = fidelity(psi, t, "x");
  EXPECT_NEAR(f.overlap, -0.6, 1e-15);
  EXPECT_NEAR(f.population, 0.36, 1e-15);
  EXPECT_EQ(f.target, "x");
  const auto fr = fidelity(DensityMatrix::pure(psi), t);
  EXPECT_NEAR(fr.population, 0.36, 1e-15);
  EXPECT_NEAR(fr.overlap, 0.36, 1e-15);
}

TEST(Populations, SeriesPerLabel) {
  const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
  const auto rec = schrodinger_evolve(m, ket(kOne, L("1")), EvolutionConfig::with_snapshots(10.0, 10));
  const auto pops = populations(rec, {L("1"), L("2"), L("4")});
  ASSERT_EQ(pops.size(), 3u);
  ASSERT_EQ(pops[0].size(), 11u);
  EXPECT_NEAR(pops[0][0], 1.0, 1e-15);
  for (std::size_t i = 0; i < pops[0].size(); ++i) ASSERT_NEAR(pops[0][i] + pops[1][i] + pops[2][i], 1.0, 1e-9);
}

TEST(Sweep, SingleCellEqualsDirectRun) {
  const auto g = sweep_2d({0.25}, {10.0}, [](double e, double t_f) {
    return fidelity(evolve_one_qubit(e, t_f), ket(kOne, L("1")));
  });
  EXPECT_EQ(g.at(0, 0).report.population, std::norm(evolve_one_qubit(0.25, 10.0)[1]));
}

TEST(Sweep, IndependentOfWorkerCount) {
  const auto xs = linspace(0.2, 0.8, 4), ys = linspace(5.0, 15.0, 3);
  auto cell = [](double e, double t_f) { return fidelity(evolve_one_qubit(e, t_f, 4000), ket(kOne, L("1"))); };
  const auto a = sweep_2d(xs, ys, cell, CellErrorPolicy::Propagate, 1);
  const auto b = sweep_2d(xs, ys, cell, CellErrorPolicy::Propagate, 5);
  ASSERT_EQ(a.cells.size(), 12u);
  for (std::size_t i = 0; i < a.cells.size(); ++i) ASSERT_EQ(a.cells[i].report.population, b.cells[i].report.population);
  EXPECT_EQ(a.at(1, 2).report.population, cell(xs[1], ys[2]).population);
}

TEST(Sweep, ErrorCarriesCoordinates) {
  auto cell = [](double x, double y) -> FidelityReport {
    if (x > 1.5 && y > 0.5) throw ParameterError("bad cell");
    return {x, y, {}};
  };
  try {
    sweep_2d({1.0, 2.0}, {0.0, 1.0}, cell);
    FAIL() << "expected SweepError";
  } catch (const SweepError& e) {
    EXPECT_EQ(e.x(), 2.0);
    EXPECT_EQ(e.y(), 1.0);
  }
  const auto g = sweep_2d({1.0, 2.0}, {0.0, 1.0}, cell, CellErrorPolicy::Record);
  EXPECT_FALSE(g.all_ok());
  EXPECT_FALSE(g.at(1, 1).ok());
  EXPECT_TRUE(g.at(0, 1).ok());
}

TEST(Sweep, RowsMatchTimeSeries) {
  const auto xs = linspace(0.0, 10.0, 11);
  const auto g = sweep_rows(xs, {0.0, 0.05}, [&](double gamma) {
    const auto m = one_qubit_hamiltonian(full(0.25, 10.0));
    const auto rec = lindblad_evolve(m, atomic_decay_set(kOne, 0, gamma), DensityMatrix::pure(ket(kOne, L("1"))),
                                     EvolutionConfig::with_snapshots(10.0, 10));
    std::vector<FidelityReport> out;
    for (const auto& rho : rec.densities) out.push_back(fidelity(rho, ket(kOne, L("1"))));
    return out;
  });
  EXPECT_NEAR(g.at(10, 0).report.population, 0.9989376, 1e-7);
  EXPECT_NEAR(g.at(10, 1).report.population, 0.9758653, 1e-7);
  EXPECT_THROW(sweep_rows(xs, {0.0}, [](double) { return std::vector<FidelityReport>(2); }), SweepError);
}

TEST(Linspace, Endpoints) {
  const auto v = linspace(0.1, 1.0, 30);
  EXPECT_EQ(v.front(), 0.1);
  EXPECT_EQ(v.back(), 1.0);
  EXPECT_THROW(linspace(0, 1, 0), ParameterError);
}

}  // namespace
