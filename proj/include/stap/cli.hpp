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

// Command layer behind the `stap` executable: run configuration, CSV output
// and the pulse / evolve / gate / sweep / figure commands.

#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "stap/dynamics.hpp"
#include "stap/gates.hpp"
#include "stap/hilbert.hpp"
#include "stap/invariant.hpp"
#include "stap/models.hpp"

namespace stap::cli {

inline constexpr std::string_view kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kConfigError = 1, kAccuracyError = 2, kThresholdViolation = 3 };

/// Output file could not be written.
class IoError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Run configuration

/// Flat key = value settings. Lookups record the value actually used
/// (including defaults) for the provenance header.
class RunConfig {
 public:
  /// Lines of `key = value`; `#` starts a comment.
  static RunConfig parse(std::string_view text, const std::string& source = "<string>") {
    RunConfig cfg;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const std::size_t end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError(source + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const auto key = trim(line.substr(0, eq));
      const auto value = trim(line.substr(eq + 1));
      if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
      cfg.values_[std::string(key)] = std::string(value);
      if (end == text.size()) break;
    }
    return cfg;
  }

  static RunConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  /// `key=value` override, as given on the command line.
  void set_assignment(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw ConfigError("expected key=value, got '" + std::string(assignment) + "'");
    set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void set_default(const std::string& key, const std::string& value) { values_.try_emplace(key, value); }
  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key, double fallback) const {
    double v = fallback;
    if (auto it = values_.find(key); it != values_.end()) v = parse_number(key, it->second);
    record(key, format_number(v));
    return v;
  }

  int integer(const std::string& key, int fallback) const {
    const double v = number(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError(key + " must be an integer");
    return static_cast<int>(v);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    std::string v = fallback;
    if (auto it = values_.find(key); it != values_.end()) v = it->second;
    record(key, v);
    return v;
  }

  bool flag(const std::string& key, bool fallback) const {
    const std::string v = text(key, fallback ? "true" : "false");
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + " must be true or false");
  }

  /// Records a derived value (such as a computed epsilon) for provenance.
  void note(const std::string& key, const std::string& value) const { record(key, value); }

  /// Adopts the resolved values of a derived copy, except `skip`.
  void absorb(const RunConfig& other, const std::vector<std::string>& skip = {}) const {
    for (const auto& [k, v] : other.resolved_) {
      if (std::find(skip.begin(), skip.end(), k) == skip.end()) resolved_[k] = v;
    }
  }

  /// Every key given but never read is an error.
  void reject_unused() const {
    for (const auto& [k, v] : values_) {
      if (!resolved_.count(k)) throw ConfigError("unknown or unused config key '" + k + "'");
    }
  }

  const std::map<std::string, std::string>& resolved() const { return resolved_; }

  static std::string format_number(double v) {
    std::ostringstream ss;
    ss << std::setprecision(12) << v;
    return ss.str();
  }

 private:
  static std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static double parse_number(const std::string& key, const std::string& text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) throw ConfigError("config key '" + key + "' is not a number: " + text);
    return v;
  }

  void record(const std::string& key, const std::string& value) const { resolved_[key] = value; }

  std::map<std::string, std::string> values_;
  mutable std::map<std::string, std::string> resolved_;
};

// ---------------------------------------------------------------------------
// CSV

inline std::string csv_escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n\r") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) {
    if (row.size() != columns.size()) throw ShapeError("CSV row width does not match the header");
    rows.push_back(std::move(row));
  }
  void add_numbers(const std::vector<double>& values) {
    std::vector<std::string> row;
    for (double v : values) row.push_back(RunConfig::format_number(v));
    add(std::move(row));
  }

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return static_cast<int>(i);
    throw ConfigError("no column " + name);
  }
  double number(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }

  std::string body() const {
    std::ostringstream ss;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) ss << (i ? "," : "") << csv_escape(cells[i]);
      ss << "\r\n";
    };
    line(columns);
    for (const auto& r : rows) line(r);
    return ss.str();
  }
};

struct Provenance {
  std::string command;
  std::map<std::string, std::string> parameters;
  std::vector<std::string> notes;
  bool timestamp = true;

  std::string header() const {
    std::ostringstream ss;
    ss << "# stap " << kVersion << "\n# command: " << command << "\n";
    for (const auto& [k, v] : parameters) ss << "# " << k << " = " << v << "\n";
    for (const auto& n : notes) ss << "# " << n << "\n";
    if (timestamp) {
      const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
      std::tm tm{};
      gmtime_r(&now, &tm);
      ss << "# generated: " << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ") << "\n";
    }
    return ss.str();
  }
};

/// Writes via a temporary sibling file and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Commands

struct CliOptions {
  std::string out;
  bool timestamp = true;
  bool exact_epsilon = false;
  std::optional<double> threshold;
};

struct CommandResult {
  CsvTable table;
  /// Human-readable report (gate command); empty otherwise.
  std::string report;
  std::vector<std::string> notes;
  int exit_code = kOk;
};

namespace detail {

inline std::string column_name(const BasisLabel& l) {
  std::string s = "P_";
  for (int v : l.atom_levels) s += std::to_string(v);
  if (l.photons > 0) s += "_c" + std::to_string(l.photons);
  return s;
}

inline std::vector<BasisLabel> parse_label_list(const std::string& text) {
  std::vector<BasisLabel> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    out.push_back(parse_label(item.substr(b, item.find_last_not_of(' ') - b + 1)));
  }
  if (out.empty()) throw ConfigError("empty label list");
  return out;
}

inline std::vector<int> parse_atom_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stoi(item) - 1);
    } catch (const std::exception&) {
      throw ConfigError("bad atom list '" + text + "'");
    }
  }
  return out;
}

inline bool half_sweep(const RunConfig& cfg, const std::string& fallback) {
  const auto s = cfg.text("sweep", fallback);
  if (s == "half") return true;
  if (s == "full") return false;
  throw ConfigError("sweep must be 'full' or 'half'");
}

/// epsilon from the config, or from the phase condition in exact mode.
inline double resolve_epsilon(const RunConfig& cfg, const CliOptions& opt, bool half, bool zeno) {
  if (opt.exact_epsilon || cfg.flag("exact_epsilon", false)) {
    const int n = cfg.integer("N", half ? 1 : 2);
    const double e = epsilon_for_phase_condition(half ? std::numbers::pi / 2 : std::numbers::pi, n,
                                                 zeno ? std::numbers::sqrt2 : 1.0);
    cfg.note("epsilon", RunConfig::format_number(e));
    return e;
  }
  return cfg.number("epsilon", 0.25);
}

/// A single-step model named in the config, with its decay channels.
struct NamedModel {
  HamiltonianModel model;
  std::optional<LindbladSet> lindblad;
  double t_f;
  BasisLabel initial;
  BasisLabel target_label;
  StateVector target;
  std::string target_name;
};

inline NamedModel build_named_model(const RunConfig& cfg, const CliOptions& opt) {
  const std::string name = cfg.text("model", "one_qubit");
  const double g = cfg.number("g", 1.0);
  if (!(g > 0.0)) throw ConfigError("g must be positive");
  const double t_f = cfg.number("tf_over_g", name == "pair" ? 20.0 * std::numbers::sqrt2 : 10.0) / g;
  const double gamma = cfg.number("gamma", 0.0);
  const double kappa = cfg.number("kappa", 0.0);
  const bool open = cfg.flag("open", false) || gamma > 0.0 || kappa > 0.0;

  std::optional<HamiltonianModel> model;
  std::optional<LindbladSet> lindblad;
  std::string default_initial;
  if (name == "one_qubit") {
    const bool half = half_sweep(cfg, "full");
    const double eps = resolve_epsilon(cfg, opt, half, false);
    const SpaceDescriptor space(1, cfg.integer("photon_cutoff", 0));
    auto p = pulses_from_trajectory(half ? AuxiliaryTrajectory::half_sweep(eps, t_f)
                                         : AuxiliaryTrajectory::full_sweep(eps, t_f));
    model.emplace(one_qubit_hamiltonian(p, space));
    if (kappa > 0.0) throw ConfigError("kappa needs a cavity model");
    if (open) lindblad = atomic_decay_set(space, 0, gamma);
    default_initial = "1";
  } else if (name == "transfer" || name == "reverse_transfer") {
    const bool half = half_sweep(cfg, "half");
    const double eps = resolve_epsilon(cfg, opt, half, false);
    const SpaceDescriptor space(cfg.integer("atoms", 2), cfg.integer("photon_cutoff", 1));
    const int atom = cfg.integer("atom", space.n_atoms) - 1;
    auto p = pulses_from_trajectory(half ? AuxiliaryTrajectory::half_sweep(eps, t_f)
                                         : AuxiliaryTrajectory::full_sweep(eps, t_f));
    if (name == "reverse_transfer") p = p.swapped();
    model.emplace(transfer_step_hamiltonian(space, atom, p, g));
    if (open) {
      LindbladSet set = atomic_decay_set(space, atom, gamma);
      if (space.photon_cutoff > 0) set.add("kappa a", kappa, annihilation_op(space));
      lindblad = std::move(set);
    }
    default_initial = std::string(space.n_atoms - 1, '0') + (name == "transfer" ? "1" : "2");
  } else if (name == "pair") {
    const bool half = half_sweep(cfg, "full");
    const double eps = resolve_epsilon(cfg, opt, half, true);
    const SpaceDescriptor space(cfg.integer("atoms", 2), cfg.integer("photon_cutoff", 1));
    const auto driven = parse_atom_list(cfg.text("driven_atoms", "1,2"));
    if (driven.size() != 2) throw ConfigError("driven_atoms must name two atoms");
    const int lower = cfg.integer("lower_level", 1);
    auto p = pulses_from_trajectory(half ? AuxiliaryTrajectory::half_sweep(eps, t_f)
                                         : AuxiliaryTrajectory::full_sweep(eps, t_f));
    model.emplace(pair_step_hamiltonian(space, driven[0], driven[1], p.omega1, p.omega2, lower, g));
    if (open) {
      std::vector<int> all;
      for (int k = 0; k < space.n_atoms; ++k) all.push_back(k);
      lindblad = cavity_decay_set(space, kappa, gamma, all);
    }
    default_initial = "12";
  } else {
    throw ConfigError("unknown model '" + name + "' (one_qubit, transfer, reverse_transfer, pair)");
  }

  const auto& space = model->space();
  const BasisLabel initial = parse_label(cfg.text("initial", default_initial));
  check_label(space, initial);
  const BasisLabel target_label = parse_label(cfg.text("target", to_string(initial)));
  check_label(space, target_label);
  const double sign = cfg.number("target_sign", -1.0);
  if (sign != 1.0 && sign != -1.0) throw ConfigError("target_sign must be 1 or -1");
  StateVector target = Complex(sign) * ket(space, target_label);
  std::string target_name = (sign < 0 ? "-" : "") + to_string(target_label);
  return {std::move(*model), std::move(lindblad), t_f, initial, target_label, std::move(target), std::move(target_name)};
}

inline int threshold_code(const std::optional<double>& threshold, double achieved) {
  return threshold && achieved < *threshold ? kThresholdViolation : kOk;
}

}  // namespace detail

/// t, omega1, omega2 [, omega1_full, omega2_full] in units of g.
inline CommandResult cmd_pulse(const RunConfig& cfg, const CliOptions& opt) {
  const bool half = detail::half_sweep(cfg, "full");
  const double eps = detail::resolve_epsilon(cfg, opt, half, false);
  const double g = cfg.number("g", 1.0);
  if (!(g > 0.0)) throw ConfigError("g must be positive");
  const double t_f = cfg.number("tf_over_g", 10.0) / g;
  const int rows = cfg.integer("rows", 1001);
  if (rows < 2) throw ConfigError("rows must be >= 2");
  const bool with_full = cfg.flag("with_full_sweep", false);

  const auto p = pulses_from_trajectory(half ? AuxiliaryTrajectory::half_sweep(eps, t_f)
                                             : AuxiliaryTrajectory::full_sweep(eps, t_f));
  const auto full = pulses_from_trajectory(AuxiliaryTrajectory::full_sweep(eps, t_f));
  CommandResult r;
  r.table.columns = {"t", "omega1", "omega2"};
  if (with_full) {
    r.table.columns.push_back("omega1_full");
    r.table.columns.push_back("omega2_full");
  }
  for (int i = 0; i < rows; ++i) {
    const double t = i == rows - 1 ? t_f : t_f * i / (rows - 1);
    std::vector<double> row{g * t, p.omega1(t) / g, p.omega2(t) / g};
    if (with_full) {
      row.push_back(full.omega1(t) / g);
      row.push_back(full.omega2(t) / g);
    }
    r.table.add_numbers(row);
  }
  return r;
}

/// Population time series of one model, with fidelity against the target.
inline CommandResult cmd_evolve(const RunConfig& cfg, const CliOptions& opt) {
  auto nm = detail::build_named_model(cfg, opt);
  const auto& space = nm.model.space();
  const int rows = cfg.integer("rows", 1001);
  if (rows < 2) throw ConfigError("rows must be >= 2");
  const int n_steps = cfg.integer("n_steps", 20000);
  auto labels = detail::parse_label_list(cfg.text("labels", to_string(nm.initial)));
  for (const auto& l : labels) check_label(space, l);

  const auto config = EvolutionConfig::with_snapshots(nm.t_f, rows - 1, n_steps);
  TrajectoryRecord rec =
      nm.lindblad ? lindblad_evolve(nm.model, *nm.lindblad, DensityMatrix::pure(ket(space, nm.initial)), config)
                  : schrodinger_evolve(nm.model, ket(space, nm.initial), config);
  const auto pops = populations(rec, labels);
  const double g = cfg.number("g", 1.0);

  CommandResult r;
  r.table.columns = {"t"};
  for (const auto& l : labels) r.table.columns.push_back(detail::column_name(l));
  r.table.columns.push_back("fidelity_overlap");
  r.table.columns.push_back("fidelity_population");
  if (!rec.is_open()) r.table.columns.push_back("target_phase");
  double last = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i) {
    std::vector<double> row{g * rec.times[i]};
    for (const auto& p : pops) row.push_back(p[i]);
    FidelityReport f = rec.is_open() ? fidelity(rec.densities[i], nm.target) : fidelity(rec.states[i], nm.target);
    row.push_back(f.overlap);
    row.push_back(f.population);
    if (!rec.is_open()) row.push_back(std::arg(rec.states[i].amplitude(nm.target_label)));
    r.table.add_numbers(row);
    last = f.population;
  }
  r.notes.push_back("target: " + nm.target_name);
  if (!rec.is_open()) {
    r.notes.push_back("target_phase: arg of the amplitude on the target basis state");
  }
  r.notes.push_back("max norm or trace drift: " + RunConfig::format_number(rec.max_norm_drift));
  for (const auto& w : rec.warnings) r.notes.push_back("warning: " + w);
  r.exit_code = detail::threshold_code(opt.threshold, last);
  return r;
}

inline GatePlan plan_from_config(const RunConfig& cfg, const CliOptions& opt, std::string& description) {
  const std::string protocol = cfg.text("protocol", "two_qubit");
  const bool exact = opt.exact_epsilon || cfg.flag("exact_epsilon", false);
  description = protocol + (exact ? " (exact epsilon)" : " (paper epsilon)");
  ProtocolParameters p = exact ? ProtocolParameters::exact() : ProtocolParameters::paper();
  p.g = cfg.number("g", p.g);
  if (!(p.g > 0.0)) throw ConfigError("g must be positive");
  p.photon_cutoff = cfg.integer("photon_cutoff", p.photon_cutoff);
  if (!exact) {
    const double eps = cfg.number("epsilon", 0.25);
    p.eps_transfer = p.eps_pair = p.eps_imprint = eps;
  }
  p.eps_transfer = cfg.number("epsilon_transfer", p.eps_transfer);
  p.eps_pair = cfg.number("epsilon_pair", p.eps_pair);
  p.eps_imprint = cfg.number("epsilon_imprint", p.eps_imprint);
  p.t_transfer = cfg.number("tf_transfer_over_g", p.t_transfer) / p.g;
  p.t_pair = cfg.number("tf_pair_over_g", p.t_pair) / p.g;
  p.t_imprint = cfg.number("tf_imprint_over_g", p.t_imprint) / p.g;

  if (protocol == "one_qubit") {
    const double eps = exact ? epsilon_for_phase_condition(std::numbers::pi, cfg.integer("N", 2))
                             : cfg.number("epsilon", 0.25);
    cfg.note("epsilon", RunConfig::format_number(eps));
    return one_qubit_phase_plan(eps, cfg.number("tf_over_g", 10.0) / p.g);
  }
  if (protocol == "two_qubit") return two_qubit_cz_plan(p);
  if (protocol == "three_qubit") return three_qubit_ccz_plan(p);
  if (protocol.rfind("multiqubit:", 0) == 0) {
    int n = 0;
    const auto digits = std::string_view(protocol).substr(11);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc() || ptr != digits.data() + digits.size()) throw ConfigError("bad protocol " + protocol);
    return multiqubit_plan(n, p);
  }
  throw ConfigError("unknown protocol '" + protocol + "' (one_qubit, two_qubit, three_qubit, multiqubit:n)");
}

/// Executes a protocol; the CSV holds the realized matrix, the report the
/// per-state table.
inline CommandResult cmd_gate(const RunConfig& cfg, const CliOptions& opt) {
  std::string description;
  const GatePlan plan = plan_from_config(cfg, opt, description);
  ExecutionOptions ex;
  ex.use_effective = cfg.flag("use_effective", false);
  ex.n_steps = cfg.integer("n_steps", 20000);
  const std::string policy = cfg.text("leakage", "flag");
  if (policy == "strict") {
    ex.leakage_policy = LeakagePolicy::Strict;
  } else if (policy != "flag") {
    throw ConfigError("leakage must be 'flag' or 'strict'");
  }
  const double gamma = cfg.number("gamma", 0.0);
  const double kappa = cfg.number("kappa", 0.0);
  if (gamma > 0.0 || kappa > 0.0) {
    if (plan.n_qubits == 1) {
      if (kappa > 0.0) throw ConfigError("kappa needs a cavity protocol");
      ex.lindblad = atomic_decay_set(plan.space, 0, gamma);
    } else {
      std::vector<int> all;
      for (int k = 0; k < plan.space.n_atoms; ++k) all.push_back(k);
      ex.lindblad = cavity_decay_set(plan.space, kappa, gamma, all);
    }
  }
  const double threshold = opt.threshold.value_or(cfg.number("threshold", 0.99));
  cfg.note("threshold", RunConfig::format_number(threshold));

  const GateReport rep = execute_plan(plan, ex);
  CommandResult r;
  r.table.columns = {"input", "output", "re", "im", "ideal"};
  const int n = static_cast<int>(rep.basis.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      r.table.add({to_string(rep.basis[i]), to_string(rep.basis[j]), RunConfig::format_number(rep.realized(j, i).real()),
                   RunConfig::format_number(rep.realized(j, i).imag()), RunConfig::format_number(rep.ideal(j, i).real())});
    }
  }

  std::ostringstream ss;
  ss << std::setprecision(12);
  ss << "protocol: " << description << "\n";
  ss << "gate_fidelity: " << rep.gate_fidelity << "\n";
  ss << "threshold: " << threshold << "\n";
  ss << "open_system: " << (rep.open_system ? "yes" : "no") << "\n";
  ss << "steps:\n";
  for (std::size_t s = 0; s < plan.steps.size(); ++s) {
    ss << "  " << s + 1 << ". " << plan.steps[s].description << " (epsilon " << plan.steps[s].epsilon
       << ", duration " << plan.steps[s].duration() << ")\n";
  }
  ss << "per_state:\n  input population overlap phase leakage\n";
  for (int i = 0; i < n; ++i) {
    ss << "  " << to_string(rep.basis[i]) << ' ' << rep.per_state[i].population << ' ' << rep.per_state[i].overlap
       << ' ' << (rep.open_system ? std::nan("") : rep.phases[i]) << ' ' << rep.leakage[i] << "\n";
  }
  ss << "boundary_flags:\n";
  for (const auto& b : rep.boundaries) {
    if (!b.flagged) continue;
    ss << "  step " << b.step + 1 << "." << b.segment + 1 << " input " << b.input << ": photon "
       << b.photon_population << ", excited " << b.excited_population << "\n";
  }
  for (const auto& w : rep.warnings) ss << "warning: " << w << "\n";
  r.report = ss.str();
  r.notes.push_back("gate_fidelity: " + RunConfig::format_number(rep.gate_fidelity));
  r.exit_code = rep.gate_fidelity >= threshold ? kOk : kThresholdViolation;
  return r;
}

/// Fidelity grids: epsilon_tf, gamma_time, kappa_time, gamma_time_pair.
inline CommandResult cmd_sweep(const RunConfig& cfg, const CliOptions& opt) {
  const std::string kind = cfg.text("sweep_kind", "epsilon_tf");
  const int nx = cfg.integer("grid.x.count", 30);
  const int ny = cfg.integer("grid.y.count", 30);
  const int n_steps = cfg.integer("n_steps", 20000);
  const int workers = cfg.has("workers") ? cfg.integer("workers", 1) : default_workers();
  if (nx < 1 || ny < 1) throw ConfigError("grid counts must be >= 1");

  SweepGrid grid;
  std::string x_name, y_name;
  bool x_is_time = false;
  if (kind == "epsilon_tf") {
    x_name = "epsilon";
    y_name = "tf_over_g";
    const auto xs = linspace(cfg.number("grid.x.min", 0.1), cfg.number("grid.x.max", 1.0), nx);
    const auto ys = linspace(cfg.number("grid.y.min", 5.0), cfg.number("grid.y.max", 50.0), ny);
    const auto target = Complex(-1.0) * ket(SpaceDescriptor(1, 0), parse_label("1"));
    grid = sweep_2d(
        xs, ys,
        [&](double eps, double tf) {
          const auto m = one_qubit_hamiltonian(pulses_from_trajectory(AuxiliaryTrajectory::full_sweep(eps, tf)));
          const auto rec = schrodinger_evolve(m, ket(m.space(), parse_label("1")), {tf, n_steps, 0});
          return fidelity(rec.final_state(), target, "-|1>");
        },
        CellErrorPolicy::Record, workers);
  } else if (kind == "gamma_time" || kind == "kappa_time" || kind == "gamma_time_pair") {
    x_is_time = true;
    x_name = "t";
    const bool pair = kind != "gamma_time";
    y_name = kind == "kappa_time" ? "kappa" : "gamma";
    RunConfig base = cfg;
    base.set("model", pair ? "pair" : "one_qubit");
    base.set("open", "true");
    const double t_f = detail::build_named_model(base, opt).t_f;
    cfg.absorb(base, {y_name});
    const auto ys = linspace(cfg.number("grid.y.min", 0.0), cfg.number("grid.y.max", 0.1), ny);
    std::vector<double> xs = linspace(0.0, t_f, nx);
    const double fixed_gamma = pair ? cfg.number("gamma", 0.0) : 0.0;
    const double fixed_kappa = pair ? cfg.number("kappa", 0.0) : 0.0;
    grid = sweep_rows(
        xs, ys,
        [&](double y) {
          RunConfig c = base;
          c.set("gamma", RunConfig::format_number(kind == "kappa_time" ? fixed_gamma : y));
          c.set("kappa", RunConfig::format_number(kind == "kappa_time" ? y : fixed_kappa));
          auto nm = detail::build_named_model(c, opt);
          const auto config = nx > 1 ? EvolutionConfig::with_snapshots(nm.t_f, nx - 1, n_steps)
                                     : EvolutionConfig{nm.t_f, n_steps, 0};
          const auto rec = lindblad_evolve(nm.model, *nm.lindblad,
                                           DensityMatrix::pure(ket(nm.model.space(), nm.initial)), config);
          std::vector<FidelityReport> out;
          if (nx == 1) {
            out.push_back(fidelity(rec.densities.front(), nm.target, nm.target_name));
          } else {
            for (const auto& rho : rec.densities) out.push_back(fidelity(rho, nm.target, nm.target_name));
          }
          return out;
        },
        CellErrorPolicy::Record, workers);
    const double g = cfg.number("g", 1.0);
    for (auto& x : grid.xs) x *= g;
  } else {
    throw ConfigError("unknown sweep_kind '" + kind + "' (epsilon_tf, gamma_time, kappa_time, gamma_time_pair)");
  }

  CommandResult r;
  r.table.columns = {x_name, y_name, "fidelity_overlap", "fidelity_population", "error"};
  double worst = 1.0;
  int failures = 0;
  for (std::size_t iy = 0; iy < grid.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < grid.xs.size(); ++ix) {
      const auto& c = grid.at(ix, iy);
      std::vector<std::string> row{RunConfig::format_number(grid.xs[ix]), RunConfig::format_number(grid.ys[iy])};
      if (c.ok()) {
        row.push_back(RunConfig::format_number(c.report.overlap));
        row.push_back(RunConfig::format_number(c.report.population));
        row.push_back("");
        if (!x_is_time || ix + 1 == grid.xs.size()) worst = std::min(worst, c.report.population);
      } else {
        row.insert(row.end(), {"", "", "ERROR: " + c.error});
        ++failures;
      }
      r.table.add(std::move(row));
    }
  }
  r.notes.push_back(std::string("threshold scope: ") + (x_is_time ? "final time column" : "all cells"));
  r.notes.push_back("minimum fidelity_population in scope: " + RunConfig::format_number(worst));
  if (failures) r.notes.push_back("failed cells: " + std::to_string(failures));
  r.exit_code = failures ? kAccuracyError : detail::threshold_code(opt.threshold, worst);
  return r;
}

/// Figure ids and the command each one runs.
inline const std::map<std::string, std::string>& figure_commands() {
  static const std::map<std::string, std::string> m{
      {"fig2a", "pulse"}, {"fig2b", "evolve"}, {"fig3a", "sweep"}, {"fig3b", "sweep"}, {"fig4a", "pulse"},
      {"fig4b", "evolve"}, {"fig4c", "evolve"}, {"fig5a", "sweep"}, {"fig5b", "sweep"}};
  return m;
}

/// Caption defaults for a figure; keys already present are kept.
inline void apply_figure_defaults(const std::string& id, RunConfig& cfg) {
  if (!figure_commands().count(id)) {
    throw ConfigError("unknown figure '" + id + "' (fig2a, fig2b, fig3a, fig3b, fig4a, fig4b, fig4c, fig5a, fig5b)");
  }
  if (id != "fig3a") cfg.set_default("epsilon", "0.25");
  if (id == "fig2a") {
    cfg.set_default("tf_over_g", "10");
    cfg.set_default("sweep", "full");
  } else if (id == "fig2b") {
    cfg.set_default("model", "one_qubit");
    cfg.set_default("tf_over_g", "10");
    cfg.set_default("initial", "1");
    cfg.set_default("labels", "1;4;2");
  } else if (id == "fig3a") {
    cfg.set_default("sweep_kind", "epsilon_tf");
  } else if (id == "fig3b") {
    cfg.set_default("sweep_kind", "gamma_time");
    cfg.set_default("tf_over_g", "10");
  } else if (id == "fig4a") {
    cfg.set_default("tf_over_g", "10");
    cfg.set_default("sweep", "half");
    cfg.set_default("with_full_sweep", "true");
  } else if (id == "fig4b") {
    cfg.set_default("model", "transfer");
    cfg.set_default("tf_over_g", "10");
    cfg.set_default("initial", "01");
    cfg.set_default("target", "02");
    cfg.set_default("labels", "01;02");
  } else if (id == "fig4c") {
    cfg.set_default("model", "pair");
    cfg.set_default("tf_over_g", "10");
    cfg.set_default("initial", "12");
    cfg.set_default("labels", "12;21");
  } else if (id == "fig5a") {
    cfg.set_default("sweep_kind", "kappa_time");
  } else if (id == "fig5b") {
    cfg.set_default("sweep_kind", "gamma_time_pair");
  }
}

/// Runs one command and, when `opt.out` is set, writes its files.
inline CommandResult run(const std::string& command, const RunConfig& cfg, const CliOptions& opt,
                         const std::string& label) {
  CommandResult r;
  if (command == "pulse") {
    r = cmd_pulse(cfg, opt);
  } else if (command == "evolve") {
    r = cmd_evolve(cfg, opt);
  } else if (command == "gate") {
    r = cmd_gate(cfg, opt);
  } else if (command == "sweep") {
    r = cmd_sweep(cfg, opt);
  } else {
    throw ConfigError("unknown command '" + command + "'");
  }
  cfg.reject_unused();
  if (!opt.out.empty()) {
    Provenance prov{label, cfg.resolved(), r.notes, opt.timestamp};
    if (opt.exact_epsilon) prov.parameters["exact_epsilon"] = "true";
    if (opt.threshold) prov.parameters["threshold"] = RunConfig::format_number(*opt.threshold);
    write_atomically(opt.out, prov.header() + r.table.body());
    if (!r.report.empty()) {
      std::filesystem::path rp(opt.out);
      rp.replace_extension(".report.txt");
      write_atomically(rp, prov.header() + r.report);
    }
  }
  return r;
}

/// Maps library errors onto the exit-code contract.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const AccuracyError*>(&e) || dynamic_cast<const SweepError*>(&e)) return kAccuracyError;
  if (dynamic_cast<const LeakageError*>(&e)) return kThresholdViolation;
  return kConfigError;
}

}  // namespace stap::cli
