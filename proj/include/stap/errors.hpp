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

#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace stap {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Level, atom or photon index outside the declared space.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Operands live on different spaces or have mismatched dimensions.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Physical or protocol parameter outside its admissible domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A numerical routine could not reach its accuracy contract.
class AccuracyError : public Error {
 public:
  AccuracyError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

/// Gate execution left population in the cavity at a step boundary.
class LeakageError : public Error {
 public:
  LeakageError(const std::string& what, int step, std::string input)
      : Error(what), step_(step), input_(std::move(input)) {}
  int step() const { return step_; }
  const std::string& input() const { return input_; }

 private:
  int step_;
  std::string input_;
};

/// Bad command-line or config-file input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Diagnostics sink. Non-fatal conditions (zero photon cutoff, Zeno regime
// advisories, small negative eigenvalues) are reported here.
using WarningHandler = std::function<void(std::string_view)>;

namespace detail {
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
inline WarningHandler& warning_handler() {
  static WarningHandler h = [](std::string_view msg) {
    std::cerr << "[stap] warning: " << msg << '\n';
  };
  return h;
}
}  // namespace detail

inline WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(detail::warning_mutex());
  auto previous = std::move(detail::warning_handler());
  detail::warning_handler() = std::move(handler);
  return previous;
}

inline void warn(std::string_view message) {
  std::lock_guard lock(detail::warning_mutex());
  if (detail::warning_handler()) detail::warning_handler()(message);
}

}  // namespace stap
