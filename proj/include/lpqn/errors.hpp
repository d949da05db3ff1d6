#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace lpqn {

/// The convex set handed to a projector is empty.
class InfeasibleSetError : public std::runtime_error {
 public:
  InfeasibleSetError(const std::string& what, double residual_floor)
      : std::runtime_error(what), floor_(residual_floor) {}

  /// Smallest residual attainable over the whole space.
  double residual_floor() const noexcept { return floor_; }

 private:
  double floor_;
};

/// An iterative solver produced a non-finite iterate or failed to reach its
/// tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inner hinge projection did not reach its duality-gap target. Carries the
/// best iterate seen so callers may continue with an inexact projection.
class InexactProjectionError : public SolverError {
 public:
  InexactProjectionError(const std::string& what, Eigen::VectorXd best, double gap)
      : SolverError(what), best_(std::move(best)), gap_(gap) {}

  const Eigen::VectorXd& best_iterate() const noexcept { return best_; }
  double gap() const noexcept { return gap_; }

 private:
  Eigen::VectorXd best_;
  double gap_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace lpqn
