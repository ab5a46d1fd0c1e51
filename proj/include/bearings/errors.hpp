#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bearings {

/// Numerical failure during a solve or an integration (singular operator,
/// step-size underflow, non-convergent refinement, ...).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Step-size underflow in the adaptive integrator. Carries the last
/// successfully reached time and state so the caller can diagnose.
class StiffnessError : public NumericalError {
 public:
  StiffnessError(const std::string& what, double t, Eigen::VectorXd state)
      : NumericalError(what), t_last(t), state_last(std::move(state)) {}

  double t_last;
  Eigen::VectorXd state_last;
};

/// A candidate first integral evaluated to a non-finite value. Carries the
/// offending flattened state.
class CandidateEvaluationError : public NumericalError {
 public:
  CandidateEvaluationError(const std::string& what, Eigen::VectorXd state)
      : NumericalError(what), state(std::move(state)) {}

  Eigen::VectorXd state;
};

}  // namespace bearings
