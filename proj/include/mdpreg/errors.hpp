#pragma once

#include <stdexcept>
#include <string>

namespace mdpreg {

// Problems with user-supplied data or configuration (bad CSV cell, wrong
// column name, invalid option combination). The CLI maps these to exit code 1.
class input_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures (singular systems, underflow). CLI exit code 2.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A weighted Gram matrix was singular or too ill-conditioned to trust.
class singular_gram_error : public numeric_error {
 public:
  singular_gram_error(const std::string& what, double condition_estimate)
      : numeric_error(what), condition_estimate(condition_estimate) {}

  double condition_estimate;
};

}  // namespace mdpreg
