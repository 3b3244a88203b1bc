#pragma once

#include <stdexcept>
#include <string>

namespace steinmd {

// Argument outside the mathematical domain of an evaluator (z < 0, eps <= 0, ...).
using domain_error = std::domain_error;

// A model cannot be built: degenerate variance, invalid atoms, bad shape.
class model_error : public std::runtime_error {
 public:
  explicit model_error(const std::string& what) : std::runtime_error(what) {}
};

// The requested mode is not available for this model (enumeration of a huge
// outcome space, tilting a non-factorizable statistic, ...).
class capability_error : public std::logic_error {
 public:
  explicit capability_error(const std::string& what) : std::logic_error(what) {}
};

// A moment-generating function diverges at the requested argument.
class certificate_error : public std::runtime_error {
 public:
  explicit certificate_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace steinmd
