#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace pfem {

/// A reference point or argument outside the admissible domain of a map.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The closest-point projection is undefined (or not unique) at the input.
class OutsideProjectionDomain : public std::runtime_error {
 public:
  explicit OutsideProjectionDomain(const std::string& what,
                                   std::optional<std::size_t> element = std::nullopt)
      : std::runtime_error(element ? what + " (element " + std::to_string(*element) + ")" : what),
        element_(element) {}

  [[nodiscard]] std::optional<std::size_t> element() const { return element_; }

  [[nodiscard]] OutsideProjectionDomain at_element(std::size_t element) const {
    return OutsideProjectionDomain(std::runtime_error::what(), element);
  }

 private:
  std::optional<std::size_t> element_;
};

/// Logarithm requested at (or numerically at) the cut locus.
class CutLocus : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Weighted Riemannian center of mass could not be computed.
class MeanNotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two meshes (or spaces) that are not related by refinement.
class LineageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Invalid study or solver configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace pfem
