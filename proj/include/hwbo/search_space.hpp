#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hwbo/rng.hpp"

namespace hwbo {

enum class ParamKind { Integer, Continuous, LogContinuous };

const char* to_string(ParamKind kind);
ParamKind param_kind_from_string(const std::string& s);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::Continuous;
  double lower = 0.0;
  double upper = 1.0;
  // Structural parameters drive the power and memory models.
  bool structural = false;
  // Number of levels used when enumerating a grid over this parameter.
  // 0 means "every integer" for integer kinds; continuous kinds need >= 2.
  int grid_levels = 0;
};

/// One full hyper-parameter assignment, aligned with SearchSpace order.
/// Integer coordinates are stored as whole-valued doubles.
struct DesignPoint {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  bool operator==(const DesignPoint&) const = default;
};

/// Structural coordinates of a design point, in canonical order.
struct StructuralVector {
  std::vector<std::int64_t> values;

  std::size_t size() const { return values.size(); }
  std::int64_t operator[](std::size_t i) const { return values[i]; }
  bool operator==(const StructuralVector&) const = default;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<ParamSpec> params);

  const std::vector<ParamSpec>& params() const { return params_; }
  const ParamSpec& param(std::size_t i) const { return params_[i]; }
  std::size_t size() const { return params_.size(); }
  bool empty() const { return params_.empty(); }

  /// J, the number of structural parameters.
  std::size_t structural_count() const { return structural_index_.size(); }
  const std::vector<std::size_t>& structural_indices() const { return structural_index_; }
  std::vector<std::string> structural_names() const;

  /// Index of the named parameter; throws DomainError if absent.
  std::size_t index_of(const std::string& name) const;
  bool contains(const DesignPoint& x) const;

 private:
  std::vector<ParamSpec> params_;
  std::vector<std::size_t> structural_index_;
};

DesignPoint sample_uniform(const SearchSpace& space, Rng& rng);

/// Maps x into the unit cube (log-affine for log-continuous kinds).
Eigen::VectorXd normalize(const SearchSpace& space, const DesignPoint& x);

/// Inverse of normalize. No rounding is applied to integer kinds.
DesignPoint denormalize(const SearchSpace& space, const Eigen::VectorXd& unit);

StructuralVector extract_structural(const SearchSpace& space, const DesignPoint& x);

/// Clips each coordinate into bounds and rounds integer kinds to the nearest
/// whole value.
DesignPoint clip_round(const SearchSpace& space, std::span<const double> raw);

/// Grid values of one parameter (see ParamSpec::grid_levels).
std::vector<double> grid_values(const ParamSpec& p);

/// Number of points in the full grid; saturates at SIZE_MAX.
std::size_t grid_size(const SearchSpace& space);

}  // namespace hwbo
