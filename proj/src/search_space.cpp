#include "hwbo/search_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "hwbo/error.hpp"

namespace hwbo {

const char* to_string(ParamKind kind) {
  switch (kind) {
    case ParamKind::Integer: return "integer";
    case ParamKind::Continuous: return "continuous";
    case ParamKind::LogContinuous: return "log-continuous";
  }
  return "?";
}

ParamKind param_kind_from_string(const std::string& s) {
  if (s == "integer") return ParamKind::Integer;
  if (s == "continuous") return ParamKind::Continuous;
  if (s == "log-continuous") return ParamKind::LogContinuous;
  throw DomainError("unknown parameter kind '" + s + "'");
}

SearchSpace::SearchSpace(std::vector<ParamSpec> params) : params_(std::move(params)) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    if (p.name.empty()) throw DomainError("parameter " + std::to_string(i) + " has no name");
    if (!names.insert(p.name).second) throw DomainError("duplicate parameter name '" + p.name + "'");
    if (!(p.lower < p.upper)) throw DomainError("parameter '" + p.name + "': lower must be < upper");
    if (p.kind == ParamKind::Integer &&
        (std::floor(p.lower) != p.lower || std::floor(p.upper) != p.upper)) {
      throw DomainError("parameter '" + p.name + "': integer bounds must be whole numbers");
    }
    if (p.kind == ParamKind::LogContinuous && p.lower <= 0.0) {
      throw DomainError("parameter '" + p.name + "': log-continuous lower bound must be > 0");
    }
    if (p.structural && (p.kind != ParamKind::Integer || p.lower < 0.0)) {
      throw DomainError("parameter '" + p.name + "': structural parameters must be nonnegative integers");
    }
    if (p.grid_levels < 0 || p.grid_levels == 1) {
      throw DomainError("parameter '" + p.name + "': grid_levels must be 0 or >= 2");
    }
    if (p.structural) structural_index_.push_back(i);
  }
}

std::vector<std::string> SearchSpace::structural_names() const {
  std::vector<std::string> out;
  for (auto i : structural_index_) out.push_back(params_[i].name);
  return out;
}

std::size_t SearchSpace::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return i;
  }
  throw DomainError("no parameter named '" + name + "'");
}

bool SearchSpace::contains(const DesignPoint& x) const {
  if (x.size() != params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const auto& p = params_[i];
    const double v = x[i];
    if (!(v >= p.lower && v <= p.upper)) return false;
    if (p.kind == ParamKind::Integer && std::floor(v) != v) return false;
  }
  return true;
}

DesignPoint sample_uniform(const SearchSpace& space, Rng& rng) {
  if (space.empty()) throw DomainError("sample_uniform: empty search space");
  DesignPoint x;
  x.values.reserve(space.size());
  for (const auto& p : space.params()) {
    switch (p.kind) {
      case ParamKind::Integer: {
        std::uniform_int_distribution<std::int64_t> d(static_cast<std::int64_t>(p.lower),
                                                      static_cast<std::int64_t>(p.upper));
        x.values.push_back(static_cast<double>(d(rng)));
        break;
      }
      case ParamKind::Continuous: {
        std::uniform_real_distribution<double> d(p.lower, p.upper);
        x.values.push_back(std::clamp(d(rng), p.lower, p.upper));
        break;
      }
      case ParamKind::LogContinuous: {
        std::uniform_real_distribution<double> d(std::log(p.lower), std::log(p.upper));
        x.values.push_back(std::clamp(std::exp(d(rng)), p.lower, p.upper));
        break;
      }
    }
  }
  return x;
}

namespace {

double to_unit(const ParamSpec& p, double v) {
  if (p.kind == ParamKind::LogContinuous) {
    return (std::log(v) - std::log(p.lower)) / (std::log(p.upper) - std::log(p.lower));
  }
  return (v - p.lower) / (p.upper - p.lower);
}

double from_unit(const ParamSpec& p, double u) {
  // Endpoints map back exactly; exp/log roundoff would otherwise step outside.
  if (u == 0.0) return p.lower;
  if (u == 1.0) return p.upper;
  if (p.kind == ParamKind::LogContinuous) {
    const double lo = std::log(p.lower);
    const double v = std::exp(lo + u * (std::log(p.upper) - lo));
    return u > 0.0 && u < 1.0 ? std::clamp(v, p.lower, p.upper) : v;
  }
  return p.lower + u * (p.upper - p.lower);
}

}  // namespace

Eigen::VectorXd normalize(const SearchSpace& space, const DesignPoint& x) {
  if (x.size() != space.size()) throw DomainError("normalize: dimension mismatch");
  Eigen::VectorXd u(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto& p = space.param(i);
    if (!(x[i] >= p.lower && x[i] <= p.upper)) {
      throw DomainError("normalize: '" + p.name + "' = " + std::to_string(x[i]) + " out of bounds");
    }
    u[static_cast<Eigen::Index>(i)] = to_unit(p, x[i]);
  }
  return u;
}

DesignPoint denormalize(const SearchSpace& space, const Eigen::VectorXd& unit) {
  if (static_cast<std::size_t>(unit.size()) != space.size()) {
    throw DomainError("denormalize: dimension mismatch");
  }
  DesignPoint x;
  x.values.reserve(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    x.values.push_back(from_unit(space.param(i), unit[static_cast<Eigen::Index>(i)]));
  }
  return x;
}

StructuralVector extract_structural(const SearchSpace& space, const DesignPoint& x) {
  if (x.size() != space.size()) throw DomainError("extract_structural: dimension mismatch");
  StructuralVector z;
  z.values.reserve(space.structural_count());
  for (auto i : space.structural_indices()) {
    z.values.push_back(static_cast<std::int64_t>(std::llround(x[i])));
  }
  return z;
}

DesignPoint clip_round(const SearchSpace& space, std::span<const double> raw) {
  if (raw.size() != space.size()) throw DomainError("clip_round: dimension mismatch");
  DesignPoint x;
  x.values.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& p = space.param(i);
    double v = std::isnan(raw[i]) ? p.lower : std::clamp(raw[i], p.lower, p.upper);
    if (p.kind == ParamKind::Integer) v = std::clamp(std::round(v), p.lower, p.upper);
    x.values.push_back(v);
  }
  return x;
}

std::vector<double> grid_values(const ParamSpec& p) {
  std::vector<double> out;
  if (p.kind == ParamKind::Integer && p.grid_levels == 0) {
    for (double v = p.lower; v <= p.upper; v += 1.0) out.push_back(v);
    return out;
  }
  if (p.grid_levels < 2) {
    throw DomainError("parameter '" + p.name + "' needs grid_levels >= 2 to be enumerated");
  }
  for (int k = 0; k < p.grid_levels; ++k) {
    const double u = static_cast<double>(k) / (p.grid_levels - 1);
    double v = from_unit(p, u);
    if (k == 0) v = p.lower;
    if (k == p.grid_levels - 1) v = p.upper;
    if (p.kind == ParamKind::Integer) v = std::round(v);
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  return out;
}

std::size_t grid_size(const SearchSpace& space) {
  std::size_t n = 1;
  for (const auto& p : space.params()) {
    const std::size_t k = grid_values(p).size();
    if (n > std::numeric_limits<std::size_t>::max() / k) return std::numeric_limits<std::size_t>::max();
    n *= k;
  }
  return n;
}

}  // namespace hwbo
