#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cgq/errors.hpp"

namespace cgq {

/// Lagrange basis over a set of distinct nodes, stored in barycentric form.
class LagrangeBasis {
public:
  LagrangeBasis() = default;

  explicit LagrangeBasis(std::vector<double> nodes) : nodes_(std::move(nodes)) {
    if (nodes_.empty()) {
      throw ConfigError("LagrangeBasis: empty node set");
    }
    const std::size_t n = nodes_.size();
    weights_.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) {
          continue;
        }
        const double diff = nodes_[i] - nodes_[k];
        if (diff == 0.0) {
          throw ConfigError("LagrangeBasis: duplicate node " +
                            std::to_string(nodes_[i]));
        }
        weights_[i] /= diff;
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }

  double value(std::size_t i, double s) const {
    if (const auto j = node_index(s); j != npos) {
      return i == j ? 1.0 : 0.0;
    }
    double prod = weights_[i];
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (k != i) {
        prod *= s - nodes_[k];
      }
    }
    return prod;
  }

  double derivative(std::size_t i, double s) const {
    const std::size_t n = nodes_.size();
    if (const auto j = node_index(s); j != npos) {
      if (i != j) {
        return weights_[i] / (weights_[j] * (nodes_[j] - nodes_[i]));
      }
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != j) {
          acc += 1.0 / (nodes_[j] - nodes_[k]);
        }
      }
      return acc;
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k != i) {
        acc += 1.0 / (s - nodes_[k]);
      }
    }
    return value(i, s) * acc;
  }

  std::vector<double> values(double s) const {
    std::vector<double> out(nodes_.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = value(i, s);
    }
    return out;
  }

private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::size_t node_index(double s) const {
    for (std::size_t k = 0; k < nodes_.size(); ++k) {
      if (s == nodes_[k]) {
        return k;
      }
    }
    return npos;
  }

  std::vector<double> nodes_;
  std::vector<double> weights_;
};

inline LagrangeBasis lagrange_basis(std::vector<double> nodes) {
  return LagrangeBasis(std::move(nodes));
}

} // namespace cgq
