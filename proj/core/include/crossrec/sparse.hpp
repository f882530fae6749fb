#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crossrec/nn.hpp"

namespace crossrec {

// Sparse feature vector: sorted (index, weight) pairs over a fixed
// dimensionality.
struct SparseVec {
  int dim = 0;
  std::vector<std::pair<int, double>> entries;  // strictly increasing indices

  double l2_norm() const {
    double s = 0.0;
    for (const auto& [i, w] : entries) s += w * w;
    return std::sqrt(s);
  }

  void l2_normalize() {
    const double n = l2_norm();
    if (n == 0.0) return;
    for (auto& [i, w] : entries) w /= n;
  }

  Vector densify() const {
    Vector v = Vector::Zero(dim);
    for (const auto& [i, w] : entries) {
      if (i < 0 || i >= dim) throw std::out_of_range("SparseVec: index out of range");
      v[i] = w;
    }
    return v;
  }
};

// Stacks sparse rows into a dense n x dim matrix.
Matrix densify_rows(const std::vector<SparseVec>& rows);

}  // namespace crossrec
