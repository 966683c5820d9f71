#pragma once

#include "segc/tensor.hpp"

#include <initializer_list>
#include <span>

namespace segc {

// Product-norm fuzzy set operators. Binary forms:
//   symmetric difference  A(1-B) + B(1-A)
//   union                 1 - (1-A)(1-B)   (= A + B - AB)
//   intersection          AB
// n-ary forms are left folds. Every argument must lie in [0,1] (1e-9 slack).

Tensor soft_symmetric_difference(std::span<const Tensor> args);
Tensor soft_union(std::span<const Tensor> args);
Tensor soft_intersection(std::span<const Tensor> args);

Tensor soft_symmetric_difference(std::initializer_list<Tensor> args);
Tensor soft_union(std::initializer_list<Tensor> args);
Tensor soft_intersection(std::initializer_list<Tensor> args);

/// Throws std::domain_error if any value lies outside [0,1] by more than tol.
void require_unit_range(const Tensor& t, const char* what, double tol = 1e-9);

}  // namespace segc
