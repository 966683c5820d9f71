#include "segc/softset.hpp"

#include <stdexcept>
#include <string>

namespace segc {

void require_unit_range(const Tensor& t, const char* what, double tol) {
  const Array& v = t.data();
  if (v.size() == 0) return;
  if (!v.allFinite() || v.minCoeff() < -tol || v.maxCoeff() > 1.0 + tol) {
    throw std::domain_error(std::string(what) + ": values must lie in [0,1]");
  }
}

namespace {

Tensor theta2(const Tensor& a, const Tensor& b) {
  auto av = a.shared_data();
  auto bv = b.shared_data();
  Array out = *av * (1.0 - *bv) + *bv * (1.0 - *av);
  return Graph::record(a.shape(), std::move(out), {&a, &b}, [av, bv](const Array& g, std::span<Array* const> in) {
    if (in[0]) *in[0] += g * (1.0 - 2.0 * *bv);
    if (in[1]) *in[1] += g * (1.0 - 2.0 * *av);
  });
}

Tensor union2(const Tensor& a, const Tensor& b) {
  auto av = a.shared_data();
  auto bv = b.shared_data();
  Array out = 1.0 - (1.0 - *av) * (1.0 - *bv);
  return Graph::record(a.shape(), std::move(out), {&a, &b}, [av, bv](const Array& g, std::span<Array* const> in) {
    if (in[0]) *in[0] += g * (1.0 - *bv);
    if (in[1]) *in[1] += g * (1.0 - *av);
  });
}

Tensor intersection2(const Tensor& a, const Tensor& b) { return a * b; }

template <typename Binary>
Tensor fold(std::span<const Tensor> args, const char* name, Binary&& op) {
  if (args.size() < 2) throw std::invalid_argument(std::string(name) + ": needs at least two arguments");
  for (const Tensor& t : args) {
    if (t.shape() != args.front().shape()) throw std::invalid_argument(std::string(name) + ": shape mismatch");
    require_unit_range(t, name);
  }
  Tensor acc = op(args[0], args[1]);
  for (std::size_t i = 2; i < args.size(); ++i) acc = op(acc, args[i]);
  return acc;
}

}  // namespace

Tensor soft_symmetric_difference(std::span<const Tensor> args) {
  return fold(args, "soft_symmetric_difference", theta2);
}
Tensor soft_union(std::span<const Tensor> args) { return fold(args, "soft_union", union2); }
Tensor soft_intersection(std::span<const Tensor> args) { return fold(args, "soft_intersection", intersection2); }

Tensor soft_symmetric_difference(std::initializer_list<Tensor> args) {
  return soft_symmetric_difference(std::span<const Tensor>(args.begin(), args.size()));
}
Tensor soft_union(std::initializer_list<Tensor> args) {
  return soft_union(std::span<const Tensor>(args.begin(), args.size()));
}
Tensor soft_intersection(std::initializer_list<Tensor> args) {
  return soft_intersection(std::span<const Tensor>(args.begin(), args.size()));
}

}  // namespace segc
