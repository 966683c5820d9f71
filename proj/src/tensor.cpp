#include "segc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace segc {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor() : shape_{}, data_(std::make_shared<const Array>(Array::Zero(1))) {}

Tensor::Tensor(Shape shape, Array data) : shape_(std::move(shape)) {
  if (shape_size(shape_) != static_cast<std::size_t>(data.size())) {
    throw std::invalid_argument("tensor: shape " + shape_string(shape_) + " does not match " +
                                std::to_string(data.size()) + " values");
  }
  data_ = std::make_shared<const Array>(std::move(data));
}

Tensor Tensor::scalar(double value) { return Tensor({}, Array::Constant(1, value)); }

Tensor Tensor::zeros(Shape shape) { return full(std::move(shape), 0.0); }

Tensor Tensor::full(Shape shape, double value) {
  const auto n = static_cast<Eigen::Index>(shape_size(shape));
  return Tensor(std::move(shape), Array::Constant(n, value));
}

Tensor Tensor::from(Shape shape, std::initializer_list<double> values) {
  Array a(static_cast<Eigen::Index>(values.size()));
  std::copy(values.begin(), values.end(), a.data());
  return Tensor(std::move(shape), std::move(a));
}

double Tensor::item() const {
  if (size() != 1) throw std::invalid_argument("item: tensor has " + std::to_string(size()) + " elements");
  return (*data_)(0);
}

std::optional<NodeId> Tensor::node() const {
  if (!graph_) return std::nullopt;
  return node_;
}

Tensor Tensor::detach() const {
  Tensor t = *this;
  t.graph_ = nullptr;
  t.node_ = 0;
  return t;
}

// ---------------------------------------------------------------------------
// Graph

Tensor GradientMap::at(const Tensor& leaf) const {
  if (leaf.graph() == graph_) {
    if (auto it = grads_.find(*leaf.node()); it != grads_.end()) return it->second;
  }
  return Tensor::zeros(leaf.shape());
}

bool GradientMap::contains(const Tensor& leaf) const {
  return leaf.graph() == graph_ && grads_.count(*leaf.node()) > 0;
}

Tensor Graph::append(Shape shape, std::shared_ptr<const Array> value, Node node) {
  Tensor t;
  t.shape_ = std::move(shape);
  t.data_ = std::move(value);
  t.graph_ = this;
  t.node_ = nodes_.size();
  nodes_.push_back(std::move(node));
  return t;
}

Tensor Graph::leaf(const Tensor& value) {
  return append(value.shape(), value.shared_data(), Node{value.shape(), {}, nullptr});
}

Graph* Graph::common_graph(std::span<const Tensor* const> inputs) {
  Graph* g = nullptr;
  for (const Tensor* t : inputs) {
    if (!t->graph()) continue;
    if (g && g != t->graph()) throw std::invalid_argument("graph: op mixes tensors from different graphs");
    g = t->graph();
  }
  return g;
}

Tensor Graph::record(Shape shape, Array value, std::initializer_list<const Tensor*> inputs,
                     BackwardFn backward) {
  std::span<const Tensor* const> in(inputs.begin(), inputs.size());
  Graph* g = common_graph(in);
  if (!g) return Tensor(std::move(shape), std::move(value));
  Node node{shape, {}, std::move(backward)};
  node.inputs.reserve(in.size());
  for (const Tensor* t : in) node.inputs.push_back(t->node());
  auto data = std::make_shared<const Array>(std::move(value));
  if (shape_size(shape) != static_cast<std::size_t>(data->size()))
    throw std::logic_error("graph: recorded value does not match shape");
  return g->append(std::move(shape), std::move(data), std::move(node));
}

Tensor Graph::record(Shape shape, Array value, std::span<const Tensor> inputs, BackwardFn backward) {
  std::vector<const Tensor*> ptrs;
  ptrs.reserve(inputs.size());
  for (const Tensor& t : inputs) ptrs.push_back(&t);
  Graph* g = common_graph(ptrs);
  if (!g) return Tensor(std::move(shape), std::move(value));
  Node node{shape, {}, std::move(backward)};
  for (const Tensor* t : ptrs) node.inputs.push_back(t->node());
  return g->append(std::move(shape), std::make_shared<const Array>(std::move(value)), std::move(node));
}

GradientMap Graph::backward(const Tensor& loss) const {
  if (loss.size() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  GradientMap out;
  out.graph_ = this;
  if (loss.graph() != this) return out;

  const NodeId root = *loss.node();
  std::vector<Array> grads(root + 1);
  grads[root] = Array::Ones(1);
  std::vector<Array*> ptrs;
  for (NodeId i = root + 1; i-- > 0;) {
    if (grads[i].size() == 0) continue;
    const Node& n = nodes_[i];
    if (!n.backward) {
      out.grads_.emplace(i, Tensor(n.shape, grads[i]));
      continue;
    }
    ptrs.assign(n.inputs.size(), nullptr);
    for (std::size_t k = 0; k < n.inputs.size(); ++k) {
      if (!n.inputs[k]) continue;
      Array& g = grads[*n.inputs[k]];
      if (g.size() == 0) g = Array::Zero(static_cast<Eigen::Index>(shape_size(nodes_[*n.inputs[k]].shape)));
      ptrs[k] = &g;
    }
    n.backward(grads[i], ptrs);
    grads[i] = Array();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Elementwise ops

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
}

constexpr double kMinDivisor = 1e-12;

}  // namespace

Tensor elementwise(BinaryOp op, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "elementwise");
  auto av = a.shared_data();
  auto bv = b.shared_data();
  switch (op) {
    case BinaryOp::add:
      return Graph::record(a.shape(), *av + *bv, {&a, &b}, [](const Array& g, std::span<Array* const> in) {
        if (in[0]) *in[0] += g;
        if (in[1]) *in[1] += g;
      });
    case BinaryOp::sub:
      return Graph::record(a.shape(), *av - *bv, {&a, &b}, [](const Array& g, std::span<Array* const> in) {
        if (in[0]) *in[0] += g;
        if (in[1]) *in[1] -= g;
      });
    case BinaryOp::mul:
      return Graph::record(a.shape(), *av * *bv, {&a, &b}, [av, bv](const Array& g, std::span<Array* const> in) {
        if (in[0]) *in[0] += g * *bv;
        if (in[1]) *in[1] += g * *av;
      });
    case BinaryOp::div:
      if ((bv->abs() < kMinDivisor).any()) throw std::domain_error("div: divisor magnitude below 1e-12");
      return Graph::record(a.shape(), *av / *bv, {&a, &b}, [av, bv](const Array& g, std::span<Array* const> in) {
        if (in[0]) *in[0] += g / *bv;
        if (in[1]) *in[1] -= g * *av / bv->square();
      });
  }
  throw std::logic_error("elementwise: unknown op");
}

Tensor elementwise(BinaryOp op, const Tensor& a, double b) {
  auto av = a.shared_data();
  switch (op) {
    case BinaryOp::add:
      return Graph::record(a.shape(), *av + b, {&a}, [](const Array& g, std::span<Array* const> in) { *in[0] += g; });
    case BinaryOp::sub:
      return Graph::record(a.shape(), *av - b, {&a}, [](const Array& g, std::span<Array* const> in) { *in[0] += g; });
    case BinaryOp::mul:
      return Graph::record(a.shape(), *av * b, {&a},
                           [b](const Array& g, std::span<Array* const> in) { *in[0] += g * b; });
    case BinaryOp::div:
      if (std::abs(b) < kMinDivisor) throw std::domain_error("div: divisor magnitude below 1e-12");
      return Graph::record(a.shape(), *av / b, {&a},
                           [b](const Array& g, std::span<Array* const> in) { *in[0] += g / b; });
  }
  throw std::logic_error("elementwise: unknown op");
}

Tensor operator+(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::add, a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::sub, a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::mul, a, b); }
Tensor operator/(const Tensor& a, const Tensor& b) { return elementwise(BinaryOp::div, a, b); }
Tensor operator+(const Tensor& a, double b) { return elementwise(BinaryOp::add, a, b); }
Tensor operator-(const Tensor& a, double b) { return elementwise(BinaryOp::sub, a, b); }
Tensor operator*(const Tensor& a, double b) { return elementwise(BinaryOp::mul, a, b); }
Tensor operator/(const Tensor& a, double b) { return elementwise(BinaryOp::div, a, b); }
Tensor operator+(double a, const Tensor& b) { return b + a; }
Tensor operator*(double a, const Tensor& b) { return b * a; }

Tensor operator-(const Tensor& a) {
  return Graph::record(a.shape(), -a.data(), {&a}, [](const Array& g, std::span<Array* const> in) { *in[0] -= g; });
}

Tensor operator-(double a, const Tensor& b) {
  return Graph::record(b.shape(), a - b.data(), {&b}, [](const Array& g, std::span<Array* const> in) { *in[0] -= g; });
}

Tensor sigmoid(const Tensor& x) {
  // Split by sign so that exp never overflows.
  Array y = x.data().unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
  auto yv = std::make_shared<const Array>(y);
  return Graph::record(x.shape(), std::move(y), {&x}, [yv](const Array& g, std::span<Array* const> in) {
    *in[0] += g * *yv * (1.0 - *yv);
  });
}

Tensor clamp(const Tensor& x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  auto xv = x.shared_data();
  return Graph::record(x.shape(), xv->max(lo).min(hi), {&x}, [xv, lo, hi](const Array& g, std::span<Array* const> in) {
    *in[0] += ((*xv > lo) && (*xv < hi)).cast<double>() * g;
  });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  auto xv = x.shared_data();
  Array y = (*xv > 0.0).select(*xv, *xv * slope);
  return Graph::record(x.shape(), std::move(y), {&x}, [xv, slope](const Array& g, std::span<Array* const> in) {
    *in[0] += (*xv > 0.0).select(g, g * slope);
  });
}

Tensor sum(const Tensor& x) {
  if (x.size() == 0) throw std::invalid_argument("sum: empty tensor");
  const double* p = x.data().data();
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += p[i];
  return Graph::record({}, Array::Constant(1, s), {&x},
                       [](const Array& g, std::span<Array* const> in) { *in[0] += g(0); });
}

// ---------------------------------------------------------------------------
// Spatial ops

namespace {

long ceil_div(long a, long b) { return a >= 0 ? (a + b - 1) / b : -((-a) / b); }
long floor_div(long a, long b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

struct ConvGeometry {
  long cin, h, w, cout, k, stride, pad, ho, wo;
};

// Visits every (output row, input row, valid column range) triple of the
// cross-correlation in a fixed order. Used for strided convolutions.
template <typename Fn>
void for_each_tap(const ConvGeometry& c, Fn&& fn) {
  for (long co = 0; co < c.cout; ++co) {
    for (long ci = 0; ci < c.cin; ++ci) {
      for (long ky = 0; ky < c.k; ++ky) {
        for (long kx = 0; kx < c.k; ++kx) {
          const long widx = ((co * c.cin + ci) * c.k + ky) * c.k + kx;
          const long ox_lo = std::max(0L, ceil_div(c.pad - kx, c.stride));
          const long ox_hi = std::min(c.wo - 1, floor_div(c.w - 1 + c.pad - kx, c.stride));
          if (ox_lo > ox_hi) continue;
          for (long oy = 0; oy < c.ho; ++oy) {
            const long iy = oy * c.stride - c.pad + ky;
            if (iy < 0 || iy >= c.h) continue;
            const long out_row = (co * c.ho + oy) * c.wo;
            const long in_row = (ci * c.h + iy) * c.w;
            fn(widx, out_row, in_row, ox_lo, ox_hi, ox_lo * c.stride - c.pad + kx);
          }
        }
      }
    }
  }
}

// Stride-1 rows. Each helper handles one kernel row (k taps) against one
// input row and one output row; interior columns where every tap is valid
// run without bounds checks.

// y[ox] += sum_t w[t] x[ox - p + t]
void row_forward(const double* w, long k, long p, const double* x, long wi, double* y, long wo) {
  const long lo = std::max(0L, p), hi = std::min(wo - 1, wi - k + p);
  auto edge = [&](long ox) {
    double s = 0.0;
    for (long t = 0; t < k; ++t) {
      const long ix = ox - p + t;
      if (ix >= 0 && ix < wi) s += w[t] * x[ix];
    }
    y[ox] += s;
  };
  for (long ox = 0; ox < std::min(lo, wo); ++ox) edge(ox);
  if (k == 3) {
    const double w0 = w[0], w1 = w[1], w2 = w[2];
    const double* xs = x - p;
    for (long ox = lo; ox <= hi; ++ox) y[ox] += w0 * xs[ox] + w1 * xs[ox + 1] + w2 * xs[ox + 2];
  } else {
    for (long ox = lo; ox <= hi; ++ox) {
      double s = 0.0;
      for (long t = 0; t < k; ++t) s += w[t] * x[ox - p + t];
      y[ox] += s;
    }
  }
  for (long ox = std::max(hi + 1, lo); ox < wo; ++ox) edge(ox);
}

// gx[ix] += sum_t w[t] g[ix + p - t]
void row_backward_input(const double* w, long k, long p, const double* g, long wo, double* gx, long wi) {
  const long lo = std::max(0L, k - 1 - p), hi = std::min(wi - 1, wo - 1 - p);
  auto edge = [&](long ix) {
    double s = 0.0;
    for (long t = 0; t < k; ++t) {
      const long ox = ix + p - t;
      if (ox >= 0 && ox < wo) s += w[t] * g[ox];
    }
    gx[ix] += s;
  };
  for (long ix = 0; ix < std::min(lo, wi); ++ix) edge(ix);
  if (k == 3) {
    const double w0 = w[0], w1 = w[1], w2 = w[2];
    const double* gs = g + p;
    for (long ix = lo; ix <= hi; ++ix) gx[ix] += w0 * gs[ix] + w1 * gs[ix - 1] + w2 * gs[ix - 2];
  } else {
    for (long ix = lo; ix <= hi; ++ix) {
      double s = 0.0;
      for (long t = 0; t < k; ++t) s += w[t] * g[ix + p - t];
      gx[ix] += s;
    }
  }
  for (long ix = std::max(hi + 1, lo); ix < wi; ++ix) edge(ix);
}

// acc[t * wo + ox] += g[ox] x[ox - p + t] over the valid columns of each tap.
void row_backward_kernel(long k, long p, const double* g, long wo, const double* x, long wi, double* acc) {
  for (long t = 0; t < k; ++t) {
    const long lo = std::max(0L, p - t), hi = std::min(wo - 1, wi - 1 + p - t);
    double* a = acc + t * wo;
    const double* xs = x - p + t;
    for (long ox = lo; ox <= hi; ++ox) a[ox] += g[ox] * xs[ox];
  }
}

void conv_forward(const ConvGeometry& c, const double* x, const double* kw, double* o) {
  if (c.stride != 1) {
    for_each_tap(c, [&](long widx, long out_row, long in_row, long lo, long hi, long ix0) {
      const double wgt = kw[widx];
      double* orow = o + out_row;
      const double* irow = x + in_row + ix0;
      for (long ox = lo; ox <= hi; ++ox) orow[ox] += wgt * irow[(ox - lo) * c.stride];
    });
    return;
  }
  for (long co = 0; co < c.cout; ++co)
    for (long ci = 0; ci < c.cin; ++ci)
      for (long ky = 0; ky < c.k; ++ky) {
        const double* w = kw + ((co * c.cin + ci) * c.k + ky) * c.k;
        for (long oy = 0; oy < c.ho; ++oy) {
          const long iy = oy - c.pad + ky;
          if (iy < 0 || iy >= c.h) continue;
          row_forward(w, c.k, c.pad, x + (ci * c.h + iy) * c.w, c.w, o + (co * c.ho + oy) * c.wo, c.wo);
        }
      }
}

void conv_backward(const ConvGeometry& c, const double* x, const double* kw, const double* go, double* gx,
                   double* gk) {
  if (c.stride != 1) {
    const long s = c.stride;
    for_each_tap(c, [&](long widx, long out_row, long in_row, long lo, long hi, long ix0) {
      const double* gseg = go + out_row + lo;
      const long len = hi - lo + 1;
      if (gx) {
        const double wgt = kw[widx];
        double* girow = gx + in_row + ix0;
        for (long t = 0; t < len; ++t) girow[t * s] += wgt * gseg[t];
      }
      if (gk) {
        const double* irow = x + in_row + ix0;
        double acc = 0.0;
        for (long t = 0; t < len; ++t) acc += gseg[t] * irow[t * s];
        gk[widx] += acc;
      }
    });
    return;
  }
  std::vector<double> acc(gk ? static_cast<std::size_t>(c.k * c.wo) : 0);
  for (long co = 0; co < c.cout; ++co)
    for (long ci = 0; ci < c.cin; ++ci)
      for (long ky = 0; ky < c.k; ++ky) {
        const long widx = ((co * c.cin + ci) * c.k + ky) * c.k;
        if (gk) std::fill(acc.begin(), acc.end(), 0.0);
        for (long oy = 0; oy < c.ho; ++oy) {
          const long iy = oy - c.pad + ky;
          if (iy < 0 || iy >= c.h) continue;
          const double* grow = go + (co * c.ho + oy) * c.wo;
          const double* irow = x + (ci * c.h + iy) * c.w;
          if (gx) row_backward_input(kw + widx, c.k, c.pad, grow, c.wo, gx + (ci * c.h + iy) * c.w, c.w);
          if (gk) row_backward_kernel(c.k, c.pad, grow, c.wo, irow, c.w, acc.data());
        }
        if (gk) {
          for (long t = 0; t < c.k; ++t) {
            double s = 0.0;
            for (long ox = 0; ox < c.wo; ++ox) s += acc[static_cast<std::size_t>(t * c.wo + ox)];
            gk[widx + t] += s;
          }
        }
      }
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& kernel, int stride, int padding) {
  if (input.rank() != 3 || kernel.rank() != 4) throw std::invalid_argument("conv2d: expected [C,H,W] input and [O,C,k,k] kernel");
  if (kernel.dim(1) != input.dim(0)) throw std::invalid_argument("conv2d: channel mismatch");
  if (kernel.dim(2) != kernel.dim(3) || kernel.dim(2) % 2 == 0) throw std::invalid_argument("conv2d: kernel must be square and odd");
  if (stride < 1 || padding < 0) throw std::invalid_argument("conv2d: invalid stride or padding");

  ConvGeometry c{};
  c.cin = static_cast<long>(input.dim(0));
  c.h = static_cast<long>(input.dim(1));
  c.w = static_cast<long>(input.dim(2));
  c.cout = static_cast<long>(kernel.dim(0));
  c.k = static_cast<long>(kernel.dim(2));
  c.stride = stride;
  c.pad = padding;
  const long span_h = c.h + 2 * c.pad - c.k;
  const long span_w = c.w + 2 * c.pad - c.k;
  if (span_h < 0 || span_w < 0) throw std::invalid_argument("conv2d: output dimension < 1");
  c.ho = span_h / c.stride + 1;
  c.wo = span_w / c.stride + 1;

  auto xv = input.shared_data();
  auto kv = kernel.shared_data();
  Array out = Array::Zero(c.cout * c.ho * c.wo);
  conv_forward(c, xv->data(), kv->data(), out.data());

  Shape shape{static_cast<std::size_t>(c.cout), static_cast<std::size_t>(c.ho), static_cast<std::size_t>(c.wo)};
  return Graph::record(std::move(shape), std::move(out), {&input, &kernel},
                       [c, xv, kv](const Array& g, std::span<Array* const> in) {
                         conv_backward(c, xv->data(), kv->data(), g.data(), in[0] ? in[0]->data() : nullptr,
                                       in[1] ? in[1]->data() : nullptr);
                       });
}

Tensor add_channel_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 3 || bias.size() != x.dim(0)) throw std::invalid_argument("add_channel_bias: expected [C,H,W] and C biases");
  const auto plane = static_cast<Eigen::Index>(x.dim(1) * x.dim(2));
  const auto channels = static_cast<Eigen::Index>(x.dim(0));
  Array out = x.data();
  for (Eigen::Index c = 0; c < channels; ++c) out.segment(c * plane, plane) += bias[static_cast<std::size_t>(c)];
  return Graph::record(x.shape(), std::move(out), {&x, &bias},
                       [plane, channels](const Array& g, std::span<Array* const> in) {
                         if (in[0]) *in[0] += g;
                         if (in[1]) {
                           for (Eigen::Index c = 0; c < channels; ++c) {
                             const double* p = g.data() + c * plane;
                             double acc = 0.0;
                             for (Eigen::Index i = 0; i < plane; ++i) acc += p[i];
                             (*in[1])(c) += acc;
                           }
                         }
                       });
}

Tensor upsample_nearest2x(const Tensor& x) {
  if (x.rank() != 3) throw std::invalid_argument("upsample_nearest2x: expected [C,H,W]");
  const std::size_t C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const std::size_t H2 = 2 * H, W2 = 2 * W;
  Array out(static_cast<Eigen::Index>(C * H2 * W2));
  const double* src = x.data().data();
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t y = 0; y < H2; ++y)
      for (std::size_t xx = 0; xx < W2; ++xx) out((c * H2 + y) * W2 + xx) = src[(c * H + y / 2) * W + xx / 2];
  return Graph::record({C, H2, W2}, std::move(out), {&x}, [C, H, W](const Array& g, std::span<Array* const> in) {
    const std::size_t H2 = 2 * H, W2 = 2 * W;
    double* gi = in[0]->data();
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H2; ++y)
        for (std::size_t xx = 0; xx < W2; ++xx) gi[(c * H + y / 2) * W + xx / 2] += g((c * H2 + y) * W2 + xx);
  });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw std::invalid_argument("stack: no tensors");
  const Shape& inner = parts.front().shape();
  const auto n = static_cast<Eigen::Index>(parts.front().size());
  for (const Tensor& t : parts) {
    if (t.shape() != inner) throw std::invalid_argument("stack: shape mismatch");
  }
  Array out(n * static_cast<Eigen::Index>(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) out.segment(static_cast<Eigen::Index>(i) * n, n) = parts[i].data();
  Shape shape{parts.size()};
  shape.insert(shape.end(), inner.begin(), inner.end());
  return Graph::record(std::move(shape), std::move(out), parts, [n](const Array& g, std::span<Array* const> in) {
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i]) *in[i] += g.segment(static_cast<Eigen::Index>(i) * n, n);
    }
  });
}

// ---------------------------------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, double h) {
  std::vector<std::size_t> all(x.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return grad_check(f, x, all, h);
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x, std::span<const std::size_t> indices,
                  double h) {
  if (!(h >= 1e-7 && h <= 1e-3)) throw std::invalid_argument("grad_check: step must lie in [1e-7, 1e-3]");
  const auto eval = [&](const Tensor& in) {
    const double v = f(in).item();
    if (!std::isfinite(v)) throw std::domain_error("grad_check: function returned a non-finite value");
    return v;
  };

  Graph g;
  const Tensor leaf = g.leaf(x);
  const Tensor loss = f(leaf);
  if (!std::isfinite(loss.item())) throw std::domain_error("grad_check: function returned a non-finite value");
  const Tensor analytic = g.backward(loss).at(leaf);

  double worst = 0.0;
  Array probe = x.data();
  for (std::size_t idx : indices) {
    if (idx >= x.size()) throw std::out_of_range("grad_check: index out of range");
    const auto i = static_cast<Eigen::Index>(idx);
    const double orig = probe(i);
    probe(i) = orig + h;
    const double up = eval(Tensor(x.shape(), probe));
    probe(i) = orig - h;
    const double down = eval(Tensor(x.shape(), probe));
    probe(i) = orig;
    const double numeric = (up - down) / (2.0 * h);
    const double a = analytic[idx];
    worst = std::max(worst, std::abs(a - numeric) / std::max(1.0, std::abs(a)));
  }
  return worst;
}

}  // namespace segc
