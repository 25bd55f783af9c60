#include "eva/autodiff/ops.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eva/errors.hpp"

namespace eva::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

using detail::Node;

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + " expects a matrix, got " + shape_to_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " differ");
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

// Applies f(x) pointwise; df(x, y) gives dy/dx from input and output.
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return make_result(a.shape(), std::move(out), {a}, [df](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
  });
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions of " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()) + " disagree");
  const auto m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n);
  Map(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  return make_result({m, n}, std::move(out), {a, b}, [m, k, n](Node& self) {
    ConstMap g(self.grad.data(), m, n);
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad)
      Map(pa.grad_for_accumulate().data(), m, k).noalias() += g * ConstMap(pb.value.data(), k, n).transpose();
    if (pb.requires_grad)
      Map(pb.grad_for_accumulate().data(), k, n).noalias() += ConstMap(pa.value.data(), m, k).transpose() * g;
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const auto m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  Map(out.data(), n, m) = ConstMap(a.data().data(), m, n).transpose();
  return make_result({n, m}, std::move(out), {a}, [m, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    Map(p.grad_for_accumulate().data(), m, n) += ConstMap(self.grad.data(), n, m).transpose();
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix(x, "linear");
  require_matrix(weight, "linear");
  if (weight.cols() != x.cols())
    throw DimensionError("linear: input " + shape_to_string(x.shape()) + " does not fit weight " +
                         shape_to_string(weight.shape()));
  if (bias.size() != weight.rows())
    throw DimensionError("linear: bias " + shape_to_string(bias.shape()) + " does not fit weight " +
                         shape_to_string(weight.shape()));
  const auto m = x.rows(), in = x.cols(), out_dim = weight.rows();
  std::vector<double> out(m * out_dim);
  Map y(out.data(), m, out_dim);
  y.noalias() = ConstMap(x.data().data(), m, in) * ConstMap(weight.data().data(), out_dim, in).transpose();
  Eigen::Map<const Eigen::RowVectorXd> b(bias.data().data(), out_dim);
  y.rowwise() += b;
  return make_result({m, out_dim}, std::move(out), {x, weight, bias}, [m, in, out_dim](Node& self) {
    ConstMap g(self.grad.data(), m, out_dim);
    Node& px = parent(self, 0);
    Node& pw = parent(self, 1);
    Node& pb = parent(self, 2);
    if (px.requires_grad)
      Map(px.grad_for_accumulate().data(), m, in).noalias() += g * ConstMap(pw.value.data(), out_dim, in);
    if (pw.requires_grad)
      Map(pw.grad_for_accumulate().data(), out_dim, in).noalias() +=
          g.transpose() * ConstMap(px.value.data(), m, in);
    if (pb.requires_grad)
      Eigen::Map<Eigen::RowVectorXd>(pb.grad_for_accumulate().data(), out_dim) += g.colwise().sum();
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      auto& g = p.grad_for_accumulate();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    for (std::size_t k = 0; k < 2; ++k) {
      Node& p = parent(self, k);
      if (!p.requires_grad) continue;
      const double sign = k == 0 ? 1.0 : -1.0;
      auto& g = p.grad_for_accumulate();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  return make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) {
      auto& g = pa.grad_for_accumulate();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
    }
    if (pb.requires_grad) {
      auto& g = pb.grad_for_accumulate();
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  return unary(a, [factor](double x) { return factor * x; }, [factor](double, double) { return factor; });
}

Tensor add_scalar(const Tensor& a, double offset) {
  return unary(a, [offset](double x) { return x + offset; }, [](double, double) { return 1.0; });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor sigmoid(const Tensor& a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
  return unary(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& a) {
  return unary(a, [](double x) { return x > 0 ? x : 0.0; }, [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor exp(const Tensor& a) {
  return unary(a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
  for (double x : a.data())
    if (!(x > 0)) throw NumericError("log of non-positive value " + std::to_string(x));
  return unary(a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Tensor softmax_rows(const Tensor& x) {
  require_matrix(x, "softmax_rows");
  const auto m = x.rows(), n = x.cols();
  std::vector<double> out(m * n);
  auto in = x.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = in.data() + r * n;
    double mx = row[0];
    for (std::size_t c = 0; c < n; ++c) {
      if (std::isnan(row[c])) throw NumericError("softmax_rows: NaN input");
      mx = std::max(mx, row[c]);
    }
    double total = 0.0;
    for (std::size_t c = 0; c < n; ++c) total += out[r * n + c] = std::exp(row[c] - mx);
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] /= total;
  }
  return make_result(x.shape(), std::move(out), {x}, [m, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t r = 0; r < m; ++r) {
      const double* y = self.value.data() + r * n;
      const double* gy = self.grad.data() + r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += y[c] * gy[c];
      for (std::size_t c = 0; c < n; ++c) g[r * n + c] += y[c] * (gy[c] - dot);
    }
  });
}

Tensor normalize_sum(const Tensor& x) {
  const double total = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  if (!(total > 0)) throw NumericError("normalize_sum: non-positive total " + std::to_string(total));
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] / total;
  return make_result(x.shape(), std::move(out), {x}, [total](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    double dot = 0.0;
    for (std::size_t i = 0; i < self.grad.size(); ++i) dot += self.grad[i] * self.value[i];
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += (self.grad[i] - dot) / total;
  });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_size(shape) != x.size())
    throw DimensionError("reshape " + shape_to_string(x.shape()) + " to " + shape_to_string(shape));
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t axis) {
  if (parts.empty()) throw DimensionError("concat of zero tensors");
  const auto rank = parts.front().rank();
  if (rank > 2 || axis >= rank) throw DimensionError("concat: axis " + std::to_string(axis) + " invalid for rank " + std::to_string(rank));
  for (const auto& p : parts) {
    if (p.rank() != rank) throw DimensionError("concat: mixed ranks");
    for (std::size_t ax = 0; ax < rank; ++ax)
      if (ax != axis && p.shape()[ax] != parts.front().shape()[ax])
        throw DimensionError("concat: side dimensions of " + shape_to_string(parts.front().shape()) +
                             " and " + shape_to_string(p.shape()) + " differ");
  }
  // View every part as outer×inner blocks: outer = rows for axis 1, 1 otherwise.
  const std::size_t outer = (rank == 2 && axis == 1) ? parts.front().shape()[0] : 1;
  std::vector<std::size_t> inner;
  std::size_t total_inner = 0;
  for (const auto& p : parts) {
    inner.push_back(p.size() / outer);
    total_inner += inner.back();
  }
  std::vector<double> out(outer * total_inner);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    auto d = parts[k].data();
    for (std::size_t o = 0; o < outer; ++o)
      std::copy_n(d.data() + o * inner[k], inner[k], out.data() + o * total_inner + offset);
    offset += inner[k];
  }
  Shape shape = parts.front().shape();
  shape[axis] = 0;
  for (const auto& p : parts) shape[axis] += p.shape()[axis];
  return make_result(std::move(shape), std::move(out), parts, [outer, inner, total_inner](Node& self) {
    std::size_t offset = 0;
    for (std::size_t k = 0; k < inner.size(); ++k) {
      Node& p = parent(self, k);
      if (p.requires_grad) {
        auto& g = p.grad_for_accumulate();
        for (std::size_t o = 0; o < outer; ++o)
          for (std::size_t i = 0; i < inner[k]; ++i)
            g[o * inner[k] + i] += self.grad[o * total_inner + offset + i];
      }
      offset += inner[k];
    }
  });
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
  require_matrix(x, "slice_rows");
  if (begin >= end || end > x.rows())
    throw DimensionError("slice_rows [" + std::to_string(begin) + "," + std::to_string(end) + ") of " +
                         shape_to_string(x.shape()));
  const auto n = x.cols();
  std::vector<double> out(x.data().begin() + begin * n, x.data().begin() + end * n);
  return make_result({end - begin, n}, std::move(out), {x}, [begin, n](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * n + i] += self.grad[i];
  });
}

Tensor pick(const Tensor& x, std::size_t index) {
  if (index >= x.size())
    throw DimensionError("pick index " + std::to_string(index) + " outside " + shape_to_string(x.shape()));
  return make_result({1}, {x[index]}, {x}, [index](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    p.grad_for_accumulate()[index] += self.grad[0];
  });
}

Tensor tile_rows(const Tensor& v, std::size_t n) {
  if (!(v.rank() == 1 || (v.rank() == 2 && v.shape()[0] == 1)))
    throw DimensionError("tile_rows expects a vector, got " + shape_to_string(v.shape()));
  if (n == 0) throw DimensionError("tile_rows with zero rows");
  const auto d = v.size();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) std::copy_n(v.data().data(), d, out.data() + r * d);
  return make_result({n, d}, std::move(out), {v}, [n, d](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < d; ++c) g[c] += self.grad[r * d + c];
  });
}

MaxPool maxpool_axis(const Tensor& x, std::size_t axis) {
  if (x.rank() > 2 || axis >= x.rank())
    throw DimensionError("maxpool_axis: axis " + std::to_string(axis) + " invalid for " + shape_to_string(x.shape()));
  // Generic view: outer × extent × inner, pooling the middle index.
  const std::size_t extent = x.shape()[axis];
  const std::size_t outer = (x.rank() == 2 && axis == 1) ? x.shape()[0] : 1;
  const std::size_t inner = (x.rank() == 2 && axis == 0) ? x.shape()[1] : 1;
  if (extent == 0) throw DimensionError("maxpool_axis over an empty axis");
  auto in = x.data();
  std::vector<double> out(outer * inner);
  std::vector<std::size_t> arg(outer * inner, 0);
  std::vector<std::size_t> src(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      std::size_t best = 0;
      double best_v = in[o * extent * inner + i];
      for (std::size_t e = 1; e < extent; ++e) {
        const double v = in[(o * extent + e) * inner + i];
        if (v > best_v) best_v = v, best = e;
      }
      out[o * inner + i] = best_v;
      arg[o * inner + i] = best;
      src[o * inner + i] = (o * extent + best) * inner + i;
    }
  Shape shape;
  for (std::size_t ax = 0; ax < x.rank(); ++ax)
    if (ax != axis) shape.push_back(x.shape()[ax]);
  if (shape.empty()) shape.push_back(1);
  Tensor values = make_result(std::move(shape), std::move(out), {x}, [src](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < src.size(); ++i) g[src[i]] += self.grad[i];
  });
  return {std::move(values), std::move(arg)};
}

Tensor mean_axis(const Tensor& x, std::size_t axis) {
  if (x.rank() > 2 || axis >= x.rank())
    throw DimensionError("mean_axis: axis " + std::to_string(axis) + " invalid for " + shape_to_string(x.shape()));
  const std::size_t extent = x.shape()[axis];
  const std::size_t outer = (x.rank() == 2 && axis == 1) ? x.shape()[0] : 1;
  const std::size_t inner = (x.rank() == 2 && axis == 0) ? x.shape()[1] : 1;
  auto in = x.data();
  std::vector<double> out(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t e = 0; e < extent; ++e)
      for (std::size_t i = 0; i < inner; ++i) out[o * inner + i] += in[(o * extent + e) * inner + i];
  for (auto& v : out) v /= static_cast<double>(extent);
  Shape shape;
  for (std::size_t ax = 0; ax < x.rank(); ++ax)
    if (ax != axis) shape.push_back(x.shape()[ax]);
  if (shape.empty()) shape.push_back(1);
  return make_result(std::move(shape), std::move(out), {x}, [outer, extent, inner](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    const double w = 1.0 / static_cast<double>(extent);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t e = 0; e < extent; ++e)
        for (std::size_t i = 0; i < inner; ++i) g[(o * extent + e) * inner + i] += w * self.grad[o * inner + i];
  });
}

Tensor sum(const Tensor& x) {
  const double total = std::accumulate(x.data().begin(), x.data().end(), 0.0);
  return make_result({1}, {total}, {x}, [](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (auto& v : g) v += self.grad[0];
  });
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor segment_means(const Tensor& x, const std::vector<std::pair<std::size_t, std::size_t>>& intervals) {
  require_matrix(x, "segment_means");
  if (intervals.empty()) throw DimensionError("segment_means with no intervals");
  const auto n = x.rows(), d = x.cols();
  for (auto [b, e] : intervals)
    if (b >= e || e > n)
      throw DimensionError("segment_means interval [" + std::to_string(b) + "," + std::to_string(e) +
                           ") outside " + std::to_string(n) + " rows");
  // Prefix sums make each interval O(d).
  std::vector<double> prefix((n + 1) * d, 0.0);
  auto in = x.data();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < d; ++c) prefix[(r + 1) * d + c] = prefix[r * d + c] + in[r * d + c];
  std::vector<double> out(intervals.size() * d);
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    auto [b, e] = intervals[k];
    const double w = 1.0 / static_cast<double>(e - b);
    for (std::size_t c = 0; c < d; ++c) out[k * d + c] = (prefix[e * d + c] - prefix[b * d + c]) * w;
  }
  return make_result({intervals.size(), d}, std::move(out), {x}, [intervals, d](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t k = 0; k < intervals.size(); ++k) {
      auto [b, e] = intervals[k];
      const double w = 1.0 / static_cast<double>(e - b);
      for (std::size_t r = b; r < e; ++r)
        for (std::size_t c = 0; c < d; ++c) g[r * d + c] += w * self.grad[k * d + c];
    }
  });
}

Tensor conv1d(const Tensor& signal, const Tensor& kernel, const Tensor& bias) {
  if (signal.rank() != 1 || kernel.rank() != 1 || bias.size() != 1)
    throw DimensionError("conv1d expects vector signal and kernel plus scalar bias, got " +
                         shape_to_string(signal.shape()) + ", " + shape_to_string(kernel.shape()) + ", " +
                         shape_to_string(bias.shape()));
  const std::size_t k = kernel.size();
  if (k % 2 == 0) throw ConfigError("conv1d kernel width must be odd, got " + std::to_string(k));
  const std::size_t n = signal.size();
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  auto s = signal.data();
  auto w = kernel.data();
  std::vector<double> out(n, bias[0]);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      const auto src = static_cast<std::ptrdiff_t>(i + j) - half;
      if (src >= 0 && src < static_cast<std::ptrdiff_t>(n)) out[i] += w[j] * s[static_cast<std::size_t>(src)];
    }
  return make_result({n}, std::move(out), {signal, kernel, bias}, [n, k, half](Node& self) {
    Node& ps = parent(self, 0);
    Node& pk = parent(self, 1);
    Node& pb = parent(self, 2);
    std::vector<double>* gs = ps.requires_grad ? &ps.grad_for_accumulate() : nullptr;
    std::vector<double>* gk = pk.requires_grad ? &pk.grad_for_accumulate() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        const auto src = static_cast<std::ptrdiff_t>(i + j) - half;
        if (src < 0 || src >= static_cast<std::ptrdiff_t>(n)) continue;
        const auto si = static_cast<std::size_t>(src);
        if (gs) (*gs)[si] += pk.value[j] * self.grad[i];
        if (gk) (*gk)[j] += ps.value[si] * self.grad[i];
      }
    if (pb.requires_grad) {
      auto& gb = pb.grad_for_accumulate();
      for (double g : self.grad) gb[0] += g;
    }
  });
}

Tensor pairwise_sqdist(const Tensor& x, const Tensor& y) {
  require_matrix(x, "pairwise_sqdist");
  require_matrix(y, "pairwise_sqdist");
  if (x.cols() != y.cols())
    throw DimensionError("pairwise_sqdist: " + shape_to_string(x.shape()) + " vs " + shape_to_string(y.shape()));
  const auto n = x.rows(), m = y.rows(), d = x.cols();
  auto xs = x.data();
  auto ys = y.data();
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double acc = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        const double diff = xs[i * d + c] - ys[j * d + c];
        acc += diff * diff;
      }
      out[i * m + j] = acc;
    }
  return make_result({n, m}, std::move(out), {x, y}, [n, m, d](Node& self) {
    Node& px = parent(self, 0);
    Node& py = parent(self, 1);
    std::vector<double>* gx = px.requires_grad ? &px.grad_for_accumulate() : nullptr;
    std::vector<double>* gy = py.requires_grad ? &py.grad_for_accumulate() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) {
        const double g = 2.0 * self.grad[i * m + j];
        if (g == 0.0) continue;
        for (std::size_t c = 0; c < d; ++c) {
          const double diff = px.value[i * d + c] - py.value[j * d + c];
          if (gx) (*gx)[i * d + c] += g * diff;
          if (gy) (*gy)[j * d + c] -= g * diff;
        }
      }
  });
}

Tensor grad_reverse(const Tensor& x, double lambda) {
  if (lambda < 0) throw ConfigError("grad_reverse lambda must be non-negative");
  std::vector<double> out(x.data().begin(), x.data().end());
  return make_result(x.shape(), std::move(out), {x}, [lambda](Node& self) {
    Node& p = parent(self, 0);
    if (!p.requires_grad) return;
    auto& g = p.grad_for_accumulate();
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += -lambda * self.grad[i];
  });
}

}  // namespace eva::ad
