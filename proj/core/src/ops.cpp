// SPDX-License-Identifier: Apache-2.0
#include "adcrnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "adcrnn/error.hpp"

namespace adcrnn::ad {
namespace {

void require(bool cond, const char* op, const std::string& what) {
  if (!cond) throw ShapeError(std::string(op) + ": " + what);
}

void require_same_tape(Var a, Var b) {
  if (a.tape != b.tape || a.tape == nullptr) {
    throw std::logic_error("op mixes variables from different tapes");
  }
}

// outer × axis × inner decomposition of a shape around `axis`.
struct AxisSplit {
  std::size_t outer = 1;
  std::size_t n = 1;
  std::size_t inner = 1;
};

AxisSplit split_axis(const Shape& s, std::size_t axis) {
  AxisSplit r;
  for (std::size_t i = 0; i < axis; ++i) r.outer *= s[i];
  r.n = s[axis];
  for (std::size_t i = axis + 1; i < s.size(); ++i) r.inner *= s[i];
  return r;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out.push_back(s[i]);
  return out;
}

template <class F>
Var unary(Var a, F&& fwd, auto&& dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = fwd(x[i]);
  return a.tape->record(std::move(y), {a},
                        [a, dfdx](Tape& t, std::size_t self) {
                          if (!t.requires_grad(a)) return;
                          const Tensor& x = t.value(a);
                          const Tensor& y = t.value(self);
                          const Tensor& gy = t.grad(self);
                          Tensor& gx = t.grad(a);
                          for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * dfdx(x[i], y[i]);
                        });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(B.rank() == 2, "matmul", "right operand must be rank 2, got " + shape_str(B.shape()));
  require(A.rank() == 1 || A.rank() == 2, "matmul",
          "left operand must be rank 1 or 2, got " + shape_str(A.shape()));
  const std::size_t m = A.rank() == 1 ? 1 : A.dim(0);
  const std::size_t k = A.rank() == 1 ? A.dim(0) : A.dim(1);
  const std::size_t n = B.dim(1);
  require(B.dim(0) == k, "matmul",
          "inner dimensions differ: " + shape_str(A.shape()) + " x " + shape_str(B.shape()));

  Tensor C(A.rank() == 1 ? Shape{n} : Shape{m, n});
  const double* pa = A.data().data();
  const double* pb = B.data().data();
  double* pc = C.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = pc + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      if (av == 0.0) continue;
      const double* brow = pb + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return a.tape->record(std::move(C), {a, b}, [a, b, m, k, n](Tape& t, std::size_t self) {
    const Tensor& gC = t.grad(self);
    const double* gc = gC.data().data();
    if (t.requires_grad(a)) {
      const double* pb = t.value(b).data().data();
      double* ga = t.grad(a).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = pb + p * n;
          const double* grow = gc + i * n;
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
          ga[i * k + p] += s;
        }
      }
    }
    if (t.requires_grad(b)) {
      const double* pa = t.value(a).data().data();
      double* gb = t.grad(b).data().data();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double av = pa[i * k + p];
          if (av == 0.0) continue;
          double* gbrow = gb + p * n;
          const double* grow = gc + i * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.shape() == B.shape()) {
    Tensor C = A;
    for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
    return a.tape->record(std::move(C), {a, b}, [a, b](Tape& t, std::size_t self) {
      const Tensor& g = t.grad(self);
      for (Var v : {a, b}) {
        if (!t.requires_grad(v)) continue;
        Tensor& gv = t.grad(v);
        for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
      }
    });
  }
  require(B.rank() == 1 && A.rank() >= 1 && A.shape().back() == B.dim(0), "add",
          "cannot broadcast " + shape_str(B.shape()) + " onto " + shape_str(A.shape()));
  const std::size_t n = B.dim(0);
  const std::size_t rows = A.size() / n;
  Tensor C = A;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t j = 0; j < n; ++j) C[r * n + j] += B[j];
  return a.tape->record(std::move(C), {a, b}, [a, b, rows, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad(b);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < n; ++j) gb[j] += g[r * n + j];
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  require(A.shape() == B.shape(), "mul",
          "shape mismatch " + shape_str(A.shape()) + " vs " + shape_str(B.shape()));
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  return a.tape->record(std::move(C), {a, b}, [a, b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Tensor& B = t.value(b);
      Tensor& ga = t.grad(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (t.requires_grad(b)) {
      const Tensor& A = t.value(a);
      Tensor& gb = t.grad(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var scale_rows(Var a, Var gates) {
  require_same_tape(a, gates);
  const Tensor& A = a.value();
  const Tensor& G = gates.value();
  require(A.rank() == 2 && G.rank() == 1 && G.dim(0) == A.dim(0), "scale_rows",
          "expected R×C and R, got " + shape_str(A.shape()) + " and " + shape_str(G.shape()));
  const std::size_t rows = A.dim(0), cols = A.dim(1);
  Tensor C = A;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) C[r * cols + c] *= G[r];
  return a.tape->record(std::move(C), {a, gates}, [a, gates, rows, cols](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(a)) {
      const Tensor& G = t.value(gates);
      Tensor& ga = t.grad(a);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) ga[r * cols + c] += g[r * cols + c] * G[r];
    }
    if (t.requires_grad(gates)) {
      const Tensor& A = t.value(a);
      Tensor& gg = t.grad(gates);
      for (std::size_t r = 0; r < rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < cols; ++c) s += g[r * cols + c] * A[r * cols + c];
        gg[r] += s;
      }
    }
  });
}

Var scale(Var a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var square(Var a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Var log_clamped(Var a, double floor) {
  return unary(
      a, [floor](double x) { return std::log(std::max(x, floor)); },
      [floor](double x, double) { return x > floor ? 1.0 / x : 0.0; });
}

Var relu(Var a) {
  return unary(a, [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Var a) {
  return unary(
      a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(a, [](double x) { return std::tanh(x); },
               [](double, double y) { return 1.0 - y * y; });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  require(!parts.empty(), "concat", "no inputs");
  const Shape& s0 = parts[0].value().shape();
  require(axis < s0.size(), "concat", "axis out of range for " + shape_str(s0));
  Shape out_shape = s0;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    require_same_tape(parts[0], p);
    const Shape& s = p.value().shape();
    bool ok = s.size() == s0.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == axis || s[i] == s0[i];
    require(ok, "concat", "incompatible shapes " + shape_str(s0) + " and " + shape_str(s));
    out_shape[axis] += s[axis];
    widths.push_back(s[axis]);
  }
  const AxisSplit sp = split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = parts[k].value();
    const std::size_t w = widths[k] * sp.inner;
    for (std::size_t o = 0; o < sp.outer; ++o) {
      std::copy_n(v.data().data() + o * w, w, out.data().data() + o * sp.n * sp.inner + offset);
    }
    offset += w;
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape->record(std::move(out), inputs,
                               [inputs, widths, sp](Tape& t, std::size_t self) {
                                 const Tensor& g = t.grad(self);
                                 std::size_t offset = 0;
                                 for (std::size_t k = 0; k < inputs.size(); ++k) {
                                   const std::size_t w = widths[k] * sp.inner;
                                   if (t.requires_grad(inputs[k])) {
                                     Tensor& gv = t.grad(inputs[k]);
                                     for (std::size_t o = 0; o < sp.outer; ++o) {
                                       const double* src = g.data().data() + o * sp.n * sp.inner + offset;
                                       double* dst = gv.data().data() + o * w;
                                       for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
                                     }
                                   }
                                   offset += w;
                                 }
                               });
}

Var concat(std::initializer_list<Var> parts, std::size_t axis) {
  return concat(std::span<const Var>(parts.begin(), parts.size()), axis);
}

Var slice(Var a, std::size_t axis, std::size_t begin, std::size_t end) {
  const Tensor& A = a.value();
  require(axis < A.rank(), "slice", "axis out of range for " + shape_str(A.shape()));
  require(begin < end && end <= A.dim(axis), "slice",
          "range [" + std::to_string(begin) + "," + std::to_string(end) + ") invalid for " +
              shape_str(A.shape()));
  const AxisSplit sp = split_axis(A.shape(), axis);
  Shape out_shape = A.shape();
  out_shape[axis] = end - begin;
  Tensor out(out_shape);
  const std::size_t w = (end - begin) * sp.inner;
  for (std::size_t o = 0; o < sp.outer; ++o) {
    std::copy_n(A.data().data() + o * sp.n * sp.inner + begin * sp.inner, w,
                out.data().data() + o * w);
  }
  return a.tape->record(std::move(out), {a}, [a, sp, begin, w](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      double* dst = ga.data().data() + o * sp.n * sp.inner + begin * sp.inner;
      const double* src = g.data().data() + o * w;
      for (std::size_t i = 0; i < w; ++i) dst[i] += src[i];
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var transpose(Var a) {
  const Tensor& A = a.value();
  require(A.rank() == 2, "transpose", "expected rank 2, got " + shape_str(A.shape()));
  const std::size_t r = A.dim(0), c = A.dim(1);
  Tensor out({c, r});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = A[i * c + j];
  return a.tape->record(std::move(out), {a}, [a, r, c](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[j * r + i];
  });
}

Var softmax(Var a, std::size_t axis) {
  const Tensor& A = a.value();
  require(axis < A.rank(), "softmax", "axis out of range for " + shape_str(A.shape()));
  const AxisSplit sp = split_axis(A.shape(), axis);
  Tensor Y(A.shape());
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t in = 0; in < sp.inner; ++in) {
      auto idx = [&](std::size_t k) { return (o * sp.n + k) * sp.inner + in; };
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < sp.n; ++k) mx = std::max(mx, A[idx(k)]);
      double z = 0.0;
      for (std::size_t k = 0; k < sp.n; ++k) {
        Y[idx(k)] = std::exp(A[idx(k)] - mx);
        z += Y[idx(k)];
      }
      for (std::size_t k = 0; k < sp.n; ++k) Y[idx(k)] /= z;
    }
  }
  return a.tape->record(std::move(Y), {a}, [a, sp](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& Y = t.value(self);
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t o = 0; o < sp.outer; ++o) {
      for (std::size_t in = 0; in < sp.inner; ++in) {
        auto idx = [&](std::size_t k) { return (o * sp.n + k) * sp.inner + in; };
        double dot = 0.0;
        for (std::size_t k = 0; k < sp.n; ++k) dot += g[idx(k)] * Y[idx(k)];
        for (std::size_t k = 0; k < sp.n; ++k) ga[idx(k)] += Y[idx(k)] * (g[idx(k)] - dot);
      }
    }
  });
}

Var sum(Var a) {
  const Tensor& A = a.value();
  double s = 0.0;
  for (double x : A.data()) s += x;
  return a.tape->record(Tensor(Shape{}, std::vector<double>{s}), {a},
                        [a](Tape& t, std::size_t self) {
                          if (!t.requires_grad(a)) return;
                          const double g = t.grad(self)[0];
                          Tensor& ga = t.grad(a);
                          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
                        });
}

Var mean(Var a, std::size_t axis) {
  const Tensor& A = a.value();
  require(axis < A.rank(), "mean", "axis out of range for " + shape_str(A.shape()));
  const AxisSplit sp = split_axis(A.shape(), axis);
  Tensor out(drop_axis(A.shape(), axis));
  const double inv = 1.0 / static_cast<double>(sp.n);
  for (std::size_t o = 0; o < sp.outer; ++o)
    for (std::size_t k = 0; k < sp.n; ++k)
      for (std::size_t in = 0; in < sp.inner; ++in)
        out[o * sp.inner + in] += A[(o * sp.n + k) * sp.inner + in] * inv;
  return a.tape->record(std::move(out), {a}, [a, sp, inv](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t o = 0; o < sp.outer; ++o)
      for (std::size_t k = 0; k < sp.n; ++k)
        for (std::size_t in = 0; in < sp.inner; ++in)
          ga[(o * sp.n + k) * sp.inner + in] += g[o * sp.inner + in] * inv;
  });
}

Var max(Var a, std::size_t axis) {
  const Tensor& A = a.value();
  require(axis < A.rank(), "max", "axis out of range for " + shape_str(A.shape()));
  const AxisSplit sp = split_axis(A.shape(), axis);
  Tensor out(drop_axis(A.shape(), axis));
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t o = 0; o < sp.outer; ++o) {
    for (std::size_t in = 0; in < sp.inner; ++in) {
      std::size_t best = o * sp.n * sp.inner + in;
      for (std::size_t k = 1; k < sp.n; ++k) {
        const std::size_t i = (o * sp.n + k) * sp.inner + in;
        if (A[i] > A[best]) best = i;
      }
      out[o * sp.inner + in] = A[best];
      argmax[o * sp.inner + in] = best;
    }
  }
  return a.tape->record(std::move(out), {a}, [a, argmax = std::move(argmax)](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < argmax.size(); ++i) ga[argmax[i]] += g[i];
  });
}

Var global_max_pool(Var a) {
  require(a.value().rank() >= 1, "global_max_pool", "scalar input");
  return max(a, a.value().rank() - 1);
}

Var dropout(Var a, double rate, bool train, Rng& rng) {
  require(rate >= 0.0 && rate < 1.0, "dropout", "rate must be in [0, 1), got " + std::to_string(rate));
  if (!train || rate == 0.0) return a;
  const Tensor& A = a.value();
  const double keep_scale = 1.0 / (1.0 - rate);
  std::vector<double> mask(A.size());
  for (double& m : mask) m = uniform01(rng) < rate ? 0.0 : keep_scale;
  Tensor out = A;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  return a.tape->record(std::move(out), {a}, [a, mask = std::move(mask)](Tape& t, std::size_t self) {
    if (!t.requires_grad(a)) return;
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

std::size_t conv1d_output_length(std::size_t length, std::size_t kernel, Conv1dSpec spec) {
  require(spec.stride >= 1, "conv1d", "stride must be >= 1");
  require(kernel >= 1, "conv1d", "kernel must be >= 1");
  require(length + 2 * spec.padding >= kernel, "conv1d",
          "padded length " + std::to_string(length + 2 * spec.padding) + " shorter than kernel " +
              std::to_string(kernel));
  return (length + 2 * spec.padding - kernel) / spec.stride + 1;
}

namespace {

// Output positions t in [lo, hi) for which input index t*stride + k - pad is in [0, L).
std::pair<std::size_t, std::size_t> valid_range(std::size_t L, std::size_t Lout, std::size_t k,
                                                Conv1dSpec s) {
  const auto pad = static_cast<std::ptrdiff_t>(s.padding);
  const auto kk = static_cast<std::ptrdiff_t>(k);
  const auto st = static_cast<std::ptrdiff_t>(s.stride);
  std::ptrdiff_t lo = 0;
  if (pad > kk) lo = (pad - kk + st - 1) / st;
  // t*st + k - pad <= L-1  =>  t <= (L-1+pad-k)/st
  const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(L) - 1 + pad - kk;
  std::ptrdiff_t hi = top < 0 ? 0 : top / st + 1;
  hi = std::min<std::ptrdiff_t>(hi, static_cast<std::ptrdiff_t>(Lout));
  if (hi < lo) hi = lo;
  return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
}

Var conv1d_impl(Var x, Var w, const Var* bias, Conv1dSpec spec) {
  require_same_tape(x, w);
  const Tensor& X = x.value();
  const Tensor& W = w.value();
  require(X.rank() == 2, "conv1d", "input must be C×L, got " + shape_str(X.shape()));
  require(W.rank() == 3, "conv1d", "kernels must be C'×C×K, got " + shape_str(W.shape()));
  const std::size_t C = X.dim(0), L = X.dim(1);
  const std::size_t Co = W.dim(0), K = W.dim(2);
  require(W.dim(1) == C, "conv1d",
          "kernel input channels " + std::to_string(W.dim(1)) + " != input channels " +
              std::to_string(C));
  if (bias) {
    require(bias->value().rank() == 1 && bias->value().dim(0) == Co, "conv1d",
            "bias must have " + std::to_string(Co) + " entries");
  }
  const std::size_t Lo = conv1d_output_length(L, K, spec);

  Tensor Y({Co, Lo});
  const double* px = X.data().data();
  const double* pw = W.data().data();
  double* py = Y.data().data();
  for (std::size_t o = 0; o < Co; ++o) {
    double* yrow = py + o * Lo;
    if (bias) std::fill_n(yrow, Lo, bias->value()[o]);
    for (std::size_t c = 0; c < C; ++c) {
      const double* xrow = px + c * L;
      for (std::size_t k = 0; k < K; ++k) {
        const double wv = pw[(o * C + c) * K + k];
        const auto [lo, hi] = valid_range(L, Lo, k, spec);
        const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(spec.padding);
        if (spec.stride == 1) {
          const double* xs = xrow + shift;
          for (std::size_t t = lo; t < hi; ++t) yrow[t] += wv * xs[t];
        } else {
          for (std::size_t t = lo; t < hi; ++t)
            yrow[t] += wv * xrow[static_cast<std::ptrdiff_t>(t * spec.stride) + shift];
        }
      }
    }
  }

  std::vector<Var> inputs{x, w};
  if (bias) inputs.push_back(*bias);
  const bool has_bias = bias != nullptr;
  return x.tape->record(std::move(Y), inputs,
                        [x, w, inputs, has_bias, C, L, Co, K, Lo, spec](Tape& t, std::size_t self) {
    const double* gy = t.grad(self).data().data();
    const double* px = t.value(x).data().data();
    const double* pw = t.value(w).data().data();
    const bool need_x = t.requires_grad(x);
    const bool need_w = t.requires_grad(w);
    double* gx = need_x ? t.grad(x).data().data() : nullptr;
    double* gw = need_w ? t.grad(w).data().data() : nullptr;
    for (std::size_t o = 0; o < Co; ++o) {
      const double* grow = gy + o * Lo;
      for (std::size_t c = 0; c < C; ++c) {
        const double* xrow = px + c * L;
        for (std::size_t k = 0; k < K; ++k) {
          const auto [lo, hi] = valid_range(L, Lo, k, spec);
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(spec.padding);
          const std::size_t widx = (o * C + c) * K + k;
          double acc = 0.0;
          for (std::size_t t2 = lo; t2 < hi; ++t2) {
            const std::ptrdiff_t xi = static_cast<std::ptrdiff_t>(t2 * spec.stride) + shift;
            if (need_w) acc += grow[t2] * xrow[xi];
            if (need_x) gx[c * L + static_cast<std::size_t>(xi)] += pw[widx] * grow[t2];
          }
          if (need_w) gw[widx] += acc;
        }
      }
    }
    if (has_bias && t.requires_grad(inputs[2])) {
      Tensor& gb = t.grad(inputs[2]);
      for (std::size_t o = 0; o < Co; ++o) {
        double s = 0.0;
        for (std::size_t t2 = 0; t2 < Lo; ++t2) s += gy[o * Lo + t2];
        gb[o] += s;
      }
    }
  });
}

}  // namespace

Var conv1d(Var x, Var w, Var bias, Conv1dSpec spec) { return conv1d_impl(x, w, &bias, spec); }

Var conv1d(Var x, Var w, Conv1dSpec spec) { return conv1d_impl(x, w, nullptr, spec); }

}  // namespace adcrnn::ad
