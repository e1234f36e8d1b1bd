#include "gard/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gard::nn {

namespace {

enum class Broadcast { kSame, kScalar, kRow, kCol };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.cols() == 1 && b.rows() == a.rows()) return Broadcast::kCol;
  throw ShapeError(std::string(op) + ": cannot broadcast " + b.shape_str() + " to " + a.shape_str());
}

std::size_t b_index(Broadcast k, std::size_t r, std::size_t c, std::size_t cols) {
  switch (k) {
    case Broadcast::kSame: return r * cols + c;
    case Broadcast::kScalar: return 0;
    case Broadcast::kRow: return c;
    case Broadcast::kCol: return r;
  }
  return 0;
}

template <class F>
Var unary(Var a, const char* op, F f, Tape::BackwardFn back) {
  const Tensor& av = a.value();
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  return a.tape().push(std::move(out), {a}, std::move(back), op);
}

}  // namespace

Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto kind = broadcast_kind(av, bv, "add");
  Tensor out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) {
      out(r, c) = av(r, c) + bv[b_index(kind, r, c, av.cols())];
    }
  }
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {a, b}, [ia, ib, kind](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb[b_index(kind, r, c, g.cols())] += g(r, c);
      }
    }
  }, "add");
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const auto kind = broadcast_kind(av, bv, "mul");
  Tensor out(av.rows(), av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) {
      out(r, c) = av(r, c) * bv[b_index(kind, r, c, av.cols())];
    }
  }
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {a, b}, [ia, ib, kind](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    const std::size_t cols = g.cols();
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) ga(r, c) += g(r, c) * bv[b_index(kind, r, c, cols)];
      }
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) gb[b_index(kind, r, c, cols)] += g(r, c) * av(r, c);
      }
    }
  }, "mul");
}

Var scale(Var a, double s) {
  const auto ia = a.id();
  return unary(a, "scale", [s](double x) { return x * s; }, [ia, s](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_scalar(Var a, double s) {
  const auto ia = a.id();
  return unary(a, "add_scalar", [s](double x) { return x + s; }, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: " + av.shape_str() + " x " + bv.shape_str());
  }
  const std::size_t n = av.rows(), k = av.cols(), m = bv.cols();
  Tensor out(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double x = av(i, p);
      if (x == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) out(i, j) += x * bv(p, j);
    }
  }
  const auto ia = a.id(), ib = b.id();
  return a.tape().push(std::move(out), {a, b}, [ia, ib, n, k, m](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      auto& ga = t.grad(ia);  // g * b^T
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < m; ++j) s += g(i, j) * bv(p, j);
          ga(i, p) += s;
        }
      }
    }
    if (t.requires_grad(ib)) {
      auto& gb = t.grad(ib);  // a^T * g
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double x = av(i, p);
          if (x == 0.0) continue;
          for (std::size_t j = 0; j < m; ++j) gb(p, j) += x * g(i, j);
        }
      }
    }
  }, "matmul");
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols of nothing");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw ShapeError("concat_cols: row counts differ");
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    const Tensor& v = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < v.cols(); ++c) out(r, off + c) = v(r, c);
    }
    off += v.cols();
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts[0].tape().push(std::move(out), std::vector<Var>(parts.begin(), parts.end()),
                              [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t q = 0; q < ids.size(); ++q) {
      if (!t.requires_grad(ids[q])) continue;
      auto& gp = t.grad(ids[q]);
      for (std::size_t r = 0; r < gp.rows(); ++r) {
        for (std::size_t c = 0; c < gp.cols(); ++c) gp(r, c) += g(r, offsets[q] + c);
      }
    }
  }, "concat_cols");
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows of nothing");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw ShapeError("concat_rows: column counts differ");
    rows += p.rows();
  }
  std::vector<double> data;
  data.reserve(rows * cols);
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    offsets.push_back(data.size());
    const auto d = p.value().data();
    data.insert(data.end(), d.begin(), d.end());
  }
  std::vector<std::size_t> ids;
  for (const auto& p : parts) ids.push_back(p.id());
  return parts[0].tape().push(Tensor(rows, cols, std::move(data)),
                              std::vector<Var>(parts.begin(), parts.end()),
                              [ids, offsets](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    for (std::size_t q = 0; q < ids.size(); ++q) {
      if (!t.requires_grad(ids[q])) continue;
      auto& gp = t.grad(ids[q]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[q] + i];
    }
  }, "concat_rows");
}

Var relu(Var a) {
  if (a.tape().tracking_branches()) a.tape().note_branches(a.value());
  const auto ia = a.id();
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; }, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += av[i] > 0.0 ? g[i] : 0.0;
  });
}

Var leaky_relu(Var a, double slope) {
  if (a.tape().tracking_branches()) a.tape().note_branches(a.value());
  const auto ia = a.id();
  return unary(a, "leaky_relu", [slope](double x) { return x > 0.0 ? x : slope * x; },
               [ia, slope](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += av[i] > 0.0 ? g[i] : slope * g[i];
  });
}

Var sigmoid(Var a) {
  const auto ia = a.id();
  return unary(a, "sigmoid",
               [](double x) {
                 return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
               },
               [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var tanh(Var a) {
  const auto ia = a.id();
  return unary(a, "tanh", [](double x) { return std::tanh(x); }, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var exp(Var a) {
  const auto ia = a.id();
  return unary(a, "exp", [](double x) { return std::exp(x); }, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i];
  });
}

Var log(Var a) {
  const auto ia = a.id();
  return unary(a, "log", [](double x) { return std::log(x); }, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] / av[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const auto ia = a.id();
  return a.tape().push(Tensor::scalar(s), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  }, "sum");
}

Var mean(Var a) {
  if (a.value().size() == 0) throw ShapeError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var sum_rows(Var a) {
  const Tensor& av = a.value();
  Tensor out(1, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    for (std::size_t c = 0; c < av.cols(); ++c) out[c] += av(r, c);
  }
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < ga.rows(); ++r) {
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g[c];
    }
  }, "sum_rows");
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows of an empty tensor");
  return scale(sum_rows(a), 1.0 / static_cast<double>(a.rows()));
}

namespace {

// Lanes are the rows (axis 1) or the columns (axis 0) being normalized.
struct Lanes {
  std::size_t count, length, lane_stride, elem_stride;
};

Lanes lanes_for(const Tensor& a, int axis) {
  if (axis == 1) return {a.rows(), a.cols(), a.cols(), 1};
  if (axis == 0) return {a.cols(), a.rows(), 1, a.cols()};
  throw ShapeError("softmax axis must be 0 or 1");
}

}  // namespace

Var softmax(Var a, int axis) {
  const Tensor& av = a.value();
  const Lanes L = lanes_for(av, axis);
  Tensor out(av.rows(), av.cols());
  for (std::size_t l = 0; l < L.count; ++l) {
    const std::size_t base = l * L.lane_stride;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.length; ++i) mx = std::max(mx, av[base + i * L.elem_stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < L.length; ++i) {
      const double e = std::exp(av[base + i * L.elem_stride] - mx);
      out[base + i * L.elem_stride] = e;
      z += e;
    }
    for (std::size_t i = 0; i < L.length; ++i) out[base + i * L.elem_stride] /= z;
  }
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, L](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t l = 0; l < L.count; ++l) {
      const std::size_t base = l * L.lane_stride;
      double dot = 0.0;
      for (std::size_t i = 0; i < L.length; ++i) {
        const std::size_t k = base + i * L.elem_stride;
        dot += g[k] * y[k];
      }
      for (std::size_t i = 0; i < L.length; ++i) {
        const std::size_t k = base + i * L.elem_stride;
        ga[k] += y[k] * (g[k] - dot);
      }
    }
  }, "softmax");
}

Var log_softmax(Var a, int axis) {
  const Tensor& av = a.value();
  const Lanes L = lanes_for(av, axis);
  Tensor out(av.rows(), av.cols());
  for (std::size_t l = 0; l < L.count; ++l) {
    const std::size_t base = l * L.lane_stride;
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < L.length; ++i) mx = std::max(mx, av[base + i * L.elem_stride]);
    double z = 0.0;
    for (std::size_t i = 0; i < L.length; ++i) z += std::exp(av[base + i * L.elem_stride] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t i = 0; i < L.length; ++i) {
      out[base + i * L.elem_stride] = av[base + i * L.elem_stride] - lse;
    }
  }
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, L](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    for (std::size_t l = 0; l < L.count; ++l) {
      const std::size_t base = l * L.lane_stride;
      double gs = 0.0;
      for (std::size_t i = 0; i < L.length; ++i) gs += g[base + i * L.elem_stride];
      for (std::size_t i = 0; i < L.length; ++i) {
        const std::size_t k = base + i * L.elem_stride;
        ga[k] += g[k] - std::exp(y[k]) * gs;
      }
    }
  }, "log_softmax");
}

Var logsumexp(Var a) {
  const Tensor& av = a.value();
  if (av.size() == 0) throw ShapeError("logsumexp of an empty tensor");
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : av.data()) mx = std::max(mx, x);
  double z = 0.0;
  for (double x : av.data()) z += std::exp(x - mx);
  const double lse = mx + std::log(z);
  const auto ia = a.id();
  return a.tape().push(Tensor::scalar(lse), {a}, [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    const double y = t.value(self)[0];
    const Tensor& av = t.value(ia);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < av.size(); ++i) ga[i] += g * std::exp(av[i] - y);
  }, "logsumexp");
}

Var gather_rows(Var a, std::span<const std::size_t> rows) {
  const Tensor& av = a.value();
  Tensor out(rows.size(), av.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= av.rows()) throw ShapeError("gather_rows: index out of range");
    for (std::size_t c = 0; c < av.cols(); ++c) out(r, c) = av(rows[r], c);
  }
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, idx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(idx[r], c) += g(r, c);
    }
  }, "gather_rows");
}

Var embedding_lookup(Var table, std::span<const int> ids) {
  std::vector<std::size_t> rows;
  rows.reserve(ids.size());
  for (int id : ids) {
    if (id < 0) throw ShapeError("embedding_lookup: negative id");
    rows.push_back(static_cast<std::size_t>(id));
  }
  return gather_rows(table, rows);
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) throw ShapeError("slice_rows out of range");
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = begin + i;
  return gather_rows(a, rows);
}

Var broadcast_rows(Var a, std::size_t rows) {
  if (a.rows() != 1) throw ShapeError("broadcast_rows needs a 1 x c input");
  std::vector<std::size_t> idx(rows, 0);
  return gather_rows(a, idx);
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  const Tensor& av = a.value();
  if (rows * cols != av.size()) throw ShapeError("reshape changes the element count");
  const auto ia = a.id();
  return a.tape().push(Tensor(rows, cols, av.storage()), {a}, [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  }, "reshape");
}

Var gather_elements(Var a, std::span<const std::size_t> flat) {
  const Tensor& av = a.value();
  Tensor out(flat.size(), 1);
  for (std::size_t i = 0; i < flat.size(); ++i) {
    if (flat[i] >= av.size()) throw ShapeError("gather_elements: index out of range");
    out[i] = av[flat[i]];
  }
  std::vector<std::size_t> idx(flat.begin(), flat.end());
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, idx](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t i = 0; i < idx.size(); ++i) ga[idx[i]] += g[i];
  }, "gather_elements");
}

Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments) {
  const Tensor& av = a.value();
  if (segment.size() != av.rows()) throw ShapeError("segment_sum: one segment id per row required");
  Tensor out(segments, av.cols());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    if (segment[r] >= segments) throw ShapeError("segment_sum: segment id out of range");
    for (std::size_t c = 0; c < av.cols(); ++c) out(segment[r], c) += av(r, c);
  }
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, seg](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    auto& ga = t.grad(ia);
    for (std::size_t r = 0; r < seg.size(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(seg[r], c);
    }
  }, "segment_sum");
}

Var segment_softmax(Var a, std::span<const std::size_t> segment, std::size_t segments) {
  const Tensor& av = a.value();
  if (av.cols() != 1) throw ShapeError("segment_softmax expects an E x 1 column");
  if (segment.size() != av.rows()) throw ShapeError("segment_softmax: one segment id per row required");
  std::vector<double> mx(segments, -std::numeric_limits<double>::infinity());
  for (std::size_t e = 0; e < av.rows(); ++e) {
    if (segment[e] >= segments) throw ShapeError("segment_softmax: segment id out of range");
    mx[segment[e]] = std::max(mx[segment[e]], av[e]);
  }
  std::vector<double> z(segments, 0.0);
  Tensor out(av.rows(), 1);
  for (std::size_t e = 0; e < av.rows(); ++e) {
    out[e] = std::exp(av[e] - mx[segment[e]]);
    z[segment[e]] += out[e];
  }
  for (std::size_t e = 0; e < av.rows(); ++e) out[e] /= z[segment[e]];
  std::vector<std::size_t> seg(segment.begin(), segment.end());
  const auto ia = a.id();
  return a.tape().push(std::move(out), {a}, [ia, seg, segments](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    auto& ga = t.grad(ia);
    std::vector<double> dot(segments, 0.0);
    for (std::size_t e = 0; e < seg.size(); ++e) dot[seg[e]] += g[e] * y[e];
    for (std::size_t e = 0; e < seg.size(); ++e) ga[e] += y[e] * (g[e] - dot[seg[e]]);
  }, "segment_softmax");
}

}  // namespace gard::nn
