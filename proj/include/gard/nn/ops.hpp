#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gard/nn/tape.hpp"

namespace gard::nn {

// Binary elementwise ops. `b` may match `a`, or be 1x1, 1xc (row broadcast)
// or rx1 (column broadcast).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);

Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var matmul(Var a, Var b);

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);

Var relu(Var a);
Var leaky_relu(Var a, double slope = 0.2);
Var sigmoid(Var a);
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);

/// Full reductions to 1x1.
Var sum(Var a);
Var mean(Var a);
/// Reduce over rows: r x c -> 1 x c.
Var sum_rows(Var a);
Var mean_rows(Var a);

/// Softmax along an axis: axis 1 normalizes each row, axis 0 each column.
Var softmax(Var a, int axis = 1);
Var log_softmax(Var a, int axis = 1);
/// log(sum(exp(a))) over every entry, stabilized by the max.
Var logsumexp(Var a);

Var gather_rows(Var a, std::span<const std::size_t> rows);
Var embedding_lookup(Var table, std::span<const int> ids);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
/// 1 x c -> r x c.
Var broadcast_rows(Var a, std::size_t rows);
Var reshape(Var a, std::size_t rows, std::size_t cols);
/// Entries at flat row-major indices, as a k x 1 column.
Var gather_elements(Var a, std::span<const std::size_t> flat);

/// Row-wise scatter-add: out[segment[e]] += a[e].
Var segment_sum(Var a, std::span<const std::size_t> segment, std::size_t segments);
/// Softmax of an E x 1 column within each segment.
Var segment_softmax(Var a, std::span<const std::size_t> segment, std::size_t segments);

}  // namespace gard::nn
