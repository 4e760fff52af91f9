#pragma once

// Small reverse-mode differentiation engine over dense double matrices.
//
// A Tape records every primitive applied during one forward pass. Calling
// backward() walks the record in exact reverse order and accumulates
// gradients into the Parameters that were bound as leaves. A tape is used
// for a single forward/backward pair and then discarded.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dane/tensor.hpp"

namespace dane::diff {

// Named learnable tensor with its gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name(std::move(name)), value(std::move(value)),
        grad(this->value.rows(), this->value.cols()) {}

  void zero_grad() { grad.fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

// Compressed neighbor lists: neighbors of row v are
// indices[offsets[v] .. offsets[v+1]).
struct Neighborhood {
  std::span<const std::size_t> offsets;
  std::span<const std::uint32_t> indices;

  std::size_t num_rows() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::size_t degree(std::size_t v) const { return offsets[v + 1] - offsets[v]; }
};

class Tape;

// Handle to a value recorded on a tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  // Called during backward with the gradient of the node's output; must add
  // into the gradients of the inputs via Tape::accumulate.
  using BackwardFn = std::function<void(Tape&, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  // Leaf whose gradient is added into param.grad on backward. The value is
  // copied; the Parameter must outlive the tape.
  Var parameter(Parameter& param);

  // Records an arbitrary primitive. `backward` may be empty when no input
  // requires a gradient.
  Var record(std::span<const Var> inputs, Tensor value, BackwardFn backward);

  const Tensor& value(Var v) const;
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  // Gradient reached by `v` in the last backward pass (zeros when none).
  Tensor gradient(Var v) const;

  void accumulate(Var target, const Tensor& grad);
  Tensor& grad_buffer(Var target);

  void backward(Var output, const Tensor& seed);
  void backward(Var scalar_output);
  bool consumed() const { return consumed_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Primitives. Shapes are checked and violations raise ShapeError naming the
// primitive and the offending shapes.
Var matmul(Var a, Var b);        // (m x k)(k x n)
Var matmul_nt(Var a, Var b);     // a * b^T: (m x k)(n x k) -> m x n
Var mul(Var a, Var b);           // elementwise
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_row(Var a, Var row);     // adds a 1 x n row to every row of a
Var scale(Var a, double factor);
Var concat(Var a, Var b);        // row-wise [a ; b], same row count
Var mean_rows(Var a);            // -> 1 x cols, zero row for 0 x cols input
Var neighbor_mean(Var a, Neighborhood neighbors);  // row v = mean of a[u], u in N(v)
Var tanh(Var a);
Var sigmoid(Var a);
Var log_sigmoid(Var a);
Var softmax(Var a);              // row-wise softmax, max-shifted
Var dot(Var a, Var b);           // row-wise dot product -> rows x 1
Var sum(Var a);                  // -> 1 x 1
Var gather_rows(Var a, std::span<const std::uint32_t> rows);
Var column(Var a, std::size_t col);        // -> rows x 1
Var scale_rows(Var a, Var row_factors);    // a[r,:] * f[r], f is rows x 1

// Scalar-valued function of a set of parameters, rebuilt on a fresh tape
// for each evaluation.
using ScalarFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
};

// Compares backward() against central differences for every entry of every
// parameter. Relative error is |analytic - numeric| / max(1, |analytic|).
GradCheckResult grad_check(const ScalarFn& fn, std::span<Parameter* const> params,
                           double epsilon = 1e-6);

}  // namespace dane::diff
