#include "dane/diffnum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dane/error.hpp"

namespace dane::diff {

namespace {

[[noreturn]] void shape_error(const char* primitive, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(primitive) + ": incompatible shapes " + a.shape_string() +
                   " and " + b.shape_string());
}

void check_same_tape(const char* primitive, Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) {
    throw Error(std::string(primitive) + ": operands belong to different tapes");
  }
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(sigmoid(x)) = -log1p(exp(-x)), evaluated without overflow.
double stable_log_sigmoid(double x) {
  if (x >= 0.0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Elementwise map whose derivative is expressed through input x and output y.
template <typename F, typename D>
Var elementwise(Var a, F forward, D derivative) {
  Tensor out = a.value();
  for (double& x : out.data()) x = forward(x);
  const Var inputs[] = {a};
  Tape* tape_ptr = a.tape;
  const std::size_t out_id = tape_ptr->size();
  return tape_ptr->record(inputs, std::move(out), [a, out_id, derivative](Tape& tape,
                                                                          const Tensor& g) {
    const Tensor& x = tape.value(a);
    const Tensor& y = tape.value(Var{&tape, out_id});
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * derivative(x[i], y[i]);
  });
}

// y += a0 x0 + a1 x1 + a2 x2 + a3 x3 over n entries.
void axpy4(double* __restrict y, const double* __restrict x0, const double* __restrict x1,
           const double* __restrict x2, const double* __restrict x3, double a0, double a1,
           double a2, double a3, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += a0 * x0[j] + a1 * x1[j] + a2 * x2[j] + a3 * x3[j];
}

// y += a * x over n entries.
void axpy(double* __restrict y, const double* __restrict x, double a, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += a * x[j];
}

// C += A B with A (m x k), B (k x n).
void gemm_nn(Tensor& C, const Tensor& A, const Tensor& B) {
  const std::size_t k = A.cols(), n = B.cols();
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double* c = C.row(i).data();
    const double* a = A.row(i).data();
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      axpy4(c, B.row(p).data(), B.row(p + 1).data(), B.row(p + 2).data(), B.row(p + 3).data(),
            a[p], a[p + 1], a[p + 2], a[p + 3], n);
    }
    for (; p < k; ++p) axpy(c, B.row(p).data(), a[p], n);
  }
}

// C += A^T B with A (m x k), B (m x n).
void gemm_tn(Tensor& C, const Tensor& A, const Tensor& B) {
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double *a0 = A.row(i).data(), *a1 = A.row(i + 1).data(), *a2 = A.row(i + 2).data(),
                 *a3 = A.row(i + 3).data();
    const double *b0 = B.row(i).data(), *b1 = B.row(i + 1).data(), *b2 = B.row(i + 2).data(),
                 *b3 = B.row(i + 3).data();
    for (std::size_t p = 0; p < k; ++p) {
      axpy4(C.row(p).data(), b0, b1, b2, b3, a0[p], a1[p], a2[p], a3[p], n);
    }
  }
  for (; i < m; ++i) {
    const double* b = B.row(i).data();
    for (std::size_t p = 0; p < k; ++p) axpy(C.row(p).data(), b, A(i, p), n);
  }
}

Tensor transpose(const Tensor& A) {
  Tensor T(A.cols(), A.rows());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) T(j, i) = A(i, j);
  return T;
}

}  // namespace

const Tensor& Var::value() const { return tape->value(*this); }

Var Tape::constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(Parameter& param) {
  nodes_.push_back(Node{param.value, {}, {}, &param, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(std::span<const Var> inputs, Tensor value, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw Error("record: input from a different tape");
    needs = needs || nodes_[in.id].requires_grad;
  }
  for (double x : value.data()) {
    if (!std::isfinite(x)) throw Error("non-finite value produced by primitive");
  }
  nodes_.push_back(Node{std::move(value), {}, needs ? std::move(backward) : BackwardFn{},
                        nullptr, needs});
  return Var{this, nodes_.size() - 1};
}

const Tensor& Tape::value(Var v) const { return nodes_.at(v.id).value; }

Tensor Tape::gradient(Var v) const {
  const Node& node = nodes_.at(v.id);
  if (node.grad.empty()) return Tensor(node.value.rows(), node.value.cols());
  return node.grad;
}

Tensor& Tape::grad_buffer(Var target) {
  Node& node = nodes_[target.id];
  if (node.grad.empty() && !node.value.empty()) {
    node.grad = Tensor(node.value.rows(), node.value.cols());
  }
  return node.grad;
}

void Tape::accumulate(Var target, const Tensor& grad) {
  if (!nodes_[target.id].requires_grad) return;
  Tensor& buf = grad_buffer(target);
  for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += grad[i];
}


void Tape::backward(Var output, const Tensor& seed) {
  if (consumed_) throw Error("backward: tape already consumed");
  if (output.tape != this) throw Error("backward: output from a different tape");
  const Tensor& out_value = nodes_[output.id].value;
  if (!seed.same_shape(out_value)) shape_error("backward seed", seed, out_value);
  consumed_ = true;
  if (!nodes_[output.id].requires_grad) return;
  grad_buffer(output) = seed;
  for (std::size_t i = output.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (node.grad.empty()) continue;
    if (node.param != nullptr) {
      Tensor& acc = node.param->grad;
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += node.grad[k];
    } else if (node.backward) {
      // The callback may grow other nodes' buffers but never this one.
      node.backward(*this, node.grad);
    }
  }
}

void Tape::backward(Var scalar_output) {
  const Tensor& v = value(scalar_output);
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("backward: implicit seed needs a 1x1 output, got " + v.shape_string());
  }
  backward(scalar_output, Tensor(1, 1, 1.0));
}

Var matmul(Var a, Var b) {
  check_same_tape("matmul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.rows()) shape_error("matmul", A, B);
  Tensor C(A.rows(), B.cols());
  gemm_nn(C, A, B);
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) gemm_nn(tape.grad_buffer(a), g, transpose(tape.value(b)));
    if (tape.requires_grad(b)) gemm_tn(tape.grad_buffer(b), tape.value(a), g);
  });
}

Var matmul_nt(Var a, Var b) {
  check_same_tape("matmul_nt", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.cols() != B.cols()) shape_error("matmul_nt", A, B);
  Tensor C(A.rows(), B.rows());
  gemm_nn(C, A, transpose(B));
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) gemm_nn(tape.grad_buffer(a), g, tape.value(b));
    if (tape.requires_grad(b)) gemm_tn(tape.grad_buffer(b), g, tape.value(a));
  });
}

Var mul(Var a, Var b) {
  check_same_tape("mul", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] *= B[i];
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    const Tensor& A = tape.value(a);
    const Tensor& B = tape.value(b);
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * B[i];
    }
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * A[i];
    }
  });
}

Var add(Var a, Var b) {
  check_same_tape("add", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] += B[i];
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    tape.accumulate(b, g);
  });
}

Var sub(Var a, Var b) {
  check_same_tape("sub", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C[i] -= B[i];
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var add_row(Var a, Var row) {
  check_same_tape("add_row", a, row);
  const Tensor& A = a.value();
  const Tensor& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) shape_error("add_row", A, R);
  Tensor C = A;
  for (std::size_t i = 0; i < C.rows(); ++i)
    for (std::size_t j = 0; j < C.cols(); ++j) C(i, j) += R(0, j);
  const Var inputs[] = {a, row};
  return a.tape->record(inputs, std::move(C), [a, row](Tape& tape, const Tensor& g) {
    tape.accumulate(a, g);
    if (tape.requires_grad(row)) {
      Tensor& gr = tape.grad_buffer(row);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
    }
  });
}

Var scale(Var a, double factor) {
  Tensor C = a.value();
  for (double& x : C.data()) x *= factor;
  const Var inputs[] = {a};
  return a.tape->record(inputs, std::move(C), [a, factor](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += factor * g[i];
  });
}

Var concat(Var a, Var b) {
  check_same_tape("concat", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rows() != B.rows()) shape_error("concat", A, B);
  const std::size_t ca = A.cols(), cb = B.cols();
  Tensor C(A.rows(), ca + cb);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    std::copy(A.row(i).begin(), A.row(i).end(), C.row(i).begin());
    std::copy(B.row(i).begin(), B.row(i).end(), C.row(i).begin() + static_cast<std::ptrdiff_t>(ca));
  }
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b, ca, cb](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < ca; ++j) ga(i, j) += g(i, j);
    }
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < cb; ++j) gb(i, j) += g(i, ca + j);
    }
  });
}

Var mean_rows(Var a) {
  const Tensor& A = a.value();
  Tensor C(1, A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i)
    for (std::size_t j = 0; j < A.cols(); ++j) C(0, j) += A(i, j);
  const double inv = A.rows() == 0 ? 0.0 : 1.0 / static_cast<double>(A.rows());
  for (double& x : C.data()) x *= inv;
  const Var inputs[] = {a};
  return a.tape->record(inputs, std::move(C), [a, inv](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < ga.rows(); ++i)
      for (std::size_t j = 0; j < ga.cols(); ++j) ga(i, j) += inv * g(0, j);
  });
}

// The neighborhood storage must outlive the backward pass.
Var neighbor_mean(Var a, Neighborhood nb) {
  const Tensor& A = a.value();
  if (nb.num_rows() != A.rows()) {
    throw ShapeError("neighbor_mean: neighborhood has " + std::to_string(nb.num_rows()) +
                     " rows, operand is " + A.shape_string());
  }
  const std::size_t cols = A.cols();
  Tensor C(A.rows(), cols);
  for (std::size_t v = 0; v < A.rows(); ++v) {
    const std::size_t deg = nb.degree(v);
    if (deg == 0) continue;
    double* c = &C(v, 0);
    for (std::size_t e = nb.offsets[v]; e < nb.offsets[v + 1]; ++e) {
      const double* src = &A(nb.indices[e], 0);
      for (std::size_t j = 0; j < cols; ++j) c[j] += src[j];
    }
    const double inv = 1.0 / static_cast<double>(deg);
    for (std::size_t j = 0; j < cols; ++j) c[j] *= inv;
  }
  const Var inputs[] = {a};
  return a.tape->record(inputs, std::move(C), [a, nb, cols](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t v = 0; v < nb.num_rows(); ++v) {
      const std::size_t deg = nb.degree(v);
      if (deg == 0) continue;
      const double inv = 1.0 / static_cast<double>(deg);
      const double* gv = &g(v, 0);
      for (std::size_t e = nb.offsets[v]; e < nb.offsets[v + 1]; ++e) {
        double* dst = &ga(nb.indices[e], 0);
        for (std::size_t j = 0; j < cols; ++j) dst[j] += inv * gv[j];
      }
    }
  });
}

Var tanh(Var a) {
  return elementwise(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return elementwise(a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var log_sigmoid(Var a) {
  return elementwise(a, stable_log_sigmoid,
                     [](double x, double) { return stable_sigmoid(-x); });
}

Var softmax(Var a) {
  const Tensor& A = a.value();
  Tensor C(A.rows(), A.cols());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    const auto in = A.row(i);
    auto out = C.row(i);
    const double shift = in.empty() ? 0.0 : *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - shift);
      total += out[j];
    }
    for (double& x : out) x /= total;
  }
  const Var inputs[] = {a};
  Tape* tape_ptr = a.tape;
  const std::size_t out_id = tape_ptr->size();
  return tape_ptr->record(inputs, std::move(C), [a, out_id](Tape& tape, const Tensor& g) {
    const Tensor& Y = tape.value(Var{&tape, out_id});
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < Y.rows(); ++i) {
      double inner = 0.0;
      for (std::size_t j = 0; j < Y.cols(); ++j) inner += g(i, j) * Y(i, j);
      for (std::size_t j = 0; j < Y.cols(); ++j) ga(i, j) += Y(i, j) * (g(i, j) - inner);
    }
  });
}

Var dot(Var a, Var b) {
  check_same_tape("dot", a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (!A.same_shape(B)) shape_error("dot", A, B);
  Tensor C(A.rows(), 1);
  for (std::size_t i = 0; i < A.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < A.cols(); ++j) s += A(i, j) * B(i, j);
    C(i, 0) = s;
  }
  const Var inputs[] = {a, b};
  return a.tape->record(inputs, std::move(C), [a, b](Tape& tape, const Tensor& g) {
    const Tensor& A = tape.value(a);
    const Tensor& B = tape.value(b);
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) ga(i, j) += g(i, 0) * B(i, j);
    }
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad_buffer(b);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) gb(i, j) += g(i, 0) * A(i, j);
    }
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const Var inputs[] = {a};
  return a.tape->record(inputs, Tensor(1, 1, s), [a](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad_buffer(a);
    for (double& x : ga.data()) x += g[0];
  });
}

Var gather_rows(Var a, std::span<const std::uint32_t> rows) {
  const Tensor& A = a.value();
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  Tensor C(idx.size(), A.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= A.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(idx[i]) + " out of range for " +
                       A.shape_string());
    }
    std::copy(A.row(idx[i]).begin(), A.row(idx[i]).end(), C.row(i).begin());
  }
  const Var inputs[] = {a};
  return a.tape->record(inputs, std::move(C),
                        [a, idx = std::move(idx)](Tape& tape, const Tensor& g) {
                          Tensor& ga = tape.grad_buffer(a);
                          for (std::size_t i = 0; i < idx.size(); ++i) {
                            auto dst = ga.row(idx[i]);
                            auto src = g.row(i);
                            for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                          }
                        });
}

Var column(Var a, std::size_t col) {
  const Tensor& A = a.value();
  if (col >= A.cols()) {
    throw ShapeError("column: index " + std::to_string(col) + " out of range for " +
                     A.shape_string());
  }
  Tensor C(A.rows(), 1);
  for (std::size_t i = 0; i < A.rows(); ++i) C(i, 0) = A(i, col);
  const Var inputs[] = {a};
  return a.tape->record(inputs, std::move(C), [a, col](Tape& tape, const Tensor& g) {
    Tensor& ga = tape.grad_buffer(a);
    for (std::size_t i = 0; i < g.rows(); ++i) ga(i, col) += g(i, 0);
  });
}

Var scale_rows(Var a, Var f) {
  check_same_tape("scale_rows", a, f);
  const Tensor& A = a.value();
  const Tensor& F = f.value();
  if (F.rows() != A.rows() || F.cols() != 1) shape_error("scale_rows", A, F);
  Tensor C = A;
  for (std::size_t i = 0; i < C.rows(); ++i)
    for (double& x : C.row(i)) x *= F(i, 0);
  const Var inputs[] = {a, f};
  return a.tape->record(inputs, std::move(C), [a, f](Tape& tape, const Tensor& g) {
    const Tensor& A = tape.value(a);
    const Tensor& F = tape.value(f);
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad_buffer(a);
      for (std::size_t i = 0; i < A.rows(); ++i)
        for (std::size_t j = 0; j < A.cols(); ++j) ga(i, j) += g(i, j) * F(i, 0);
    }
    if (tape.requires_grad(f)) {
      Tensor& gf = tape.grad_buffer(f);
      for (std::size_t i = 0; i < A.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < A.cols(); ++j) s += g(i, j) * A(i, j);
        gf(i, 0) += s;
      }
    }
  });
}

GradCheckResult grad_check(const ScalarFn& fn, std::span<Parameter* const> params,
                           double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    throw Error("grad_check: epsilon must lie in [1e-7, 1e-3]");
  }
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    Var out = fn(tape);
    tape.backward(out);
  }
  auto evaluate = [&fn]() {
    Tape tape;
    const Tensor& v = fn(tape).value();
    if (v.size() != 1) throw ShapeError("grad_check: function must return a 1x1 value");
    return v[0];
  };

  GradCheckResult result;
  for (Parameter* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double original = p->value[i];
      p->value[i] = original + epsilon;
      const double plus = evaluate();
      p->value[i] = original - epsilon;
      const double minus = evaluate();
      p->value[i] = original;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double analytic = p->grad[i];
      const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
      if (err > result.max_relative_error) {
        result = {err, p->name, i};
      }
    }
  }
  return result;
}

}  // namespace dane::diff
