#include <doctest.h>

#include <cmath>

#include "dane/diffnum.hpp"
#include "dane/error.hpp"
#include "fixtures.hpp"

using namespace dane;
using namespace dane::diff;

namespace {

Var param(Tape& tape, Parameter& p) { return tape.parameter(p); }

}  // namespace

TEST_SUITE("diffnum") {

TEST_CASE("primitive forward values") {
  Tape tape;
  const Var z = tape.constant(Tensor(1, 3));
  CHECK(tanh(z).value() == Tensor(1, 3, 0.0));
  CHECK(sigmoid(z).value() == Tensor(1, 3, 0.5));
  const Tensor x = Tensor::from_rows({{1, 2}, {3, 4}, {5, 6}});
  CHECK(matmul(tape.constant(Tensor::identity(3)), tape.constant(x)).value() == x);
  CHECK(mean_rows(tape.constant(Tensor::from_rows({{1, 3}, {3, 5}}))).value() ==
        Tensor::from_rows({{2, 4}}));
  CHECK(mean_rows(tape.constant(Tensor(0, 2))).value() == Tensor(1, 2));
  CHECK(concat(tape.constant(Tensor::from_rows({{1}})), tape.constant(Tensor::from_rows({{2, 3}})))
            .value() == Tensor::from_rows({{1, 2, 3}}));
  CHECK(dot(tape.constant(Tensor::from_rows({{1, 2}})), tape.constant(Tensor::from_rows({{3, 4}})))
            .value()[0] == 11.0);
}

TEST_CASE("shape mismatch names the primitive and shapes") {
  Tape tape;
  const Var a = tape.constant(Tensor(2, 3));
  const Var b = tape.constant(Tensor(2, 3));
  try {
    matmul(a, b);
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("matmul") != std::string::npos);
    CHECK(what.find("2x3") != std::string::npos);
  }
  CHECK_THROWS_AS(add(a, tape.constant(Tensor(3, 2))), ShapeError);
  CHECK_THROWS_AS(concat(a, tape.constant(Tensor(3, 2))), ShapeError);
}

TEST_CASE("dot gradient is the other operand") {
  Rng rng(1);
  Parameter a("a", fixtures::random_tensor(1, 4, rng));
  Parameter b("b", fixtures::random_tensor(1, 4, rng));
  Tape tape;
  tape.backward(dot(param(tape, a), param(tape, b)));
  CHECK(a.grad == b.value);
  CHECK(b.grad == a.value);
}

TEST_CASE("backward on a consumed tape fails") {
  Parameter a("a", Tensor(1, 1, 2.0));
  Tape tape;
  const Var y = sum(param(tape, a));
  tape.backward(y);
  CHECK(tape.consumed());
  CHECK_THROWS_AS(tape.backward(y), Error);
}

TEST_CASE("grad_check on a linear map is exact") {
  Rng rng(2);
  Parameter w("w", fixtures::random_tensor(3, 4, rng));
  const Tensor x = fixtures::random_tensor(4, 1, rng);
  Parameter* params[] = {&w};
  // Central differences carry no truncation error here, so the widest step
  // keeps rounding noise lowest.
  const auto r = grad_check(
      [&](Tape& t) { return sum(matmul(t.parameter(w), t.constant(x))); }, params, 1e-3);
  CHECK(r.max_relative_error < 1e-10);
}

TEST_CASE("grad_check on tanh(Wx)") {
  Rng rng(3);
  Parameter w("w", fixtures::random_tensor(3, 4, rng));
  Parameter x("x", fixtures::random_tensor(4, 1, rng));
  Parameter* params[] = {&w, &x};
  const auto r = grad_check(
      [&](Tape& t) { return sum(tanh(matmul(t.parameter(w), t.parameter(x)))); }, params);
  CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("grad_check on a composite of every primitive") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    Parameter a("a", fixtures::random_tensor(m, k, rng));
    Parameter b("b", fixtures::random_tensor(k, n, rng));
    Parameter c("c", fixtures::random_tensor(m, n, rng));
    Parameter r("r", fixtures::random_tensor(1, n, rng));
    Parameter* params[] = {&a, &b, &c, &r};
    const std::vector<std::uint32_t> rows{0, static_cast<std::uint32_t>(m - 1), 0};
    const std::size_t offsets[] = {0, 2, 2, 3};
    const std::uint32_t indices[] = {1, 2, 0};
    auto fn = [&](Tape& t) {
      const Var ab = matmul(t.parameter(a), t.parameter(b));      // m x n
      const Var h = tanh(add(ab, t.parameter(c)));
      const Var s = sigmoid(sub(mul(h, t.parameter(c)), ab));
      const Var rows_ab = add_row(s, t.parameter(r));
      const Var cat = concat(rows_ab, scale(h, 0.7));                // m x 2n
      const Var sm = softmax(cat);
      const Var mr = mean_rows(mul(sm, cat));                        // 1 x 2n
      const Var nt = matmul_nt(cat, cat);                            // m x m
      const Var d = dot(gather_rows(cat, rows), gather_rows(cat, rows));
      const Var stacked = gather_rows(cat, rows);
      const Var nm = neighbor_mean(stacked, Neighborhood{offsets, indices});
      const Var sr = scale_rows(nm, column(stacked, 0));
      const Var ls = log_sigmoid(d);
      return add(add(sum(mr), sum(nt)), add(add(sum(ls), sum(sr)), sum(column(sm, 0))));
    };
    CHECK(grad_check(fn, params).max_relative_error < 1e-4);
  }
}

TEST_CASE("grad_check detects a corrupted gradient rule") {
  Rng rng(4);
  Parameter x("x", fixtures::random_tensor(2, 3, rng));
  Parameter* params[] = {&x};
  // tanh with derivative 1 - y instead of 1 - y^2.
  auto bad_tanh = [](Var a) {
    Tensor y = a.value();
    for (double& e : y.data()) e = std::tanh(e);
    const Var inputs[] = {a};
    return a.tape->record(inputs, y, [a, y](Tape& tape, const Tensor& g) {
      Tensor ga(g.rows(), g.cols());
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] = g[i] * (1.0 - y[i]);
      tape.accumulate(a, ga);
    });
  };
  const auto r = grad_check([&](Tape& t) { return sum(bad_tanh(t.parameter(x))); }, params);
  CHECK(r.max_relative_error > 1e-2);
}

TEST_CASE("grad_check rejects epsilon outside [1e-7, 1e-3]") {
  Parameter x("x", Tensor(1, 1, 1.0));
  Parameter* params[] = {&x};
  auto fn = [&](Tape& t) { return sum(t.parameter(x)); };
  CHECK_THROWS_AS(grad_check(fn, params, 1e-2), Error);
  CHECK_NOTHROW(grad_check(fn, params, 1e-3));
}

TEST_CASE("backward is linear in the output") {
  Rng rng(5);
  Parameter w("w", fixtures::random_tensor(3, 3, rng));
  const Tensor x = fixtures::random_tensor(3, 2, rng);
  auto f = [&](Tape& t) { return sum(tanh(matmul(t.parameter(w), t.constant(x)))); };
  auto g = [&](Tape& t) { return sum(sigmoid(matmul(t.parameter(w), t.constant(x)))); };
  auto grad_of = [&](const std::function<Var(Tape&)>& fn) {
    w.zero_grad();
    Tape t;
    t.backward(fn(t));
    return w.grad;
  };
  const Tensor gf = grad_of(f), gg = grad_of(g);
  const Tensor combined = grad_of([&](Tape& t) { return add(scale(f(t), 2.0), scale(g(t), -0.5)); });
  for (std::size_t i = 0; i < combined.size(); ++i) {
    CHECK(combined[i] == doctest::Approx(2.0 * gf[i] - 0.5 * gg[i]).epsilon(1e-12));
  }
}

TEST_CASE("softmax sums to one and is shift-invariant") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor z = fixtures::random_tensor(3, 5, rng, 50.0);
    Tensor shifted = z;
    for (double& e : shifted.data()) e += 17.25;
    Tape tape;
    const Tensor a = softmax(tape.constant(z)).value();
    const Tensor b = softmax(tape.constant(shifted)).value();
    for (std::size_t r = 0; r < 3; ++r) {
      double s = 0.0;
      for (double e : a.row(r)) s += e;
      CHECK(std::abs(s - 1.0) < 1e-12);
    }
    CHECK(max_abs_diff(a, b) < 1e-12);
  }
}

TEST_CASE("primitives stay finite for inputs up to 50 in magnitude") {
  Tape tape;
  const Var x = tape.constant(Tensor::from_rows({{-50, -20, 0, 20, 50}}));
  for (const Var y : {tanh(x), sigmoid(x), softmax(x), log_sigmoid(x)}) {
    for (double e : y.value().data()) CHECK(std::isfinite(e));
  }
  CHECK(sigmoid(x).value()[0] > 0.0);
  CHECK(log_sigmoid(x).value()[0] == doctest::Approx(-50.0));
}

}  // TEST_SUITE
