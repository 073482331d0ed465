#include <cmath>
#include <numbers>

#include "doctest.h"
#include "grad_check.hpp"
#include "slotnav/error.hpp"
#include "slotnav/numkit/fd.hpp"
#include "slotnav/numkit/ops.hpp"

using namespace slotnav;
using namespace slotnav::numkit;
using slotnav::testing::max_input_grad_error;
using slotnav::testing::max_param_grad_error;
using slotnav::testing::weighted_sum;

TEST_CASE("linear: identity and zero input") {
  Tape t;
  Var y = linear(t, t.constant(Matrix::row({1, 0})), t.constant(Matrix::identity(2)),
                 t.constant(Matrix::row({0, 0})));
  CHECK(t.value(y) == Matrix::row({1, 0}));

  Rng rng(1);
  Var y2 = linear(t, t.constant(Matrix::row({0, 0})), t.constant(random_normal(rng, 2, 2, 1.0)),
                  t.constant(Matrix::row({3, -1})));
  CHECK(t.value(y2) == Matrix::row({3, -1}));
}

TEST_CASE("linear: dimension mismatch is a config error") {
  Tape t;
  try {
    linear(t, t.constant(Matrix(1, 3)), t.constant(Matrix(2, 2)), t.constant(Matrix(1, 2)));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
  }
}

TEST_CASE("linear: analytic gradients match finite differences") {
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Matrix> in = {random_normal(rng, 1, 4, 1.0), random_normal(rng, 4, 4, 1.0),
                              random_normal(rng, 1, 4, 1.0)};
    const double err = max_input_grad_error(
        [](Tape& t, const std::vector<Var>& v) { return weighted_sum(t, linear(t, v[0], v[1], v[2])); },
        in);
    CHECK(err < 1e-6);
  }
}

TEST_CASE("softmax_rows: uniform, shift invariance, large logits") {
  Matrix m = softmax_rows(Matrix::row({0, 0, 0}));
  for (double v : m.values()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  for (double c : {-50.0, 0.0, 3.5, 700.0}) {
    const double k = 1.3;
    Matrix s = softmax_rows(Matrix::row({c, c + k}));
    CHECK(std::abs(s[0] - 1.0 / (1.0 + std::exp(k))) < 1e-12);
    CHECK(std::abs(s[1] - 1.0 / (1.0 + std::exp(-k))) < 1e-12);
  }

  // Oracle in extended precision.
  const long double e = std::exp(static_cast<long double>(-1000.0));
  const long double p0 = 1.0L / (1.0L + e);
  const long double p1 = e / (1.0L + e);
  Matrix big = softmax_rows(Matrix::row({1000, 0}));
  CHECK(std::abs(static_cast<long double>(big[0]) - p0) < 1e-12L);
  CHECK(std::abs(static_cast<long double>(big[1]) - p1) < 1e-12L);
  CHECK(big.all_finite());
}

TEST_CASE("softmax_rows: rows are distributions (property)") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t rows = 1 + rng.below(6), cols = 1 + rng.below(9);
    Matrix m = random_normal(rng, rows, cols, rng.uniform(0.1, 200.0));
    Tape t;
    const Matrix& s = t.value(t.softmax_rows(t.constant(m)));
    REQUIRE(s.all_finite());
    for (std::size_t r = 0; r < rows; ++r) {
      double total = 0.0;
      for (double v : s.row_span(r)) {
        CHECK(v >= 0.0);
        total += v;
      }
      CHECK(std::abs(total - 1.0) < 1e-9);
    }
  }
}

namespace {

struct GruFixture {
  ParamSet set;
  GruParams gru;
  explicit GruFixture(std::size_t d, std::uint64_t seed = 4) {
    Rng rng(seed);
    gru = add_gru_params(set, "gru", d, rng);
  }
  void zero() {
    for (auto& p : set) p.value.fill(0.0);
  }
};

}  // namespace

TEST_CASE("gru_cell: zero parameters halve the state exactly") {
  GruFixture fx(4);
  fx.zero();
  Rng rng(5);
  const Matrix h0 = random_normal(rng, 3, 4, 2.0);
  Tape t;
  Var h = gru_cell(t, t.constant(h0), t.constant(random_normal(rng, 3, 4, 1.0)), bind(t, fx.gru));
  const Matrix& out = t.value(h);
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == 0.5 * h0[i]);
}

TEST_CASE("gru_cell: saturated update gate holds memory") {
  GruFixture fx(4);
  fx.gru.b_z->value.fill(40.0);
  Rng rng(6);
  const Matrix h0 = random_normal(rng, 1, 4, 1.0);
  Tape t;
  Var h = gru_cell(t, t.constant(h0), t.constant(random_normal(rng, 1, 4, 5.0)), bind(t, fx.gru));
  for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(t.value(h)[i] - h0[i]) < 1e-12);
}

TEST_CASE("gru_cell: gradients for all nine tensors, state and input") {
  for (std::uint64_t seed : {7u, 8u, 9u}) {
    GruFixture fx(4, seed);
    Rng rng(seed + 100);
    for (auto& p : fx.set) p.value = random_normal(rng, p.value.rows(), p.value.cols(), 0.7);
    const Matrix h0 = random_normal(rng, 2, 4, 1.0);
    const Matrix x0 = random_normal(rng, 2, 4, 1.0);
    std::vector<double> per;
    const double perr = max_param_grad_error(
        fx.set,
        [&](Tape& t) {
          return weighted_sum(t, gru_cell(t, t.constant(h0), t.constant(x0), bind(t, fx.gru)));
        },
        1e-5, &per);
    CHECK(per.size() == 9);
    CHECK(perr < 1e-4);
    const double ierr = max_input_grad_error(
        [&](Tape& t, const std::vector<Var>& v) {
          return weighted_sum(t, gru_cell(t, v[0], v[1], bind(t, fx.gru)));
        },
        {h0, x0});
    CHECK(ierr < 1e-4);
  }
}

TEST_CASE("mlp2: zero weights, dead region, gradients") {
  ParamSet set;
  Rng rng(10);
  Mlp2Params p = add_mlp2_params(set, "mlp", 3, 5, 2, rng);
  for (auto& q : set) q.value.fill(0.0);
  p.b2->value = Matrix::row({-1, 2});
  {
    Tape t;
    Var y = mlp2(t, t.constant(Matrix::row({0.3, -2, 7})), bind(t, p), true);
    CHECK(t.value(y) == Matrix::row({0, 2}));
  }
  // Dead hidden layer: every pre-activation negative.
  p.w1->value = random_normal(rng, 5, 3, 0.1);
  p.b1->value = Matrix(1, 5, -10.0);
  p.w2->value = random_normal(rng, 2, 5, 1.0);
  {
    Tape t;
    Var y = mlp2(t, t.constant(Matrix::row({0.3, -2, 7})), bind(t, p), true);
    CHECK(t.value(y) == Matrix::row({0, 2}));
    Tape t2;
    Var y2 = mlp2(t2, t2.constant(Matrix::row({0.3, -2, 7})), bind(t2, p), false);
    CHECK(t2.value(y2) == Matrix::row({-1, 2}));
  }
  for (auto& q : set) q.value = random_normal(rng, q.value.rows(), q.value.cols(), 0.8);
  const Matrix x0 = random_normal(rng, 4, 3, 1.0);
  for (bool outer : {false, true}) {
    const double err = max_param_grad_error(
        set, [&](Tape& t) { return weighted_sum(t, mlp2(t, t.constant(x0), bind(t, p), outer)); });
    CHECK(err < 1e-4);
  }
}

TEST_CASE("fd_gradient oracle") {
  const Matrix g = fd_gradient([](const Matrix& th) { return th[0] * th[0] + th[1] * th[1]; },
                               Matrix::row({1, 2}));
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);

  const Matrix zero = fd_gradient([](const Matrix&) { return 3.0; }, Matrix::row({1, 2, 3}));
  CHECK(max_abs(zero) == 0.0);

  try {
    fd_gradient([](const Matrix& th) { return th[0] > 1.0 ? NAN : 0.0; }, Matrix::row({1.0}));
    FAIL("expected oracle failure");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("every tape op passes a finite-difference check") {
  Rng rng(12);
  auto R = [&](std::size_t r, std::size_t c) { return random_normal(rng, r, c, 1.0); };
  using V = std::vector<Var>;
  struct Case {
    const char* name;
    slotnav::testing::ScalarBuilder build;
    std::vector<Matrix> in;
  };
  std::vector<Case> cases = {
      {"matmul", [](Tape& t, const V& v) { return weighted_sum(t, t.matmul(v[0], v[1])); }, {R(3, 4), R(4, 2)}},
      {"matmul_nt", [](Tape& t, const V& v) { return weighted_sum(t, t.matmul_nt(v[0], v[1])); }, {R(3, 4), R(5, 4)}},
      {"add/sub/mul",
       [](Tape& t, const V& v) { return weighted_sum(t, t.mul(t.add(v[0], v[1]), t.sub(v[0], v[1]))); },
       {R(2, 3), R(2, 3)}},
      {"add_row", [](Tape& t, const V& v) { return weighted_sum(t, t.add_row(v[0], v[1])); }, {R(3, 4), R(1, 4)}},
      {"affine", [](Tape& t, const V& v) { return weighted_sum(t, t.affine(v[0], -2.5, 0.3)); }, {R(2, 2)}},
      {"sigmoid", [](Tape& t, const V& v) { return weighted_sum(t, t.sigmoid(v[0])); }, {R(3, 3)}},
      {"tanh", [](Tape& t, const V& v) { return weighted_sum(t, t.tanh(v[0])); }, {R(3, 3)}},
      {"relu", [](Tape& t, const V& v) { return weighted_sum(t, t.relu(v[0])); }, {R(3, 3)}},
      {"softmax", [](Tape& t, const V& v) { return weighted_sum(t, t.softmax_rows(v[0])); }, {R(3, 5)}},
      {"layer_norm",
       [](Tape& t, const V& v) { return weighted_sum(t, t.layer_norm_rows(v[0], v[1], v[2])); },
       {R(3, 6), R(1, 6), R(1, 6)}},
      {"concat/slice rows",
       [](Tape& t, const V& v) {
         Var c = t.concat_rows(std::vector<Var>{v[0], v[1]});
         return weighted_sum(t, t.slice_rows(c, 1, 3));
       },
       {R(2, 3), R(3, 3)}},
      {"concat/slice cols",
       [](Tape& t, const V& v) {
         Var c = t.concat_cols(std::vector<Var>{v[0], v[1]});
         return weighted_sum(t, t.slice_cols(c, 1, 4));
       },
       {R(2, 3), R(2, 2)}},
      {"gather", [](Tape& t, const V& v) { return weighted_sum(t, t.gather_rows(v[0], {2, 0, 2, 1})); }, {R(3, 4)}},
      {"sum_squares", [](Tape& t, const V& v) { return t.sum_squares(v[0]); }, {R(2, 4)}},
      {"bce", [](Tape& t, const V& v) { return t.bce_with_logits(v[0], 1.0); }, {R(1, 1)}},
      {"bce0", [](Tape& t, const V& v) { return t.bce_with_logits(v[0], 0.0); }, {R(1, 1)}},
  };
  for (auto& c : cases) {
    INFO(c.name);
    CHECK(max_input_grad_error(c.build, c.in) < 1e-6);
  }
}

TEST_CASE("tape rules: single backward, scalar output, constants folded") {
  Tape t;
  Var a = t.input(Matrix::row({1, 2}));
  Var c = t.constant(Matrix::row({3, 4}));
  Var folded = t.mul(c, c);
  CHECK_FALSE(t.requires_grad(folded));
  CHECK_THROWS_AS(t.backward(t.mul(a, c)), Error);
  Var s = t.sum(t.mul(a, c));
  t.backward(s);
  CHECK(t.grad(a) == Matrix::row({3, 4}));
  CHECK_THROWS_AS(t.backward(s), Error);
}

TEST_CASE("shared parameter gradients accumulate once per parameter") {
  ParamSet set;
  Parameter& w = set.add("w", Matrix::row({2.0}));
  Tape t;
  Var a = t.param(w);
  Var b = t.param(w);
  CHECK(a.id == b.id);
  Var y = t.sum(t.mul(a, b));  // w²
  t.backward(y);
  GradBuffer g(set);
  t.accumulate_param_grads(g);
  CHECK(g[0][0] == 4.0);
}

TEST_CASE("no NaN/Inf from finite extremes") {
  Tape t;
  Var x = t.constant(Matrix::row({-800, -30, 0, 30, 800}));
  CHECK(t.value(t.sigmoid(x)).all_finite());
  CHECK(t.value(t.tanh(x)).all_finite());
  CHECK(t.value(t.softmax_rows(x)).all_finite());
  CHECK(t.value(t.bce_with_logits(t.constant(Matrix(1, 1, -800.0)), 1.0)).all_finite());
  CHECK(t.value(t.layer_norm_rows(t.constant(Matrix(2, 4, 5.0)), t.constant(Matrix(1, 4, 1.0)),
                                  t.constant(Matrix(1, 4))))
            .all_finite());
}
