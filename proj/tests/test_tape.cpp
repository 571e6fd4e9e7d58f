#include <doctest.h>

#include "helpers.hpp"
#include "tape.hpp"

using namespace ktn;
using ad::Param;
using ad::Tape;
using ad::Tensor;

namespace {

// Finite-difference check for a single-param loss builder.
double fd_check(Param& p, const std::function<Tensor(Tape&, Tensor)>& body, double eps = 1e-6) {
  return ad::grad_check(
      [&](Tape& tape) { return body(tape, tape.leaf(p)); }, {&p}, eps);
}

}  // namespace

TEST_CASE("matmul by the identity passes values and gradients through") {
  Rng rng(1);
  Param b("b", gaussian(2, 3, rng));
  Tape tape;
  Tensor eye = tape.constant(Eigen::MatrixXd::Identity(2, 2));
  Tensor out = tape.matmul(eye, tape.leaf(b));
  CHECK(out.value() == b.value);

  Tensor loss = tape.mse_loss(out, tape.constant(Eigen::MatrixXd::Zero(2, 3)));
  b.zero_grad();
  tape.backward(loss);
  // d/dB mean(B^2) = 2B/6
  CHECK((b.grad - b.value / 3.0).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("relu forward and subgradient at zero") {
  Tape tape;
  Param p("p", (Eigen::MatrixXd(1, 3) << -1.0, 0.0, 2.0).finished());
  Tensor out = tape.relu(tape.leaf(p));
  CHECK(out.value()(0, 0) == 0.0);
  CHECK(out.value()(0, 1) == 0.0);
  CHECK(out.value()(0, 2) == 2.0);

  // Sum via mse against zero scaled back: use scale_add to build a scalar.
  Tensor loss = tape.mse_loss(out, tape.constant(Eigen::MatrixXd::Zero(1, 3)));
  p.zero_grad();
  tape.backward(loss);
  CHECK(p.grad(0, 0) == 0.0);
  CHECK(p.grad(0, 1) == 0.0);  // subgradient 0 at 0
  CHECK(p.grad(0, 2) == doctest::Approx(2.0 * 2.0 / 3.0));
}

TEST_CASE("concat_cols splits the upstream gradient by column ranges") {
  Rng rng(3);
  Param a("a", gaussian(2, 1, rng));
  Param b("b", gaussian(2, 2, rng));
  Eigen::MatrixXd target = gaussian(2, 3, rng);
  double err = ad::grad_check(
      [&](Tape& tape) {
        Tensor cc = tape.concat_cols({tape.leaf(a), tape.leaf(b)});
        return tape.mse_loss(cc, tape.constant(target));
      },
      {&a, &b}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("mse examples") {
  Rng rng(4);
  Eigen::MatrixXd v = gaussian(3, 2, rng);
  Param a("a", v);
  {
    Tape tape;
    Tensor loss = tape.mse_loss(tape.leaf(a), tape.constant(v));
    CHECK(loss.value()(0, 0) == 0.0);
    a.zero_grad();
    tape.backward(loss);
    CHECK(a.grad.cwiseAbs().maxCoeff() == 0.0);
  }
  {
    Tape tape;
    Tensor x = tape.constant((Eigen::MatrixXd(1, 2) << 1.0, 2.0).finished());
    Tensor y = tape.constant(Eigen::MatrixXd::Zero(1, 2));
    CHECK(tape.mse_loss(x, y).value()(0, 0) == doctest::Approx(2.5));
  }
  {
    Param p("p", gaussian(3, 3, rng));
    Eigen::MatrixXd target = gaussian(3, 3, rng);
    double err = fd_check(p, [&](Tape& tape, Tensor t) {
      return tape.mse_loss(t, tape.constant(target));
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("frobenius loss matches finite differences away from zero") {
  Rng rng(14);
  Param p("p", gaussian(3, 4, rng));
  Eigen::MatrixXd target = gaussian(3, 4, rng);
  double err = fd_check(p, [&](Tape& tape, Tensor t) {
    return tape.frobenius_loss(t, tape.constant(target));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("softmax cross-entropy examples") {
  {
    Tape tape;
    Tensor logits = tape.constant(Eigen::MatrixXd::Zero(5, 4));
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(5, 4);
    for (int i = 0; i < 5; ++i) onehot(i, i % 4) = 1.0;
    CHECK(tape.softmax_xent(logits, onehot).value()(0, 0) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
  {
    Tape tape;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(2, 3);
    onehot(0, 1) = 1.0;
    onehot(1, 2) = 1.0;
    Tensor logits = tape.constant((onehot.array() * 50.0).matrix());
    CHECK(tape.softmax_xent(logits, onehot).value()(0, 0) < 1e-12);
  }
  {
    Rng rng(6);
    Param p("p", gaussian(4, 3, rng));
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(4, 3);
    for (int i = 0; i < 4; ++i) onehot(i, (i * 2) % 3) = 1.0;
    double err = fd_check(p, [&](Tape& tape, Tensor t) { return tape.softmax_xent(t, onehot); });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("sigmoid bce examples") {
  {
    Tape tape;
    Eigen::MatrixXd multihot = Eigen::MatrixXd::Zero(2, 3);
    multihot(0, 0) = 1.0;
    multihot(0, 2) = 1.0;
    Tensor logits = tape.constant(((multihot.array() * 2.0) - 1.0).matrix() * 40.0);
    CHECK(tape.sigmoid_bce(logits, multihot).value()(0, 0) < 1e-12);
  }
  {
    Rng rng(8);
    Param p("p", gaussian(4, 3, rng));
    Eigen::MatrixXd multihot = Eigen::MatrixXd::Zero(4, 3);
    multihot(0, 0) = 1.0;
    multihot(1, 1) = 1.0;
    multihot(1, 2) = 1.0;
    double err = fd_check(p, [&](Tape& tape, Tensor t) { return tape.sigmoid_bce(t, multihot); });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("sparse_matmul matches dense and backpropagates through the dense side") {
  Rng rng(9);
  CsrMatrix sp = CsrMatrix::from_pairs(3, 4, {{0, 1}, {0, 3}, {1, 0}, {2, 2}});
  sp.vals = {0.5, 0.5, 1.0, 0.25};
  Param d("d", gaussian(4, 2, rng));
  {
    Tape tape;
    Tensor out = tape.sparse_matmul(sp, tape.leaf(d));
    CHECK((out.value() - sp.dense() * d.value).cwiseAbs().maxCoeff() <= 1e-15);
  }
  Eigen::MatrixXd target = gaussian(3, 2, rng);
  double err = fd_check(d, [&](Tape& tape, Tensor t) {
    return tape.mse_loss(tape.sparse_matmul(sp, t), tape.constant(target));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("gather_rows, row_scale, bias_add and scale_add match finite differences") {
  Rng rng(10);
  Param a("a", gaussian(5, 3, rng));
  Param bias("bias", gaussian(1, 3, rng));
  Eigen::VectorXd scales = gaussian(5, 1, rng).col(0);
  Eigen::MatrixXd target = gaussian(3, 3, rng);
  double err = ad::grad_check(
      [&](Tape& tape) {
        Tensor x = tape.row_scale(tape.leaf(a), scales);
        x = tape.bias_add(x, tape.leaf(bias));
        x = tape.gather_rows(x, {4, 0, 2});
        Tensor y = tape.scale_add(x, tape.constant(target), 0.75, -1.25);
        return tape.mse_loss(y, tape.constant(Eigen::MatrixXd::Zero(3, 3)));
      },
      {&a, &bias}, 1e-6);
  CHECK(err < 1e-6);
}

TEST_CASE("identity op passes values and adjoints through") {
  Rng rng(19);
  Param a("a", gaussian(2, 2, rng));
  double err = fd_check(a, [&](Tape& tape, Tensor t) {
    return tape.mse_loss(tape.identity(t), tape.constant(Eigen::MatrixXd::Ones(2, 2)));
  });
  CHECK(err < 1e-6);
}

TEST_CASE("backward requires a scalar loss") {
  Rng rng(12);
  Param a("a", gaussian(2, 2, rng));
  Tape tape;
  Tensor t = tape.leaf(a);
  CHECK_THROWS_WITH_AS(tape.backward(t), doctest::Contains("scalar"), Error);
}

TEST_CASE("shape mismatches name both shapes") {
  Tape tape;
  Tensor a = tape.constant(Eigen::MatrixXd::Zero(2, 3));
  Tensor b = tape.constant(Eigen::MatrixXd::Zero(2, 3));
  CHECK_THROWS_WITH_AS(tape.matmul(a, b), doctest::Contains("2x3"), Error);
  CHECK_THROWS_WITH_AS(tape.mse_loss(a, tape.constant(Eigen::MatrixXd::Zero(1, 3))),
                       doctest::Contains("1x3"), Error);
}

TEST_CASE("parameters off the loss path have exactly zero gradients") {
  Rng rng(13);
  Param used("used", gaussian(2, 2, rng));
  Param unused("unused", gaussian(2, 2, rng));
  Tape tape;
  Tensor loss =
      tape.mse_loss(tape.leaf(used), tape.constant(Eigen::MatrixXd::Zero(2, 2)));
  tape.leaf(unused);  // on the tape, not on the path
  used.zero_grad();
  unused.zero_grad();
  tape.backward(loss);
  CHECK(unused.grad.cwiseAbs().maxCoeff() == 0.0);
  CHECK(used.grad.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("backward is deterministic: identical tapes give bit-identical gradients") {
  Rng rng(15);
  Param a("a", gaussian(4, 4, rng));
  Param b("b", gaussian(4, 4, rng));
  auto run = [&]() {
    Tape tape;
    Tensor x = tape.matmul(tape.leaf(a), tape.leaf(b));
    x = tape.relu(x);
    Tensor loss = tape.mse_loss(x, tape.constant(Eigen::MatrixXd::Ones(4, 4)));
    ad::zero_grads({&a, &b});
    tape.backward(loss);
    return std::make_pair(a.grad, b.grad);
  };
  auto [ga1, gb1] = run();
  auto [ga2, gb2] = run();
  CHECK(ga1 == ga2);
  CHECK(gb1 == gb2);
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Rng rng(16);
  Param p("p", gaussian(3, 3, rng));
  Eigen::MatrixXd before = p.value;
  p.zero_grad();
  ad::adam_step({&p}, 0.1, 0.9, 0.999, 1e-8, 1);
  CHECK(p.value == before);
}

TEST_CASE("adam: first step moves by ~lr regardless of gradient scale") {
  Param x("x", Eigen::MatrixXd::Constant(1, 1, 1.0));
  Tape tape;
  Tensor loss = tape.mse_loss(tape.leaf(x), tape.constant(Eigen::MatrixXd::Zero(1, 1)));
  x.zero_grad();
  tape.backward(loss);  // d/dx x^2 = 2
  ad::adam_step({&x}, 0.1, 0.9, 0.999, 1e-8, 1);
  CHECK(x.value(0, 0) == doctest::Approx(0.9).epsilon(1e-7));
}

TEST_CASE("grad_check: linear losses are exact to 1e-9") {
  Rng rng(17);
  Param p("p", gaussian(3, 2, rng));
  Eigen::MatrixXd w = gaussian(2, 1, rng);
  double err = ad::grad_check(
      [&](Tape& tape) {
        // scalar ones^T (p w): linear in every entry of p
        Tensor ones_row = tape.constant(Eigen::MatrixXd::Ones(1, 3));
        Tensor val = tape.matmul(ones_row, tape.matmul(tape.leaf(p), tape.constant(w)));
        return tape.identity(val);
      },
      {&p}, 1e-5);
  CHECK(err < 1e-9);
}

TEST_CASE("grad_check flags a corrupted adjoint (fault injection)") {
  Rng rng(18);
  Param p("p", gaussian(2, 2, rng).array().abs().matrix() + Eigen::MatrixXd::Ones(2, 2));
  int calls = 0;
  double err = ad::grad_check(
      [&](Tape& tape) {
        // The analytic pass sees f(x); later numeric evaluations see 1.1 f(x),
        // i.e. the adjoint under test is off by 10%.
        double scale = calls++ == 0 ? 1.0 : 1.1;
        Tensor x = tape.leaf(p);
        Tensor y = tape.scale_add(x, x, scale, 0.0);
        return tape.mse_loss(y, tape.constant(Eigen::MatrixXd::Zero(2, 2)));
      },
      {&p}, 1e-6);
  CHECK(err > 1e-2);
}
