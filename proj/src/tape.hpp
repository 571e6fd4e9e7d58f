#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sparse.hpp"

namespace ktn::ad {

// Trainable matrix with gradient buffer and Adam state. Parameters live
// outside any tape; leaf tensors route gradients back here.
struct Param {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd adam_m;
  Eigen::MatrixXd adam_v;

  Param(std::string n, Eigen::MatrixXd init)
      : name(std::move(n)),
        value(std::move(init)),
        grad(Eigen::MatrixXd::Zero(value.rows(), value.cols())),
        adam_m(Eigen::MatrixXd::Zero(value.rows(), value.cols())),
        adam_v(Eigen::MatrixXd::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(); }
  double grad_norm() const { return grad.norm(); }
};

class Tape;

// Handle into a tape node. Valid as long as the tape is alive.
class Tensor {
 public:
  Tensor() = default;
  bool defined() const { return tape_ != nullptr; }
  int rows() const;
  int cols() const;
  const Eigen::MatrixXd& value() const;
  const Eigen::MatrixXd& grad() const;  // zeros if the node is off the path

 private:
  friend class Tape;
  Tensor(Tape* t, int i) : tape_(t), idx_(i) {}
  Tape* tape_ = nullptr;
  int idx_ = -1;
};

// Ordered record of primitive operations over dense matrices. Creation order
// is topological by construction; backward() visits nodes exactly once in
// reverse. Single-threaded.
class Tape {
 public:
  Tensor constant(Eigen::MatrixXd v);
  Tensor leaf(Param& p);

  Tensor matmul(Tensor a, Tensor b);
  // s is a constant operand; backward flows through the dense side only.
  Tensor sparse_matmul(const CsrMatrix& s, Tensor d);
  Tensor concat_cols(const std::vector<Tensor>& parts);
  Tensor relu(Tensor a);
  Tensor identity(Tensor a);
  Tensor scale_add(Tensor a, Tensor b, double alpha, double beta);
  Tensor gather_rows(Tensor a, std::vector<int> idx);
  Tensor row_scale(Tensor a, Eigen::VectorXd s);
  Tensor bias_add(Tensor a, Tensor bias_row);

  Tensor mse_loss(Tensor a, Tensor b);
  Tensor frobenius_loss(Tensor a, Tensor b);
  Tensor softmax_xent(Tensor logits, const Eigen::MatrixXd& onehot);
  Tensor sigmoid_bce(Tensor logits, const Eigen::MatrixXd& multihot);

  void backward(Tensor loss);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    bool needs_grad = false;
    Param* src = nullptr;
    std::function<void()> back;  // accumulates into input grads
  };

  friend class Tensor;
  Node& node(int i) { return *nodes_[i]; }
  const Node& node(int i) const { return *nodes_[i]; }
  Tensor push(Eigen::MatrixXd value, bool needs_grad);
  void require(Tensor t) const;

  std::vector<std::unique_ptr<Node>> nodes_;
  Eigen::MatrixXd empty_grad_;
};

bool all_finite(const Eigen::MatrixXd& m);

void zero_grads(const std::vector<Param*>& params);

// Bias-corrected Adam; step is 1-based.
void adam_step(const std::vector<Param*>& params, double lr, double beta1, double beta2,
               double eps, long step);

// Max over sampled parameter entries of the relative error between analytic
// gradients and central differences with step eps. Samples every entry when
// max_entries_per_param <= 0. The builder must be deterministic.
double grad_check(const std::function<Tensor(Tape&)>& build, const std::vector<Param*>& params,
                  double eps, int max_entries_per_param = 0, std::uint64_t sample_seed = 0);

}  // namespace ktn::ad
