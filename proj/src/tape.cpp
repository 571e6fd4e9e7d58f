#include "tape.hpp"

#include <cmath>
#include <random>

#include "schema.hpp"

namespace ktn::ad {

namespace {

std::string shape_str(const Eigen::MatrixXd& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_same_shape(const char* op, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace

int Tensor::rows() const { return static_cast<int>(value().rows()); }
int Tensor::cols() const { return static_cast<int>(value().cols()); }

const Eigen::MatrixXd& Tensor::value() const {
  if (!defined()) throw Error("use of undefined tensor");
  return tape_->node(idx_).value;
}

const Eigen::MatrixXd& Tensor::grad() const {
  if (!defined()) throw Error("use of undefined tensor");
  const auto& n = tape_->node(idx_);
  if (n.grad.size() == 0) {
    tape_->empty_grad_ = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    return tape_->empty_grad_;
  }
  return n.grad;
}

Tensor Tape::push(Eigen::MatrixXd value, bool needs_grad) {
  auto n = std::make_unique<Node>();
  n->value = std::move(value);
  n->needs_grad = needs_grad;
  if (needs_grad) n->grad = Eigen::MatrixXd::Zero(n->value.rows(), n->value.cols());
  nodes_.push_back(std::move(n));
  return Tensor(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::require(Tensor t) const {
  if (!t.defined() || t.tape_ != this) throw Error("tensor does not belong to this tape");
}

Tensor Tape::constant(Eigen::MatrixXd v) { return push(std::move(v), false); }

Tensor Tape::leaf(Param& p) {
  Tensor t = push(p.value, true);
  Node& n = node(t.idx_);
  n.src = &p;
  Param* src = &p;
  int self = t.idx_;
  n.back = [this, self, src]() { src->grad += node(self).grad; };
  return t;
}

Tensor Tape::matmul(Tensor a, Tensor b) {
  require(a);
  require(b);
  const auto& av = node(a.idx_).value;
  const auto& bv = node(b.idx_).value;
  if (av.cols() != bv.rows())
    throw Error("matmul: shape mismatch " + shape_str(av) + " * " + shape_str(bv));
  bool ng = node(a.idx_).needs_grad || node(b.idx_).needs_grad;
  Tensor out = push(av * bv, ng);
  if (ng) {
    int ai = a.idx_, bi = b.idx_, oi = out.idx_;
    node(oi).back = [this, ai, bi, oi]() {
      const auto& g = node(oi).grad;
      if (node(ai).needs_grad) node(ai).grad.noalias() += g * node(bi).value.transpose();
      if (node(bi).needs_grad) node(bi).grad.noalias() += node(ai).value.transpose() * g;
    };
  }
  return out;
}

Tensor Tape::sparse_matmul(const CsrMatrix& s, Tensor d) {
  require(d);
  const auto& dv = node(d.idx_).value;
  bool ng = node(d.idx_).needs_grad;
  Tensor out = push(s.multiply(dv), ng);
  if (ng) {
    int di = d.idx_, oi = out.idx_;
    const CsrMatrix* sp = &s;  // caller keeps the operator alive for the tape's lifetime
    node(oi).back = [this, di, oi, sp]() { sp->add_transpose_multiply(node(oi).grad, node(di).grad); };
  }
  return out;
}

Tensor Tape::concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error("concat_cols: no inputs");
  Eigen::Index rows = -1, cols = 0;
  bool ng = false;
  for (const Tensor& p : parts) {
    require(p);
    const auto& v = node(p.idx_).value;
    if (rows < 0) rows = v.rows();
    if (v.rows() != rows)
      throw Error("concat_cols: row mismatch " + std::to_string(rows) + " vs " + shape_str(v));
    cols += v.cols();
    ng = ng || node(p.idx_).needs_grad;
  }
  Eigen::MatrixXd value(rows, cols);
  Eigen::Index at = 0;
  for (const Tensor& p : parts) {
    const auto& v = node(p.idx_).value;
    value.middleCols(at, v.cols()) = v;
    at += v.cols();
  }
  Tensor out = push(std::move(value), ng);
  if (ng) {
    std::vector<int> idx;
    idx.reserve(parts.size());
    for (const Tensor& p : parts) idx.push_back(p.idx_);
    int oi = out.idx_;
    node(oi).back = [this, idx, oi]() {
      const auto& g = node(oi).grad;
      Eigen::Index at2 = 0;
      for (int i : idx) {
        Eigen::Index w = node(i).value.cols();
        if (node(i).needs_grad) node(i).grad += g.middleCols(at2, w);
        at2 += w;
      }
    };
  }
  return out;
}

Tensor Tape::relu(Tensor a) {
  require(a);
  const auto& av = node(a.idx_).value;
  bool ng = node(a.idx_).needs_grad;
  Tensor out = push(av.cwiseMax(0.0), ng);
  if (ng) {
    int ai = a.idx_, oi = out.idx_;
    node(oi).back = [this, ai, oi]() {
      // subgradient 0 at 0
      node(ai).grad.array() +=
          node(oi).grad.array() * (node(ai).value.array() > 0.0).cast<double>();
    };
  }
  return out;
}

Tensor Tape::identity(Tensor a) {
  require(a);
  bool ng = node(a.idx_).needs_grad;
  Tensor out = push(node(a.idx_).value, ng);
  if (ng) {
    int ai = a.idx_, oi = out.idx_;
    node(oi).back = [this, ai, oi]() { node(ai).grad += node(oi).grad; };
  }
  return out;
}

Tensor Tape::scale_add(Tensor a, Tensor b, double alpha, double beta) {
  require(a);
  require(b);
  const auto& av = node(a.idx_).value;
  const auto& bv = node(b.idx_).value;
  check_same_shape("scale_add", av, bv);
  bool ng = node(a.idx_).needs_grad || node(b.idx_).needs_grad;
  Tensor out = push(alpha * av + beta * bv, ng);
  if (ng) {
    int ai = a.idx_, bi = b.idx_, oi = out.idx_;
    node(oi).back = [this, ai, bi, oi, alpha, beta]() {
      if (node(ai).needs_grad) node(ai).grad += alpha * node(oi).grad;
      if (node(bi).needs_grad) node(bi).grad += beta * node(oi).grad;
    };
  }
  return out;
}

Tensor Tape::gather_rows(Tensor a, std::vector<int> idx) {
  require(a);
  const auto& av = node(a.idx_).value;
  for (int i : idx)
    if (i < 0 || i >= av.rows())
      throw Error("gather_rows: index " + std::to_string(i) + " out of range [0, " +
                  std::to_string(av.rows()) + ")");
  Eigen::MatrixXd value(static_cast<Eigen::Index>(idx.size()), av.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) value.row(k) = av.row(idx[k]);
  bool ng = node(a.idx_).needs_grad;
  Tensor out = push(std::move(value), ng);
  if (ng) {
    int ai = a.idx_, oi = out.idx_;
    node(oi).back = [this, ai, oi, idx = std::move(idx)]() {
      const auto& g = node(oi).grad;
      for (std::size_t k = 0; k < idx.size(); ++k) node(ai).grad.row(idx[k]) += g.row(k);
    };
  }
  return out;
}

Tensor Tape::row_scale(Tensor a, Eigen::VectorXd s) {
  require(a);
  const auto& av = node(a.idx_).value;
  if (s.size() != av.rows())
    throw Error("row_scale: " + std::to_string(s.size()) + " scales for " +
                std::to_string(av.rows()) + " rows");
  bool ng = node(a.idx_).needs_grad;
  Tensor out = push(s.asDiagonal() * av, ng);
  if (ng) {
    int ai = a.idx_, oi = out.idx_;
    node(oi).back = [this, ai, oi, s = std::move(s)]() {
      node(ai).grad += s.asDiagonal() * node(oi).grad;
    };
  }
  return out;
}

Tensor Tape::bias_add(Tensor a, Tensor bias_row) {
  require(a);
  require(bias_row);
  const auto& av = node(a.idx_).value;
  const auto& bv = node(bias_row.idx_).value;
  if (bv.rows() != 1 || bv.cols() != av.cols())
    throw Error("bias_add: bias " + shape_str(bv) + " for matrix " + shape_str(av));
  bool ng = node(a.idx_).needs_grad || node(bias_row.idx_).needs_grad;
  Tensor out = push(av.rowwise() + bv.row(0), ng);
  if (ng) {
    int ai = a.idx_, bi = bias_row.idx_, oi = out.idx_;
    node(oi).back = [this, ai, bi, oi]() {
      const auto& g = node(oi).grad;
      if (node(ai).needs_grad) node(ai).grad += g;
      if (node(bi).needs_grad) node(bi).grad.row(0) += g.colwise().sum();
    };
  }
  return out;
}

Tensor Tape::mse_loss(Tensor a, Tensor b) {
  require(a);
  require(b);
  const auto& av = node(a.idx_).value;
  const auto& bv = node(b.idx_).value;
  check_same_shape("mse_loss", av, bv);
  const double inv = 1.0 / static_cast<double>(av.rows() * av.cols());
  Eigen::MatrixXd diff = av - bv;
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = diff.squaredNorm() * inv;
  bool ng = node(a.idx_).needs_grad || node(b.idx_).needs_grad;
  Tensor out = push(std::move(value), ng);
  if (ng) {
    int ai = a.idx_, bi = b.idx_, oi = out.idx_;
    node(oi).back = [this, ai, bi, oi, diff = std::move(diff), inv]() {
      const double g = node(oi).grad(0, 0);
      if (node(ai).needs_grad) node(ai).grad += (2.0 * inv * g) * diff;
      if (node(bi).needs_grad) node(bi).grad -= (2.0 * inv * g) * diff;
    };
  }
  return out;
}

Tensor Tape::frobenius_loss(Tensor a, Tensor b) {
  require(a);
  require(b);
  const auto& av = node(a.idx_).value;
  const auto& bv = node(b.idx_).value;
  check_same_shape("frobenius_loss", av, bv);
  Eigen::MatrixXd diff = av - bv;
  double norm = diff.norm();
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = norm;
  bool ng = node(a.idx_).needs_grad || node(b.idx_).needs_grad;
  Tensor out = push(std::move(value), ng);
  if (ng) {
    int ai = a.idx_, bi = b.idx_, oi = out.idx_;
    node(oi).back = [this, ai, bi, oi, diff = std::move(diff), norm]() {
      if (norm < 1e-12) return;
      const double g = node(oi).grad(0, 0) / norm;
      if (node(ai).needs_grad) node(ai).grad += g * diff;
      if (node(bi).needs_grad) node(bi).grad -= g * diff;
    };
  }
  return out;
}

Tensor Tape::softmax_xent(Tensor logits, const Eigen::MatrixXd& onehot) {
  require(logits);
  const auto& lv = node(logits.idx_).value;
  check_same_shape("softmax_xent", lv, onehot);
  if (!all_finite(lv)) throw Error("softmax_xent: non-finite logits");
  for (Eigen::Index i = 0; i < onehot.rows(); ++i) {
    double s = onehot.row(i).sum();
    if (std::abs(s - 1.0) > 1e-9)
      throw Error("softmax_xent: label row " + std::to_string(i) + " sums to " +
                  std::to_string(s) + ", expected 1");
  }
  const Eigen::Index n = lv.rows();
  Eigen::MatrixXd probs(lv.rows(), lv.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double mx = lv.row(i).maxCoeff();
    Eigen::ArrayXd e = (lv.row(i).array() - mx).exp();
    double z = e.sum();
    probs.row(i) = (e / z).matrix();
    for (Eigen::Index c = 0; c < lv.cols(); ++c)
      if (onehot(i, c) != 0.0) loss -= onehot(i, c) * (std::log(e(c)) - std::log(z));
  }
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = loss / static_cast<double>(n);
  bool ng = node(logits.idx_).needs_grad;
  Tensor out = push(std::move(value), ng);
  if (ng) {
    int li = logits.idx_, oi = out.idx_;
    Eigen::MatrixXd resid = (probs - onehot) / static_cast<double>(n);
    node(oi).back = [this, li, oi, resid = std::move(resid)]() {
      node(li).grad += node(oi).grad(0, 0) * resid;
    };
  }
  return out;
}

Tensor Tape::sigmoid_bce(Tensor logits, const Eigen::MatrixXd& multihot) {
  require(logits);
  const auto& lv = node(logits.idx_).value;
  check_same_shape("sigmoid_bce", lv, multihot);
  if (!all_finite(lv)) throw Error("sigmoid_bce: non-finite logits");
  const double n = static_cast<double>(lv.rows());
  // stable form: max(x,0) - x*y + log(1 + exp(-|x|))
  Eigen::ArrayXXd x = lv.array();
  Eigen::ArrayXXd y = multihot.array();
  double loss = (x.max(0.0) - x * y + (1.0 + (-x.abs()).exp()).log()).sum() / n;
  Eigen::MatrixXd value(1, 1);
  value(0, 0) = loss;
  bool ng = node(logits.idx_).needs_grad;
  Tensor out = push(std::move(value), ng);
  if (ng) {
    int li = logits.idx_, oi = out.idx_;
    Eigen::MatrixXd resid = ((1.0 / (1.0 + (-x).exp())) - y).matrix() / n;
    node(oi).back = [this, li, oi, resid = std::move(resid)]() {
      node(li).grad += node(oi).grad(0, 0) * resid;
    };
  }
  return out;
}

void Tape::backward(Tensor loss) {
  require(loss);
  const Node& l = node(loss.idx_);
  if (l.value.rows() != 1 || l.value.cols() != 1)
    throw Error("backward: loss must be scalar, got " + shape_str(l.value));
  if (!l.needs_grad) return;  // constant loss: nothing on the path
  node(loss.idx_).grad(0, 0) = 1.0;
  for (int i = loss.idx_; i >= 0; --i) {
    Node& n = node(i);
    if (n.needs_grad && n.back) n.back();
  }
}

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

void adam_step(const std::vector<Param*>& params, double lr, double beta1, double beta2,
               double eps, long step) {
  if (step < 1) throw Error("adam_step: step must be >= 1");
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
  for (Param* p : params) {
    p->adam_m = beta1 * p->adam_m + (1.0 - beta1) * p->grad;
    p->adam_v.array() = beta2 * p->adam_v.array() + (1.0 - beta2) * p->grad.array().square();
    Eigen::ArrayXXd mhat = p->adam_m.array() / bc1;
    Eigen::ArrayXXd vhat = p->adam_v.array() / bc2;
    p->value.array() -= lr * mhat / (vhat.sqrt() + eps);
  }
}

double grad_check(const std::function<Tensor(Tape&)>& build, const std::vector<Param*>& params,
                  double eps, int max_entries_per_param, std::uint64_t sample_seed) {
  std::vector<Eigen::MatrixXd> analytic;
  {
    Tape tape;
    Tensor loss = build(tape);
    for (Param* p : params) p->zero_grad();
    tape.backward(loss);
    for (Param* p : params) analytic.push_back(p->grad);
    for (Param* p : params) p->zero_grad();
  }

  auto eval = [&]() {
    Tape tape;
    return build(tape).value()(0, 0);
  };

  std::mt19937_64 rng(sample_seed);
  double max_rel = 0.0;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    const Eigen::Index total = p.value.size();
    std::vector<Eigen::Index> entries;
    if (max_entries_per_param <= 0 || total <= max_entries_per_param) {
      entries.resize(total);
      for (Eigen::Index k = 0; k < total; ++k) entries[k] = k;
    } else {
      std::uniform_int_distribution<Eigen::Index> pick(0, total - 1);
      for (int k = 0; k < max_entries_per_param; ++k) entries.push_back(pick(rng));
    }
    for (Eigen::Index k : entries) {
      double* cell = p.value.data() + k;
      const double orig = *cell;
      *cell = orig + eps;
      double up = eval();
      *cell = orig - eps;
      double down = eval();
      *cell = orig;
      double numeric = (up - down) / (2.0 * eps);
      double a = analytic[pi](k);
      double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > max_rel) max_rel = rel;
    }
  }
  return max_rel;
}

}  // namespace ktn::ad
