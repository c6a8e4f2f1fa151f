#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "hosc/graph.hpp"

namespace hosc {
namespace ad {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
struct Tensor {
  Tape* tape = nullptr;
  int id = -1;

  const Matrix& value() const;
  const Matrix& grad() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  double scalar() const {
    if (rows() != 1 || cols() != 1) throw std::logic_error("Tensor: not a scalar");
    return value()(0, 0);
  }
};

/// Records forward operations and replays them backwards. One tape per
/// training step; rebuild the tape for every forward pass.
class Tape {
 public:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void(Tape&, const Node&)> backward;  // empty for leaves
  };

  Tensor leaf(Matrix value, bool requires_grad) {
    check_finite(value, "leaf");
    Node node;
    node.grad = Matrix::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  Tensor var(Matrix value) { return leaf(std::move(value), true); }
  Tensor constant(Matrix value) { return leaf(std::move(value), false); }
  Tensor constant_scalar(double v) { return constant(Matrix::Constant(1, 1, v)); }

  const Node& node(int id) const { return nodes_.at(id); }
  Node& node(int id) { return nodes_.at(id); }

  /// Runs reverse-mode accumulation from a scalar loss. May be called once
  /// per tape.
  void backward(const Tensor& loss) {
    if (loss.tape != this) throw std::logic_error("backward: tensor from another tape");
    if (loss.rows() != 1 || loss.cols() != 1)
      throw std::logic_error("backward: loss must be scalar");
    if (backward_done_) throw std::logic_error("backward: called twice without reset");
    backward_done_ = true;
    nodes_[loss.id].grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i) {
      Node& node = nodes_[i];
      if (node.requires_grad && node.backward) node.backward(*this, node);
    }
  }

  Tensor record(Matrix value, std::vector<int> parents,
                std::function<void(Tape&, const Node&)> backward) {
    check_finite(value, "op result");
    Node node;
    node.grad = Matrix::Zero(value.rows(), value.cols());
    node.value = std::move(value);
    for (int p : parents)
      node.requires_grad = node.requires_grad || nodes_[p].requires_grad;
    if (node.requires_grad) node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return {this, static_cast<int>(nodes_.size()) - 1};
  }

  static void check_finite(const Matrix& m, const char* what) {
    if (!m.allFinite())
      throw std::runtime_error(std::string("non-finite value in ") + what);
  }

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline const Matrix& Tensor::value() const { return tape->node(id).value; }
inline const Matrix& Tensor::grad() const { return tape->node(id).grad; }

namespace detail {
inline void require_same_tape(const Tensor& a, const Tensor& b) {
  if (a.tape != b.tape) throw std::logic_error("operands from different tapes");
}
}  // namespace detail

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  detail::require_same_tape(a, b);
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  int ia = a.id, ib = b.id;
  return a.tape->record(a.value() * b.value(), {ia, ib},
                        [ia, ib](Tape& t, const Tape::Node& self) {
                          if (t.node(ia).requires_grad)
                            t.node(ia).grad += self.grad * t.node(ib).value.transpose();
                          if (t.node(ib).requires_grad)
                            t.node(ib).grad += t.node(ia).value.transpose() * self.grad;
                        });
}

/// CSR constant on the left, dense tape tensor on the right. The sparse
/// operand never receives a gradient.
inline Tensor sparse_dense_matmul(const CsrMatrix& a, const Tensor& b) {
  if (a.n != b.rows()) throw std::invalid_argument("sparse_dense_matmul: shape mismatch");
  const CsrMatrix* ap = &a;  // caller keeps the CSR alive for the tape's lifetime
  int ib = b.id;
  return b.tape->record(a.multiply(b.value()), {ib},
                        [ap, ib](Tape& t, const Tape::Node& self) {
                          // A symmetric would allow A*grad, but handle the
                          // general case: grad_b += A^T * grad.
                          Matrix g = Matrix::Zero(self.grad.rows(), self.grad.cols());
                          for (int i = 0; i < ap->n; ++i)
                            for (int p = ap->row_ptr[i]; p < ap->row_ptr[i + 1]; ++p)
                              g.row(ap->col_idx[p]) += ap->values[p] * self.grad.row(i);
                          t.node(ib).grad += g;
                        });
}

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("add: shape mismatch");
  int ia = a.id, ib = b.id;
  return a.tape->record(a.value() + b.value(), {ia, ib},
                        [ia, ib](Tape& t, const Tape::Node& self) {
                          if (t.node(ia).requires_grad) t.node(ia).grad += self.grad;
                          if (t.node(ib).requires_grad) t.node(ib).grad += self.grad;
                        });
}

/// Adds a 1 x C row vector to every row of a.
inline Tensor add_rowvec(const Tensor& a, const Tensor& b) {
  detail::require_same_tape(a, b);
  if (b.rows() != 1 || a.cols() != b.cols())
    throw std::invalid_argument("add_rowvec: shape mismatch");
  int ia = a.id, ib = b.id;
  return a.tape->record(a.value().rowwise() + b.value().row(0), {ia, ib},
                        [ia, ib](Tape& t, const Tape::Node& self) {
                          if (t.node(ia).requires_grad) t.node(ia).grad += self.grad;
                          if (t.node(ib).requires_grad)
                            t.node(ib).grad += self.grad.colwise().sum();
                        });
}

inline Tensor scale(const Tensor& a, double c) {
  int ia = a.id;
  return a.tape->record(a.value() * c, {ia},
                        [ia, c](Tape& t, const Tape::Node& self) {
                          t.node(ia).grad += self.grad * c;
                        });
}

inline Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  detail::require_same_tape(a, b);
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("elementwise_mul: shape mismatch");
  int ia = a.id, ib = b.id;
  return a.tape->record(a.value().cwiseProduct(b.value()), {ia, ib},
                        [ia, ib](Tape& t, const Tape::Node& self) {
                          if (t.node(ia).requires_grad)
                            t.node(ia).grad += self.grad.cwiseProduct(t.node(ib).value);
                          if (t.node(ib).requires_grad)
                            t.node(ib).grad += self.grad.cwiseProduct(t.node(ia).value);
                        });
}

inline Tensor relu(const Tensor& a) {
  int ia = a.id;
  return a.tape->record(a.value().cwiseMax(0.0), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          const Matrix& x = t.node(ia).value;
                          t.node(ia).grad +=
                              self.grad.cwiseProduct((x.array() > 0.0).cast<double>().matrix());
                        });
}

inline Tensor softmax_rows(const Tensor& a) {
  Matrix y = a.value();
  for (int i = 0; i < y.rows(); ++i) {
    Eigen::RowVectorXd row = y.row(i);
    double m = row.maxCoeff();
    row = (row.array() - m).exp();
    y.row(i) = row / row.sum();
  }
  int ia = a.id;
  return a.tape->record(std::move(y), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          const Matrix& s = self.value;
                          Matrix g(s.rows(), s.cols());
                          for (int i = 0; i < s.rows(); ++i) {
                            double dot = self.grad.row(i).dot(s.row(i));
                            g.row(i) =
                                s.row(i).cwiseProduct(self.grad.row(i).array().matrix()) -
                                dot * s.row(i);
                          }
                          t.node(ia).grad += g;
                        });
}

inline Tensor transpose(const Tensor& a) {
  int ia = a.id;
  return a.tape->record(a.value().transpose(), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          t.node(ia).grad += self.grad.transpose();
                        });
}

/// Sum over rows, producing a 1 x C row vector.
inline Tensor colsum(const Tensor& a) {
  int ia = a.id;
  return a.tape->record(a.value().colwise().sum(), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          t.node(ia).grad.rowwise() += self.grad.row(0);
                        });
}

inline Tensor sum(const Tensor& a) {
  int ia = a.id;
  return a.tape->record(Matrix::Constant(1, 1, a.value().sum()), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          t.node(ia).grad.array() += self.grad(0, 0);
                        });
}

inline constexpr double kTraceRatioEps = 1e-10;

/// Elementwise ratio-sum over matched 1 x K "diagonal" tensors:
/// sum_k numer_k / max(denom_k, eps). Denominator entries at or below the
/// clamp get zero gradient.
///
/// The clamp floor matters: a cluster column shrinking uniformly toward zero
/// keeps its exact ratio near 1 (numerator and denominator both scale with the
/// squared column norm), so a tiny eps leaves the loss indifferent to clusters
/// dying out. Callers pass an eps proportional to the graph volume so that a
/// vanishing cluster's ratio falls to 0 instead, which penalises degenerate
/// assignments that use fewer than K clusters.
inline Tensor trace_ratio(const Tensor& numer, const Tensor& denom_diag,
                          double eps = kTraceRatioEps) {
  detail::require_same_tape(numer, denom_diag);
  if (numer.rows() != 1 || denom_diag.rows() != 1 || numer.cols() != denom_diag.cols())
    throw std::invalid_argument("trace_ratio: expects matching 1 x K tensors");
  int in = numer.id, id_ = denom_diag.id;
  double v = 0.0;
  for (int k = 0; k < numer.cols(); ++k)
    v += numer.value()(0, k) / std::max(denom_diag.value()(0, k), eps);
  return numer.tape->record(
      Matrix::Constant(1, 1, v), {in, id_},
      [in, id_, eps](Tape& t, const Tape::Node& self) {
        double g = self.grad(0, 0);
        const Matrix& nv = t.node(in).value;
        const Matrix& dv = t.node(id_).value;
        for (int k = 0; k < nv.cols(); ++k) {
          double d = std::max(dv(0, k), eps);
          if (t.node(in).requires_grad) t.node(in).grad(0, k) += g / d;
          if (t.node(id_).requires_grad && dv(0, k) > eps)
            t.node(id_).grad(0, k) += -g * nv(0, k) / (d * d);
        }
      });
}

/// Euclidean norm of each column, producing a 1 x K row vector.
inline Tensor frobenius_norm_columns(const Tensor& a) {
  int ia = a.id;
  Matrix norms(1, a.cols());
  for (int j = 0; j < a.cols(); ++j) norms(0, j) = a.value().col(j).norm();
  return a.tape->record(std::move(norms), {ia},
                        [ia](Tape& t, const Tape::Node& self) {
                          const Matrix& x = t.node(ia).value;
                          for (int j = 0; j < x.cols(); ++j) {
                            double norm = self.value(0, j);
                            if (norm > 0.0)
                              t.node(ia).grad.col(j) += (self.grad(0, j) / norm) * x.col(j);
                          }
                        });
}

/// First k columns of a tensor.
inline Tensor left_cols(const Tensor& a, int k) {
  if (k < 1 || k > a.cols()) throw std::invalid_argument("left_cols: bad column count");
  int ia = a.id;
  return a.tape->record(a.value().leftCols(k), {ia},
                        [ia, k](Tape& t, const Tape::Node& self) {
                          t.node(ia).grad.leftCols(k) += self.grad;
                        });
}

inline Tensor concat_cols(const Tensor& a, const Tensor& b) {
  detail::require_same_tape(a, b);
  if (a.rows() != b.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  Matrix v(a.rows(), a.cols() + b.cols());
  v << a.value(), b.value();
  int ia = a.id, ib = b.id, ca = a.cols(), cb = b.cols();
  return a.tape->record(std::move(v), {ia, ib},
                        [ia, ib, ca, cb](Tape& t, const Tape::Node& self) {
                          if (t.node(ia).requires_grad)
                            t.node(ia).grad += self.grad.leftCols(ca);
                          if (t.node(ib).requires_grad)
                            t.node(ib).grad += self.grad.rightCols(cb);
                        });
}

/// Mean cross entropy of row logits against integer class labels.
inline Tensor cross_entropy_logits(const Tensor& logits, const std::vector<int>& labels) {
  if (static_cast<int>(labels.size()) != logits.rows())
    throw std::invalid_argument("cross_entropy_logits: label count mismatch");
  const Matrix& z = logits.value();
  int n = logits.rows();
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (int i = 0; i < n; ++i) {
    double m = z.row(i).maxCoeff();
    Eigen::RowVectorXd e = (z.row(i).array() - m).exp();
    double total = e.sum();
    probs.row(i) = e / total;
    loss -= std::log(std::max(probs(i, labels[i]), 1e-300));
  }
  loss /= n;
  int il = logits.id;
  return logits.tape->record(
      Matrix::Constant(1, 1, loss), {il},
      [il, labels, probs, n](Tape& t, const Tape::Node& self) {
        double g = self.grad(0, 0) / n;
        Matrix d = probs;
        for (int i = 0; i < n; ++i) d(i, labels[i]) -= 1.0;
        t.node(il).grad += g * d;
      });
}

}  // namespace ad
}  // namespace hosc
