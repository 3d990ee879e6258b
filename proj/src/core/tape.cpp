#include "pkef/core/tape.hpp"

#include <string>

#include "pkef/errors.hpp"

namespace pkef {

std::vector<double> ProjectionMemo::exchange(std::vector<double> fresh) {
  if (mode_ == Mode::record) {
    batches_.push_back(fresh);
    return fresh;
  }
  if (cursor_ >= batches_.size() || batches_[cursor_].size() != fresh.size()) {
    throw UsageError("ProjectionMemo: replay does not match the recorded pass");
  }
  return batches_[cursor_++];
}

Var Tape::constant(DenseMatrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  return Var{nodes_.size() - 1};
}

Var Tape::variable(DenseMatrix value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, grad_enabled_});
  return Var{nodes_.size() - 1};
}

Var Tape::record(DenseMatrix value, std::vector<Var> inputs, Backward backward) {
  bool needs = false;
  if (grad_enabled_) {
    for (Var in : inputs) needs = needs || nodes_.at(in.id).requires_grad;
  }
  if (!needs) {
    nodes_.push_back(Node{std::move(value), {}, {}, {}, false});
  } else {
    nodes_.push_back(Node{std::move(value), {}, std::move(inputs), std::move(backward), true});
  }
  return Var{nodes_.size() - 1};
}

DenseMatrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.empty() && !n.value.empty()) n.grad = DenseMatrix(n.value.rows(), n.value.cols());
  return n.grad;
}

const DenseMatrix& Tape::grad(Var v) { return grad_buffer(v); }

void Tape::backward(Var loss) {
  const Node& l = nodes_.at(loss.id);
  if (l.value.rows() != 1 || l.value.cols() != 1) {
    throw UsageError("backward: loss must be 1x1, got " + std::to_string(l.value.rows()) + "x" +
                     std::to_string(l.value.cols()));
  }
  for (Node& n : nodes_) n.grad = DenseMatrix();
  grad_buffer(loss)(0, 0) = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, i);
  }
}

}  // namespace pkef
