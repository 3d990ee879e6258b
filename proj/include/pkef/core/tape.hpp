#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "pkef/core/dense.hpp"

namespace pkef {

// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

// Records the coefficients of stop-gradient projections on one pass and
// replays them on later passes, so a finite-difference probe evaluates the
// same surrogate function whose gradient backward() computes.
class ProjectionMemo {
 public:
  enum class Mode { record, replay };

  void record() {
    mode_ = Mode::record;
    batches_.clear();
    cursor_ = 0;
  }
  void replay() {
    mode_ = Mode::replay;
    cursor_ = 0;
  }
  Mode mode() const { return mode_; }

  // Record mode stores `fresh` and returns it; replay mode returns the
  // coefficients stored at the same position of the recording pass.
  std::vector<double> exchange(std::vector<double> fresh);

 private:
  Mode mode_ = Mode::record;
  std::vector<std::vector<double>> batches_;
  std::size_t cursor_ = 0;
};

// Reverse-mode tape over dense matrices. Nodes are appended in evaluation
// order, so node ids are a topological order and backward() walks them in
// reverse. Gradients accumulate additively into each input.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t node)>;

  Tape() = default;
  explicit Tape(ProjectionMemo* memo) : memo_(memo) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var constant(DenseMatrix value);
  Var variable(DenseMatrix value);
  Var record(DenseMatrix value, std::vector<Var> inputs, Backward backward);

  const DenseMatrix& value(Var v) const { return nodes_.at(v.id).value; }
  const std::vector<Var>& inputs(std::size_t node) const { return nodes_[node].inputs; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  // Gradient of the last backward() loss with respect to v; zeros when v
  // does not influence the loss.
  const DenseMatrix& grad(Var v);

  // Accumulation buffer for node gradients, zero-initialized on first use.
  DenseMatrix& grad_buffer(Var v);
  const DenseMatrix& out_grad(std::size_t node) const { return nodes_[node].grad; }

  // Throws UsageError when loss is not 1 x 1.
  void backward(Var loss);

  // Disabling gradients drops closures and inputs; used for inference.
  void set_grad_enabled(bool enabled) { grad_enabled_ = enabled; }
  bool grad_enabled() const { return grad_enabled_; }

  ProjectionMemo* memo() const { return memo_; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    DenseMatrix value;
    DenseMatrix grad;
    std::vector<Var> inputs;
    Backward backward;
    bool requires_grad = false;
  };

  std::vector<Node> nodes_;
  ProjectionMemo* memo_ = nullptr;
  bool grad_enabled_ = true;
};

}  // namespace pkef
