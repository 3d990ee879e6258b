#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "pkef/core/dense.hpp"
#include "pkef/core/tape.hpp"

namespace pkef {

struct Parameter {
  std::string name;
  DenseMatrix value;
};

// Named trainable tensors in registration order. The order is the
// checkpoint order and the optimizer's slot order.
class ParameterStore {
 public:
  std::size_t add(std::string name, DenseMatrix value);
  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  std::size_t index_of(const std::string& name) const;
  DenseMatrix& value(const std::string& name) { return params_[index_of(name)].value; }
  const DenseMatrix& value(const std::string& name) const { return params_[index_of(name)].value; }
  std::size_t scalar_count() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Uniform(-b, b) with b = sqrt(6 / (rows + cols)).
DenseMatrix xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

// Every parameter of a store placed on a tape as a differentiable leaf.
class BoundParameters {
 public:
  BoundParameters(Tape& tape, const ParameterStore& store);
  // Binds only the parameters whose name does not start with one of
  // `skip_prefixes`; looking up a skipped one throws ConfigError.
  BoundParameters(Tape& tape, const ParameterStore& store,
                  const std::vector<std::string>& skip_prefixes);
  Var operator[](const std::string& name) const;
  Var at(std::size_t i) const { return vars_[i]; }
  std::size_t size() const { return vars_.size(); }

  // Gradients in store order; call after tape.backward().
  std::vector<DenseMatrix> gradients(Tape& tape) const;

 private:
  const ParameterStore* store_;
  std::vector<Var> vars_;
};

}  // namespace pkef
