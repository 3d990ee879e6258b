#include "pkef/core/params.hpp"

#include <cmath>

#include "pkef/errors.hpp"

namespace pkef {

std::size_t ParameterStore::add(std::string name, DenseMatrix value) {
  if (index_.count(name) != 0) throw ConfigError("duplicate parameter '" + name + "'");
  index_.emplace(name, params_.size());
  params_.push_back({std::move(name), std::move(value)});
  return params_.size() - 1;
}

std::size_t ParameterStore::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("unknown parameter '" + name + "'");
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

DenseMatrix xavier_uniform(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-bound, bound);
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = dist(rng);
  return m;
}

BoundParameters::BoundParameters(Tape& tape, const ParameterStore& store) : store_(&store) {
  vars_.reserve(store.size());
  for (const auto& p : store) vars_.push_back(tape.variable(p.value));
}

BoundParameters::BoundParameters(Tape& tape, const ParameterStore& store,
                                 const std::vector<std::string>& skip_prefixes)
    : store_(&store) {
  vars_.reserve(store.size());
  for (const auto& p : store) {
    bool skip = false;
    for (const auto& prefix : skip_prefixes) skip = skip || p.name.rfind(prefix, 0) == 0;
    vars_.push_back(skip ? Var{} : tape.variable(p.value));
  }
}

Var BoundParameters::operator[](const std::string& name) const {
  const Var v = vars_[store_->index_of(name)];
  if (!v.valid()) throw ConfigError("parameter '" + name + "' is not bound on this tape");
  return v;
}

std::vector<DenseMatrix> BoundParameters::gradients(Tape& tape) const {
  std::vector<DenseMatrix> out;
  out.reserve(vars_.size());
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].valid()) {
      out.push_back(tape.grad(vars_[i]));
    } else {
      const auto& value = (*store_)[i].value;
      out.emplace_back(value.rows(), value.cols());
    }
  }
  return out;
}

}  // namespace pkef
