#include "pkef/core/sparse.hpp"

#include <algorithm>
#include <string>

#include "pkef/errors.hpp"

namespace pkef {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      throw ConfigError("SparseMatrix: entry (" + std::to_string(t.row) + ", " +
                        std::to_string(t.col) + ") out of bounds");
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  SparseMatrix m(rows, cols);
  m.col_index_.reserve(entries.size());
  m.values_.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].row == entries[i - 1].row && entries[i].col == entries[i - 1].col) {
      throw ConfigError("SparseMatrix: duplicate entry (" + std::to_string(entries[i].row) + ", " +
                        std::to_string(entries[i].col) + ")");
    }
    m.row_ptr_[entries[i].row + 1]++;
    m.col_index_.push_back(static_cast<std::uint32_t>(entries[i].col));
    m.values_.push_back(entries[i].value);
  }
  for (std::size_t r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
  return m;
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<Triplet> entries;
  for (std::size_t r = 0; r < dense.rows(); ++r)
    for (std::size_t c = 0; c < dense.cols(); ++c)
      if (dense(r, c) != 0.0) entries.push_back({r, c, dense(r, c)});
  return from_triplets(dense.rows(), dense.cols(), std::move(entries));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> entries;
  entries.reserve(n);
  for (std::size_t i = 0; i < n; ++i) entries.push_back({i, i, 1.0});
  return from_triplets(n, n, std::move(entries));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  auto cols = row_cols(r);
  auto it = std::lower_bound(cols.begin(), cols.end(), static_cast<std::uint32_t>(c));
  if (it == cols.end() || *it != c) return 0.0;
  return row_values(r)[static_cast<std::size_t>(it - cols.begin())];
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix d(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r) {
    auto cols = row_cols(r);
    auto vals = row_values(r);
    for (std::size_t i = 0; i < cols.size(); ++i) d(r, cols[i]) = vals[i];
  }
  return d;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ConfigError("spmm: sparse is " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " but dense has " + std::to_string(b.rows()) +
                      " rows");
  }
  const std::size_t d = b.cols();
  DenseMatrix out(a.rows(), d);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    auto dst = out.row(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      auto src = b.row(cols[i]);
      const double w = vals[i];
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& g) {
  if (a.rows() != g.rows()) throw ConfigError("spmm_transposed: dimension mismatch");
  const std::size_t d = g.cols();
  DenseMatrix out(a.cols(), d);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto cols = a.row_cols(r);
    auto vals = a.row_values(r);
    auto src = g.row(r);
    for (std::size_t i = 0; i < cols.size(); ++i) {
      auto dst = out.row(cols[i]);
      const double w = vals[i];
      for (std::size_t j = 0; j < d; ++j) dst[j] += w * src[j];
    }
  }
  return out;
}

}  // namespace pkef
