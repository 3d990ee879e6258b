#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pkef/core/dense.hpp"

namespace pkef {

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

// Compressed sparse row matrix. Column indices within a row are strictly
// increasing and no (row, col) pair appears twice.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols);

  // Throws ConfigError on out-of-range indices or duplicate pairs.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix from_dense(const DenseMatrix& dense);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t nnz() const { return col_index_.size(); }

  std::span<const std::uint32_t> row_cols(std::size_t r) const {
    return {col_index_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {values_.data() + row_ptr_[r], row_ptr_[r + 1] - row_ptr_[r]};
  }

  double at(std::size_t r, std::size_t c) const;
  DenseMatrix to_dense() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::uint32_t> col_index_;
  std::vector<double> values_;
};

// a * b. Throws ConfigError when a.cols() != b.rows().
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);

// a^T * g, the adjoint used when differentiating spmm with respect to b.
DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& g);

}  // namespace pkef
