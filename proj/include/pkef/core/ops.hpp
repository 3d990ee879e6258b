#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pkef/core/dense.hpp"
#include "pkef/core/sparse.hpp"
#include "pkef/core/tape.hpp"

namespace pkef {

inline constexpr double kProjectionEps = 1e-12;

struct Projection {
  std::vector<double> vector;
  double coefficient = 0.0;  // (a.b)/|b|^2, zero in the degenerate case
};

// Component of a collinear with b. Returns zero when |b| < eps.
Projection project(std::span<const double> a, std::span<const double> b,
                   double eps = kProjectionEps);

DenseMatrix rowwise_softmax(const DenseMatrix& x);

// log(1 + e^x) without overflow.
double softplus(double x);
double sigmoid(double x);

// Differentiable operations. Every function appends one node to the tape.
namespace ops {

// a is graph structure and must outlive the tape; only x is differentiated.
Var spmm(Tape& t, const SparseMatrix& a, Var x);

Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var add_n(Tape& t, std::span<const Var> terms);

// x (n x in) times w^T (w is out x in).
Var matmul_nt(Tape& t, Var x, Var w);
// Adds a 1 x c bias row to every row of x.
Var add_row(Tape& t, Var x, Var bias);

Var concat_cols(Tape& t, Var a, Var b);
Var concat_rows(Tape& t, Var a, Var b);
Var gather_rows(Tape& t, Var x, std::vector<std::uint32_t> index);
Var column(Tape& t, Var x, std::size_t j);

// Multiplies row i of x by the scalar w(i, 0).
Var scale_rows(Tape& t, Var x, Var w);
Var row_sum(Tape& t, Var x);
Var row_dot(Tape& t, Var a, Var b);
Var row_softmax(Tape& t, Var x);

enum class ProjectionGrad {
  full,              // differentiate through coefficient and direction
  stop_coefficient,  // coefficient is a constant; gradient only reaches b
};

// Row-wise collinear component of a along b; zero rows where |b| < eps.
// In stop_coefficient mode the coefficients go through the tape's
// ProjectionMemo, when one is attached.
Var row_project(Tape& t, Var a, Var b, ProjectionGrad mode, double eps = kProjectionEps);

// 1 x 1: s * sum softplus(x).
Var softplus_sum(Tape& t, Var x, double s);
// 1 x 1: sum of squared entries.
Var sum_squares(Tape& t, Var x);
// 1 x 1: sum of entries.
Var sum(Tape& t, Var x);

}  // namespace ops
}  // namespace pkef
