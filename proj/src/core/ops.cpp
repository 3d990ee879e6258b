#include "pkef/core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pkef/errors.hpp"

namespace pkef {

Projection project(std::span<const double> a, std::span<const double> b, double eps) {
  if (a.size() != b.size()) throw ConfigError("project: length mismatch");
  Projection p;
  p.vector.assign(a.size(), 0.0);
  const double bb = dot(b, b);
  if (std::sqrt(bb) < eps) return p;
  p.coefficient = dot(a, b) / bb;
  for (std::size_t i = 0; i < a.size(); ++i) p.vector[i] = p.coefficient * b[i];
  return p;
}

DenseMatrix rowwise_softmax(const DenseMatrix& x) {
  DenseMatrix y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row(r);
    auto out = y.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (out[j] = std::exp(in[j] - m));
    for (double& v : out) v /= z;
  }
  return y;
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace ops {
namespace {

void require_same_shape(const Tape& t, Var a, Var b, const char* op) {
  const auto& x = t.value(a);
  const auto& y = t.value(b);
  if (!x.same_shape(y)) {
    throw ConfigError(std::string(op) + ": shape mismatch " + std::to_string(x.rows()) + "x" +
                      std::to_string(x.cols()) + " vs " + std::to_string(y.rows()) + "x" +
                      std::to_string(y.cols()));
  }
}

void accumulate(Tape& t, Var v, const DenseMatrix& g) {
  if (t.requires_grad(v)) t.grad_buffer(v) += g;
}

DenseMatrix scalar(double v) { return DenseMatrix(1, 1, v); }

}  // namespace

Var spmm(Tape& t, const SparseMatrix& a, Var x) {
  DenseMatrix out = pkef::spmm(a, t.value(x));
  const SparseMatrix* ap = &a;
  return t.record(std::move(out), {x}, [ap, x](Tape& tp, std::size_t self) {
    accumulate(tp, x, spmm_transposed(*ap, tp.out_grad(self)));
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "add");
  return t.record(t.value(a) + t.value(b), {a, b}, [a, b](Tape& tp, std::size_t self) {
    accumulate(tp, a, tp.out_grad(self));
    accumulate(tp, b, tp.out_grad(self));
  });
}

Var sub(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "sub");
  return t.record(t.value(a) - t.value(b), {a, b}, [a, b](Tape& tp, std::size_t self) {
    accumulate(tp, a, tp.out_grad(self));
    if (tp.requires_grad(b)) tp.grad_buffer(b) -= tp.out_grad(self);
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "mul");
  DenseMatrix out = t.value(a);
  auto ov = out.values();
  auto bv = t.value(b).values();
  for (std::size_t i = 0; i < ov.size(); ++i) ov[i] *= bv[i];
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const auto g = tp.out_grad(self).values();
    if (tp.requires_grad(a)) {
      auto dst = tp.grad_buffer(a).values();
      auto other = tp.value(b).values();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
    }
    if (tp.requires_grad(b)) {
      auto dst = tp.grad_buffer(b).values();
      auto other = tp.value(a).values();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i] * other[i];
    }
  });
}

Var scale(Tape& t, Var a, double s) {
  return t.record(s * t.value(a), {a}, [a, s](Tape& tp, std::size_t self) {
    accumulate(tp, a, s * tp.out_grad(self));
  });
}

Var add_n(Tape& t, std::span<const Var> terms) {
  if (terms.empty()) throw ConfigError("add_n: no terms");
  DenseMatrix out = t.value(terms[0]);
  for (std::size_t i = 1; i < terms.size(); ++i) {
    require_same_shape(t, terms[0], terms[i], "add_n");
    out += t.value(terms[i]);
  }
  std::vector<Var> in(terms.begin(), terms.end());
  return t.record(std::move(out), in, [](Tape& tp, std::size_t self) {
    for (Var v : tp.inputs(self)) accumulate(tp, v, tp.out_grad(self));
  });
}

Var matmul_nt(Tape& t, Var x, Var w) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  if (xv.cols() != wv.cols()) {
    throw ConfigError("matmul_nt: inner dimensions " + std::to_string(xv.cols()) + " vs " +
                      std::to_string(wv.cols()));
  }
  const std::size_t n = xv.rows(), in = xv.cols(), out_dim = wv.rows();
  DenseMatrix out(n, out_dim);
  for (std::size_t r = 0; r < n; ++r) {
    auto xr = xv.row(r);
    for (std::size_t o = 0; o < out_dim; ++o) out(r, o) = dot(xr, wv.row(o));
  }
  return t.record(std::move(out), {x, w}, [x, w, n, in, out_dim](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    if (tp.requires_grad(x)) {
      auto& dx = tp.grad_buffer(x);
      const auto& wv2 = tp.value(w);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double gro = g(r, o);
          if (gro == 0.0) continue;
          auto wr = wv2.row(o);
          auto dr = dx.row(r);
          for (std::size_t i = 0; i < in; ++i) dr[i] += gro * wr[i];
        }
    }
    if (tp.requires_grad(w)) {
      auto& dw = tp.grad_buffer(w);
      const auto& xv2 = tp.value(x);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out_dim; ++o) {
          const double gro = g(r, o);
          if (gro == 0.0) continue;
          auto xr = xv2.row(r);
          auto dr = dw.row(o);
          for (std::size_t i = 0; i < in; ++i) dr[i] += gro * xr[i];
        }
    }
  });
}

Var add_row(Tape& t, Var x, Var bias) {
  const auto& xv = t.value(x);
  const auto& bv = t.value(bias);
  if (bv.rows() != 1 || bv.cols() != xv.cols()) throw ConfigError("add_row: bias shape mismatch");
  DenseMatrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv(0, c);
  }
  return t.record(std::move(out), {x, bias}, [x, bias](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    accumulate(tp, x, g);
    if (tp.requires_grad(bias)) {
      auto& db = tp.grad_buffer(bias);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) db(0, c) += g(r, c);
    }
  });
}

Var concat_cols(Tape& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.rows() != bv.rows()) throw ConfigError("concat_cols: row count mismatch");
  const std::size_t ca = av.cols(), cb = bv.cols();
  DenseMatrix out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + ca);
  }
  return t.record(std::move(out), {a, b}, [a, b, ca, cb](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    if (tp.requires_grad(a)) {
      auto& da = tp.grad_buffer(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < ca; ++c) da(r, c) += g(r, c);
    }
    if (tp.requires_grad(b)) {
      auto& db = tp.grad_buffer(b);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < cb; ++c) db(r, c) += g(r, ca + c);
    }
  });
}

Var concat_rows(Tape& t, Var a, Var b) {
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  if (av.cols() != bv.cols()) throw ConfigError("concat_rows: column count mismatch");
  std::vector<double> values(av.values().begin(), av.values().end());
  values.insert(values.end(), bv.values().begin(), bv.values().end());
  const std::size_t split = av.size();
  DenseMatrix out(av.rows() + bv.rows(), av.cols(), std::move(values));
  return t.record(std::move(out), {a, b}, [a, b, split](Tape& tp, std::size_t self) {
    const auto g = tp.out_grad(self).values();
    if (tp.requires_grad(a)) {
      auto dst = tp.grad_buffer(a).values();
      for (std::size_t i = 0; i < split; ++i) dst[i] += g[i];
    }
    if (tp.requires_grad(b)) {
      auto dst = tp.grad_buffer(b).values();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += g[split + i];
    }
  });
}

Var gather_rows(Tape& t, Var x, std::vector<std::uint32_t> index) {
  const auto& xv = t.value(x);
  DenseMatrix out(index.size(), xv.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= xv.rows()) throw ConfigError("gather_rows: index out of range");
    auto src = xv.row(index[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return t.record(std::move(out), {x}, [x, index = std::move(index)](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    auto& dx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < index.size(); ++r) {
      auto src = g.row(r);
      auto dst = dx.row(index[r]);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var column(Tape& t, Var x, std::size_t j) {
  const auto& xv = t.value(x);
  if (j >= xv.cols()) throw ConfigError("column: index out of range");
  DenseMatrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r) out(r, 0) = xv(r, j);
  return t.record(std::move(out), {x}, [x, j](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    auto& dx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < g.rows(); ++r) dx(r, j) += g(r, 0);
  });
}

Var scale_rows(Tape& t, Var x, Var w) {
  const auto& xv = t.value(x);
  const auto& wv = t.value(w);
  if (wv.rows() != xv.rows() || wv.cols() != 1) throw ConfigError("scale_rows: weight shape");
  DenseMatrix out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (double& v : out.row(r)) v *= wv(r, 0);
  return t.record(std::move(out), {x, w}, [x, w](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    if (tp.requires_grad(x)) {
      auto& dx = tp.grad_buffer(x);
      const auto& wv2 = tp.value(w);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto src = g.row(r);
        auto dst = dx.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += wv2(r, 0) * src[c];
      }
    }
    if (tp.requires_grad(w)) {
      auto& dw = tp.grad_buffer(w);
      const auto& xv2 = tp.value(x);
      for (std::size_t r = 0; r < g.rows(); ++r) dw(r, 0) += dot(g.row(r), xv2.row(r));
    }
  });
}

Var row_sum(Tape& t, Var x) {
  const auto& xv = t.value(x);
  DenseMatrix out(xv.rows(), 1);
  for (std::size_t r = 0; r < xv.rows(); ++r)
    for (double v : xv.row(r)) out(r, 0) += v;
  return t.record(std::move(out), {x}, [x](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    auto& dx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (double& v : dx.row(r)) v += g(r, 0);
  });
}

Var row_dot(Tape& t, Var a, Var b) {
  require_same_shape(t, a, b, "row_dot");
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  DenseMatrix out(av.rows(), 1);
  for (std::size_t r = 0; r < av.rows(); ++r) out(r, 0) = dot(av.row(r), bv.row(r));
  return t.record(std::move(out), {a, b}, [a, b](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    auto scatter = [&](Var target, Var other) {
      if (!tp.requires_grad(target)) return;
      auto& d = tp.grad_buffer(target);
      const auto& o = tp.value(other);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto src = o.row(r);
        auto dst = d.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += g(r, 0) * src[c];
      }
    };
    scatter(a, b);
    scatter(b, a);
  });
}

Var row_softmax(Tape& t, Var x) {
  DenseMatrix y = rowwise_softmax(t.value(x));
  return t.record(std::move(y), {x}, [x](Tape& tp, std::size_t self) {
    const auto& g = tp.out_grad(self);
    const auto& y = tp.value(Var{self});
    auto& dx = tp.grad_buffer(x);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const double gy = dot(g.row(r), y.row(r));
      for (std::size_t c = 0; c < g.cols(); ++c) dx(r, c) += y(r, c) * (g(r, c) - gy);
    }
  });
}

Var row_project(Tape& t, Var a, Var b, ProjectionGrad mode, double eps) {
  require_same_shape(t, a, b, "row_project");
  const auto& av = t.value(a);
  const auto& bv = t.value(b);
  const std::size_t n = av.rows();
  std::vector<double> coef(n, 0.0);
  std::vector<double> inv_norm2(n, 0.0);  // zero marks a degenerate row
  for (std::size_t r = 0; r < n; ++r) {
    const double bb = dot(bv.row(r), bv.row(r));
    if (std::sqrt(bb) < eps) continue;
    inv_norm2[r] = 1.0 / bb;
    coef[r] = dot(av.row(r), bv.row(r)) / bb;
  }
  if (mode == ProjectionGrad::stop_coefficient && t.memo() != nullptr) {
    coef = t.memo()->exchange(std::move(coef));
  }
  DenseMatrix out(n, av.cols());
  for (std::size_t r = 0; r < n; ++r) {
    auto src = bv.row(r);
    auto dst = out.row(r);
    for (std::size_t c = 0; c < src.size(); ++c) dst[c] = coef[r] * src[c];
  }
  if (mode == ProjectionGrad::stop_coefficient) {
    return t.record(std::move(out), {a, b}, [b, coef = std::move(coef)](Tape& tp, std::size_t self) {
      if (!tp.requires_grad(b)) return;
      const auto& g = tp.out_grad(self);
      auto& db = tp.grad_buffer(b);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        auto src = g.row(r);
        auto dst = db.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += coef[r] * src[c];
      }
    });
  }
  return t.record(std::move(out), {a, b},
                  [a, b, coef = std::move(coef), inv = std::move(inv_norm2)](Tape& tp,
                                                                             std::size_t self) {
    const auto& g = tp.out_grad(self);
    const auto& av2 = tp.value(a);
    const auto& bv2 = tp.value(b);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      if (inv[r] == 0.0) continue;
      auto gr = g.row(r);
      auto ar = av2.row(r);
      auto br = bv2.row(r);
      const double gb = dot(gr, br) * inv[r];
      if (tp.requires_grad(a)) {
        auto da = tp.grad_buffer(a).row(r);
        for (std::size_t c = 0; c < gr.size(); ++c) da[c] += gb * br[c];
      }
      if (tp.requires_grad(b)) {
        auto db = tp.grad_buffer(b).row(r);
        for (std::size_t c = 0; c < gr.size(); ++c)
          db[c] += coef[r] * gr[c] + gb * ar[c] - 2.0 * coef[r] * gb * br[c];
      }
    }
  });
}

Var softplus_sum(Tape& t, Var x, double s) {
  double total = 0.0;
  for (double v : t.value(x).values()) total += softplus(v);
  return t.record(scalar(s * total), {x}, [x, s](Tape& tp, std::size_t self) {
    const double g = tp.out_grad(self)(0, 0) * s;
    auto src = tp.value(x).values();
    auto dst = tp.grad_buffer(x).values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += g * sigmoid(src[i]);
  });
}

Var sum_squares(Tape& t, Var x) {
  double total = 0.0;
  for (double v : t.value(x).values()) total += v * v;
  return t.record(scalar(total), {x}, [x](Tape& tp, std::size_t self) {
    const double g = tp.out_grad(self)(0, 0);
    auto src = tp.value(x).values();
    auto dst = tp.grad_buffer(x).values();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] += 2.0 * g * src[i];
  });
}

Var sum(Tape& t, Var x) {
  double total = 0.0;
  for (double v : t.value(x).values()) total += v;
  return t.record(scalar(total), {x}, [x](Tape& tp, std::size_t self) {
    const double g = tp.out_grad(self)(0, 0);
    for (double& v : tp.grad_buffer(x).values()) v += g;
  });
}

}  // namespace ops
}  // namespace pkef
