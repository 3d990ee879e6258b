#pragma once

// Straight-line reference implementations on nested vectors, written
// directly from the model definitions without the tape or the kernels.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pkef/core/params.hpp"
#include "pkef/propagation/pkf.hpp"

namespace pkef::oracle {

using Mat = std::vector<std::vector<double>>;

inline Mat to_mat(const DenseMatrix& m) {
  Mat out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  }
  return out;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), std::vector<double>(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t k = 0; k < b.size(); ++k) {
      for (std::size_t j = 0; j < b[0].size(); ++j) out[i][j] += a[i][k] * b[k][j];
    }
  }
  return out;
}

inline Mat plus(const Mat& a, const Mat& b) {
  Mat out = a;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[i].size(); ++j) out[i][j] += b[i][j];
  }
  return out;
}

inline std::vector<double> project_row(const std::vector<double>& a, const std::vector<double>& b) {
  double ab = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    bb += b[i] * b[i];
  }
  std::vector<double> out(a.size(), 0.0);
  if (std::sqrt(bb) < 1e-12) return out;
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = ab / bb * b[i];
  return out;
}

inline std::vector<double> fusion_term(FusionScheme scheme, const std::vector<double>& e_cas,
                                       const std::vector<double>& e_par, const Mat& W,
                                       const std::vector<double>& b, const Mat& T) {
  const std::size_t d = e_cas.size();
  std::vector<double> out(d, 0.0);
  switch (scheme) {
    case FusionScheme::none: break;
    case FusionScheme::projection: out = project_row(e_par, e_cas); break;
    case FusionScheme::summation: out = e_par; break;
    case FusionScheme::linear:
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) out[i] += T[i][j] * e_par[j];
      }
      break;
    case FusionScheme::vanilla: {
      double logits[4], mx = -1e300, z = 0;
      for (int j = 0; j < 4; ++j) {
        logits[j] = b[j];
        for (std::size_t i = 0; i < d; ++i) logits[j] += W[j][i] * e_cas[i];
        mx = std::max(mx, logits[j]);
      }
      for (double& l : logits) z += (l = std::exp(l - mx));
      for (std::size_t i = 0; i < d; ++i) {
        const double chunks[4] = {e_cas[i], e_par[i], e_cas[i] - e_par[i], e_cas[i] * e_par[i]};
        for (int j = 0; j < 4; ++j) out[i] += logits[j] / z * chunks[j];
      }
      break;
    }
  }
  return out;
}

struct Outputs {
  std::vector<Mat> cascade;
  std::vector<Mat> parallel;
};

// adjs are dense normalized adjacencies; params hold the network's values.
inline Outputs forward(const std::vector<Mat>& adjs, const ParameterStore& params,
                       const std::vector<int>& layers, FusionScheme scheme) {
  Mat x0 = to_mat(params.value("emb.user"));
  for (const auto& row : to_mat(params.value("emb.item"))) x0.push_back(row);
  Outputs out;
  Mat input = x0;
  for (std::size_t k = 0; k < adjs.size(); ++k) {
    const Mat& A = adjs[k];
    std::vector<Mat> p{x0}, messages;
    for (int l = 0; l < layers[k]; ++l) {
      messages.push_back(matmul(A, p.back()));
      p.push_back(plus(messages.back(), p.back()));
    }
    std::vector<Mat> z{input};
    for (int l = 0; l < layers[k]; ++l) {
      const Mat& prev = z.back();
      const Mat e = matmul(A, prev);
      Mat W, T;
      std::vector<double> b;
      if (scheme == FusionScheme::vanilla) {
        W = to_mat(params.value(PkfNetwork::fusion_weight_name(k, l)));
        b = to_mat(params.value(PkfNetwork::fusion_bias_name(k, l)))[0];
      }
      if (scheme == FusionScheme::linear) {
        T = to_mat(params.value(PkfNetwork::fusion_transform_name(k, l)));
      }
      Mat next = prev;
      for (std::size_t r = 0; r < prev.size(); ++r) {
        const auto f = fusion_term(scheme, e[r], messages[l][r], W, b, T);
        for (std::size_t c = 0; c < prev[r].size(); ++c) next[r][c] = e[r][c] + prev[r][c] + f[c];
      }
      z.push_back(next);
    }
    Mat zs = z[0], ps = p[0];
    for (std::size_t l = 1; l < z.size(); ++l) {
      zs = plus(zs, z[l]);
      ps = plus(ps, p[l]);
    }
    out.cascade.push_back(zs);
    if (scheme != FusionScheme::none) out.parallel.push_back(ps);
    input = plus(z.back(), z.front());
  }
  return out;
}

inline double max_diff(const Mat& a, const DenseMatrix& b) {
  double m = 0;
  for (std::size_t r = 0; r < a.size(); ++r) {
    for (std::size_t c = 0; c < a[r].size(); ++c) m = std::max(m, std::abs(a[r][c] - b(r, c)));
  }
  return m;
}

}  // namespace pkef::oracle
