#pragma once

// Independent reference implementations for the tests. Plain nested loops
// over std::vector, sharing no code with the library beyond reading tensor
// values.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "eva/autodiff/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using Vec = std::vector<double>;

inline Mat to_mat(const eva::ad::Tensor& t) {
  const std::size_t r = t.rank() == 2 ? t.shape()[0] : 1;
  const std::size_t c = t.size() / r;
  Mat m(r, Vec(c));
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m[i][j] = t[i * c + j];
  return m;
}

inline Vec to_vec(const eva::ad::Tensor& t) { return Vec(t.data().begin(), t.data().end()); }

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat out(a.size(), Vec(b[0].size(), 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b[0].size(); ++j)
      for (std::size_t k = 0; k < b.size(); ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

inline Mat transpose(const Mat& a) {
  Mat out(a[0].size(), Vec(a.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  return out;
}

inline Mat affine(const Mat& x, const Mat& w, const Vec& b) {
  Mat out = matmul(x, transpose(w));
  for (auto& row : out)
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  return out;
}

inline Mat softmax_rows(Mat m) {
  for (auto& row : m) {
    const double mx = *std::max_element(row.begin(), row.end());
    double s = 0;
    for (auto& v : row) s += (v = std::exp(v - mx));
    for (auto& v : row) v /= s;
  }
  return m;
}

/// FC(Y + softmax(Y·Wqᵀ·Wk·Xᵀ/√d)·X·Wvᵀ), written as explicit sums.
inline Mat attend(const Mat& y, const Mat& x, const Mat& wq, const Mat& wk, const Mat& wv, const Mat& fc_w,
                  const Vec& fc_b) {
  const std::size_t d = wq.size();
  Mat logits(y.size(), Vec(x.size(), 0.0));
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      double s = 0;
      for (std::size_t a = 0; a < d; ++a) {
        double qa = 0, ka = 0;
        for (std::size_t b = 0; b < d; ++b) {
          qa += wq[a][b] * y[i][b];
          ka += wk[a][b] * x[j][b];
        }
        s += qa * ka;
      }
      logits[i][j] = s / std::sqrt(static_cast<double>(d));
    }
  const Mat r = softmax_rows(logits);
  Mat mixed = y;
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t c = 0; c < d; ++c)
      for (std::size_t j = 0; j < x.size(); ++j) {
        double v = 0;
        for (std::size_t b = 0; b < d; ++b) v += wv[c][b] * x[j][b];
        mixed[i][c] += r[i][j] * v;
      }
  return affine(mixed, fc_w, fc_b);
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Fusion score of proposal p against the query's word matrix.
inline double fusion_score(const Vec& p, const Mat& q, const Mat& pair_w, const Vec& pair_b, const Mat& score_w,
                           double score_b) {
  const std::size_t d = p.size();
  Vec qmax(d, -1e300);
  for (const auto& w : q)
    for (std::size_t k = 0; k < d; ++k) qmax[k] = std::max(qmax[k], w[k]);
  Vec cat(p);
  cat.insert(cat.end(), qmax.begin(), qmax.end());
  Vec j;
  for (std::size_t k = 0; k < d; ++k) j.push_back(p[k] + qmax[k]);
  for (std::size_t k = 0; k < d; ++k) j.push_back(p[k] * qmax[k]);
  for (std::size_t r = 0; r < d; ++r) {
    double s = pair_b[r];
    for (std::size_t c = 0; c < 2 * d; ++c) s += pair_w[r][c] * cat[c];
    j.push_back(s);
  }
  double z = score_b;
  for (std::size_t c = 0; c < 3 * d; ++c) z += score_w[0][c] * j[c];
  return sigmoid(z);
}

inline double sqdist(const Vec& a, const Vec& b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

/// Biased MMD² with the mean of RBF kernels over the bandwidths.
inline double mmd_squared(const Mat& x, const Mat& y, const Vec& bandwidths) {
  auto k = [&](const Vec& a, const Vec& b) {
    double s = 0;
    for (double h : bandwidths) s += std::exp(-sqdist(a, b) / (2 * h * h));
    return s / static_cast<double>(bandwidths.size());
  };
  double xx = 0, yy = 0, xy = 0;
  for (const auto& a : x)
    for (const auto& b : x) xx += k(a, b);
  for (const auto& a : y)
    for (const auto& b : y) yy += k(a, b);
  for (const auto& a : x)
    for (const auto& b : y) xy += k(a, b);
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  return xx / (n * n) + yy / (m * m) - 2 * xy / (n * m);
}

/// Every (start, end) pair with 0 <= start < end <= n that some window
/// placement produces: start on the stride grid, end = min(start + w, n).
inline std::set<std::pair<std::size_t, std::size_t>> proposal_set(std::size_t n, const std::vector<std::size_t>& windows,
                                                                  std::size_t stride) {
  std::set<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s)
    for (std::size_t e = s + 1; e <= n; ++e) {
      if (s % stride != 0) continue;
      for (auto w : windows)
        if (e == std::min(s + w, n)) out.insert({s, e});
    }
  return out;
}

/// Best proposal by exhaustive scan: highest score, then earliest start,
/// then shortest length.
inline std::size_t best_proposal(const Vec& scores, const std::vector<std::pair<std::size_t, std::size_t>>& iv) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    const auto key = [&](std::size_t i) {
      return std::make_tuple(-scores[i], iv[i].first, iv[i].second - iv[i].first);
    };
    if (key(k) < key(best)) best = k;
  }
  return best;
}

inline double iou(double a0, double a1, double b0, double b1) {
  const double inter = std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
  const double uni = (a1 - a0) + (b1 - b0) - inter;
  return inter / uni;
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1, double hi = 1) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, Vec(c));
  for (auto& row : m)
    for (auto& v : row) v = u(rng);
  return m;
}

inline eva::ad::Tensor to_tensor(const Mat& m, bool requires_grad = false) {
  return eva::ad::Tensor::matrix(m, requires_grad);
}

}  // namespace oracle
