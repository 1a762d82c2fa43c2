#include "wmtkit/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wmtkit::kernels {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

// Scaled logits Q K^T / sqrt(d_k), with kMaskValue added above the diagonal.
Matrix masked_logits(const Matrix& q, const Matrix& k, bool causal) {
  require(q.cols() == k.cols(), "attention: query width " + std::to_string(q.cols()) +
                                    " != key width " + std::to_string(k.cols()));
  require(q.cols() > 0, "attention: zero head dimension");
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  Matrix logits(q.rows(), k.rows());
  for (std::size_t i = 0; i < q.rows(); ++i) {
    for (std::size_t j = 0; j < k.rows(); ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < q.cols(); ++c) dot += q(i, c) * k(j, c);
      logits(i, j) = dot * inv_sqrt;
      if (causal && j > i) logits(i, j) += kMaskValue;
    }
  }
  return logits;
}

void check_heads(std::span<const Matrix> q, std::span<const Matrix> k, std::span<const Matrix> v) {
  require(!q.empty(), "attention: no heads");
  require(q.size() == k.size() && q.size() == v.size(), "attention: head counts differ");
  for (std::size_t h = 0; h < q.size(); ++h) {
    require(k[h].rows() == v[h].rows(), "attention: key and value lengths differ");
    require(q[h].rows() == q[0].rows() && k[h].rows() == k[0].rows(),
            "attention: sequence lengths differ between heads");
  }
}

Matrix mean_prefix(const Matrix& y) {
  Matrix out(y.rows(), y.cols());
  std::vector<double> sum(y.cols(), 0.0);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t c = 0; c < y.cols(); ++c) {
      sum[c] += y(i, c);
      out(i, c) = sum[c] / static_cast<double>(i + 1);
    }
  }
  return out;
}

}  // namespace

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const auto row = m.row(r);
    if (row.empty()) continue;
    const double mx = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out(r, c) = std::exp(row[c] - mx);
      total += out(r, c);
    }
    for (auto& v : out.row(r)) v /= total;
  }
  return out;
}

Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, bool causal) {
  require(k.rows() == v.rows(), "attention: " + std::to_string(k.rows()) + " keys but " +
                                    std::to_string(v.rows()) + " values");
  return matmul(softmax_rows(masked_logits(q, k, causal)), v);
}

Matrix multi_head_attention(std::span<const Matrix> q, std::span<const Matrix> k,
                            std::span<const Matrix> v, bool causal) {
  check_heads(q, k, v);
  std::vector<Matrix> heads;
  heads.reserve(q.size());
  for (std::size_t h = 0; h < q.size(); ++h) {
    heads.push_back(scaled_dot_attention(q[h], k[h], v[h], causal));
  }
  return hconcat(heads);
}

Matrix talking_heads_attention(std::span<const Matrix> q, std::span<const Matrix> k,
                               std::span<const Matrix> v, const Matrix& w_l, const Matrix& w_w,
                               bool causal) {
  check_heads(q, k, v);
  const std::size_t h = q.size();
  require(w_l.rows() == h && w_l.cols() == h, "talking heads: W_l must be " + std::to_string(h) +
                                                  "x" + std::to_string(h));
  require(w_w.rows() == h && w_w.cols() == h, "talking heads: W_w must be " + std::to_string(h) +
                                                  "x" + std::to_string(h));
  const std::size_t tq = q[0].rows();
  const std::size_t tk = k[0].rows();

  std::vector<Matrix> logits;
  logits.reserve(h);
  for (std::size_t i = 0; i < h; ++i) logits.push_back(masked_logits(q[i], k[i], causal));

  std::vector<Matrix> weights;
  weights.reserve(h);
  for (std::size_t g = 0; g < h; ++g) {
    Matrix mixed(tq, tk);
    for (std::size_t src = 0; src < h; ++src) {
      const double w = w_l(src, g);
      for (std::size_t i = 0; i < tq; ++i) {
        for (std::size_t j = 0; j < tk; ++j) mixed(i, j) += w * logits[src](i, j);
      }
    }
    if (causal) {
      for (std::size_t i = 0; i < tq; ++i) {
        for (std::size_t j = i + 1; j < tk; ++j) mixed(i, j) = kMaskValue;
      }
    }
    weights.push_back(softmax_rows(mixed));
  }

  std::vector<Matrix> heads;
  heads.reserve(h);
  for (std::size_t g = 0; g < h; ++g) {
    Matrix mixed(tq, tk);
    for (std::size_t src = 0; src < h; ++src) {
      const double w = w_w(src, g);
      for (std::size_t i = 0; i < tq; ++i) {
        for (std::size_t j = 0; j < tk; ++j) mixed(i, j) += w * weights[src](i, j);
      }
    }
    heads.push_back(matmul(mixed, v[g]));
  }
  return hconcat(heads);
}

Matrix FeedForward::apply(const Matrix& x) const {
  return add_row_vector(matmul(relu(add_row_vector(matmul(x, w1), b1)), w2), b2);
}

FeedForward FeedForward::identity(std::size_t d) {
  FeedForward f{Matrix(d, 2 * d), Matrix(1, 2 * d), Matrix(2 * d, d), Matrix(1, d)};
  for (std::size_t i = 0; i < d; ++i) {
    f.w1(i, i) = 1.0;
    f.w1(i, d + i) = -1.0;
    f.w2(i, i) = 1.0;
    f.w2(d + i, i) = -1.0;
  }
  return f;
}

FeedForward FeedForward::zeros(std::size_t d, std::size_t hidden) {
  return {Matrix(d, hidden), Matrix(1, hidden), Matrix(hidden, d), Matrix(1, d)};
}

FeedForward FeedForward::random(std::size_t d, std::size_t hidden, rng::Engine& engine,
                                double scale) {
  FeedForward f;
  f.w1 = Matrix::random(d, hidden, engine, scale);
  f.b1 = Matrix::random(1, hidden, engine, scale);
  f.w2 = Matrix::random(hidden, d, engine, scale);
  f.b2 = Matrix::random(1, d, engine, scale);
  return f;
}

Matrix aan_context(const Matrix& y, const FeedForward& ffn) {
  if (y.rows() == 0) return Matrix(0, y.cols());
  return ffn.apply(mean_prefix(y));
}

Matrix exp_weighted_context(const Matrix& y, double alpha, const FeedForward& ffn,
                            RecurrenceBase base) {
  require(alpha >= 0.0 && alpha < 1.0, "alpha must lie in [0, 1)");
  if (y.rows() == 0) return Matrix(0, y.cols());
  Matrix c(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i) {
    for (std::size_t col = 0; col < y.cols(); ++col) {
      if (i == 0) {
        c(i, col) = base == RecurrenceBase::first_row ? y(0, col) : (1.0 - alpha) * y(0, col);
      } else {
        c(i, col) = (1.0 - alpha) * y(i, col) + alpha * c(i - 1, col);
      }
    }
  }
  return ffn.apply(c);
}

void AttentionParams::validate() const {
  require(heads >= 1 && head_dim >= 1, "attention: heads and head_dim must be positive");
  const std::size_t inner = heads * head_dim;
  const std::size_t d = wq.rows();
  for (const Matrix* m : {&wq, &wk, &wv}) {
    require(m->rows() == d && m->cols() == inner,
            "attention: projections must be " + std::to_string(d) + "x" + std::to_string(inner));
  }
  require(wo.rows() == inner && wo.cols() == d,
          "attention: output projection must be " + std::to_string(inner) + "x" + std::to_string(d));
  require(w_l.has_value() == w_w.has_value(), "attention: W_l and W_w must be given together");
  if (w_l) {
    require(w_l->rows() == heads && w_l->cols() == heads && w_w->rows() == heads &&
                w_w->cols() == heads,
            "attention: head mixers must be " + std::to_string(heads) + "x" + std::to_string(heads));
  }
}

AttentionParams AttentionParams::random(std::size_t d_model, std::size_t heads,
                                        std::size_t head_dim, rng::Engine& engine,
                                        bool talking_heads, double scale) {
  AttentionParams p;
  p.heads = heads;
  p.head_dim = head_dim;
  const std::size_t inner = heads * head_dim;
  p.wq = Matrix::random(d_model, inner, engine, scale);
  p.wk = Matrix::random(d_model, inner, engine, scale);
  p.wv = Matrix::random(d_model, inner, engine, scale);
  p.wo = Matrix::random(inner, d_model, engine, scale);
  if (talking_heads) {
    p.w_l = Matrix::random(heads, heads, engine, 1.0);
    p.w_w = Matrix::random(heads, heads, engine, 1.0);
  }
  return p;
}

AttentionParams AttentionParams::zeros(std::size_t d_model, std::size_t heads,
                                       std::size_t head_dim) {
  AttentionParams p;
  p.heads = heads;
  p.head_dim = head_dim;
  const std::size_t inner = heads * head_dim;
  p.wq = Matrix(d_model, inner);
  p.wk = Matrix(d_model, inner);
  p.wv = Matrix(d_model, inner);
  p.wo = Matrix(inner, d_model);
  return p;
}

Matrix attention_forward(const Matrix& x, const Matrix& memory, const AttentionParams& params,
                         bool causal) {
  params.validate();
  require(x.cols() == params.model_dim() && memory.cols() == params.model_dim(),
          "attention: input width does not match d_model " + std::to_string(params.model_dim()));
  const Matrix q = matmul(x, params.wq);
  const Matrix k = matmul(memory, params.wk);
  const Matrix v = matmul(memory, params.wv);
  std::vector<Matrix> qh, kh, vh;
  for (std::size_t h = 0; h < params.heads; ++h) {
    qh.push_back(q.col_slice(h * params.head_dim, params.head_dim));
    kh.push_back(k.col_slice(h * params.head_dim, params.head_dim));
    vh.push_back(v.col_slice(h * params.head_dim, params.head_dim));
  }
  const Matrix heads = params.talking_heads()
                           ? talking_heads_attention(qh, kh, vh, *params.w_l, *params.w_w, causal)
                           : multi_head_attention(qh, kh, vh, causal);
  return matmul(heads, params.wo);
}

Matrix dual_attention(const Matrix& x, const AttentionParams& self_attn,
                      const FeedForward& avg_ffn) {
  return scale(add(attention_forward(x, x, self_attn, true), aan_context(x, avg_ffn)), 0.5);
}

Matrix LayerNorm::apply(const Matrix& x) const {
  require(gamma.rows() == 1 && gamma.cols() == x.cols() && beta.rows() == 1 &&
              beta.cols() == x.cols(),
          "layer norm: parameters do not match width " + std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  const double d = static_cast<double>(x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    double mean = 0.0;
    for (double v : x.row(r)) mean += v;
    mean /= d;
    double var = 0.0;
    for (double v : x.row(r)) var += (v - mean) * (v - mean);
    var /= d;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out(r, c) = (x(r, c) - mean) * inv * gamma(0, c) + beta(0, c);
    }
  }
  return out;
}

LayerNorm LayerNorm::unit(std::size_t d) { return {Matrix(1, d, 1.0), Matrix(1, d, 0.0)}; }

}  // namespace wmtkit::kernels
