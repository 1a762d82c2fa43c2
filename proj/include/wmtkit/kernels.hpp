#pragma once

// Forward-pass kernels for the attention variants: scaled dot-product and
// multi-head attention, talking-heads attention, average attention and the
// exponentially weighted average.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "wmtkit/matrix.hpp"

namespace wmtkit::kernels {

/// Added to logits of future positions.
inline constexpr double kMaskValue = -1e9;

/// Row-wise softmax with row-max subtraction.
Matrix softmax_rows(const Matrix& m);

/// softmax(Q K^T / sqrt(d_k)) V; `causal` masks key j > query i.
Matrix scaled_dot_attention(const Matrix& q, const Matrix& k, const Matrix& v, bool causal);

/// Independent heads, concatenated along columns.
Matrix multi_head_attention(std::span<const Matrix> q, std::span<const Matrix> k,
                            std::span<const Matrix> v, bool causal);

/// Talking-heads attention on per-head inputs:
///   L'[g] = sum_h W_l(h, g) * (Q_h K_h^T / sqrt(d_k) + mask)
///   A'[g] = sum_h W_w(h, g) * softmax(L'[h])
///   out_g = A'[g] V_g
/// The mask is added before mixing and imposed again on the mixed logits.
/// Output heads are concatenated along columns.
Matrix talking_heads_attention(std::span<const Matrix> q, std::span<const Matrix> k,
                               std::span<const Matrix> v, const Matrix& w_l, const Matrix& w_w,
                               bool causal);

/// Position-wise FFN: relu(x W1 + b1) W2 + b2.
struct FeedForward {
  Matrix w1, b1, w2, b2;

  std::size_t model_dim() const { return w1.rows(); }
  Matrix apply(const Matrix& x) const;

  /// Exact identity map, relu(x) - relu(-x), as a two-layer FFN of width 2d.
  static FeedForward identity(std::size_t d);
  static FeedForward zeros(std::size_t d, std::size_t hidden);
  static FeedForward random(std::size_t d, std::size_t hidden, rng::Engine& engine,
                            double scale = 0.5);
};

/// Row i = FFN(mean of rows 0..i).
Matrix aan_context(const Matrix& y, const FeedForward& ffn);

enum class RecurrenceBase {
  zero,       // c_0 = 0, so c_1 = (1 - alpha) y_1
  first_row,  // c_1 = y_1
};

/// c_i = (1 - alpha) y_i + alpha c_{i-1}; row i = FFN(c_i).
/// Throws std::invalid_argument unless 0 <= alpha < 1.
Matrix exp_weighted_context(const Matrix& y, double alpha, const FeedForward& ffn,
                            RecurrenceBase base = RecurrenceBase::zero);

/// Multi-head attention projections (no biases). w_l/w_w switch on
/// talking-heads mixing.
struct AttentionParams {
  std::size_t heads = 1;
  std::size_t head_dim = 1;
  Matrix wq, wk, wv;  // d_model x heads*head_dim
  Matrix wo;          // heads*head_dim x d_model
  std::optional<Matrix> w_l, w_w;

  bool talking_heads() const { return w_l.has_value(); }
  std::size_t model_dim() const { return wq.rows(); }

  /// Throws std::invalid_argument on inconsistent shapes or a lone mixer.
  void validate() const;

  static AttentionParams random(std::size_t d_model, std::size_t heads, std::size_t head_dim,
                                rng::Engine& engine, bool talking_heads = false,
                                double scale = 0.5);
  static AttentionParams zeros(std::size_t d_model, std::size_t heads, std::size_t head_dim);
};

/// Projects queries from `x` and keys/values from `memory`, attends per head
/// (talking-heads when mixers are present) and applies the output projection.
Matrix attention_forward(const Matrix& x, const Matrix& memory, const AttentionParams& params,
                         bool causal);

/// 0.5 * (masked self-attention(x) + average attention(x)).
Matrix dual_attention(const Matrix& x, const AttentionParams& self_attn,
                      const FeedForward& avg_ffn);

struct LayerNorm {
  Matrix gamma, beta;  // 1 x d
  double eps = 1e-6;

  Matrix apply(const Matrix& x) const;
  static LayerNorm unit(std::size_t d);
};

}  // namespace wmtkit::kernels
