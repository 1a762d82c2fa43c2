#include "wmtkit/decoder.hpp"

#include <stdexcept>

namespace wmtkit::kernels {
namespace {

bool needs_self(LayerKind kind) {
  return kind == LayerKind::self_attention || kind == LayerKind::dual_attention;
}

bool needs_avg(LayerKind kind) { return kind != LayerKind::self_attention; }

std::size_t head_dim_for(std::size_t d_model, std::size_t heads) {
  if (heads == 0) throw std::invalid_argument("heads must be positive");
  return d_model / heads > 0 ? d_model / heads : 1;
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::self_attention: return "self_attention";
    case LayerKind::average_attention: return "average_attention";
    case LayerKind::weighted_attention: return "weighted_attention";
    case LayerKind::dual_attention: return "dual_attention";
  }
  return "?";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) {
  if (name == "self_attention" || name == "self") return LayerKind::self_attention;
  if (name == "average_attention" || name == "avg") return LayerKind::average_attention;
  if (name == "weighted_attention" || name == "weighted") return LayerKind::weighted_attention;
  if (name == "dual_attention" || name == "dual") return LayerKind::dual_attention;
  return std::nullopt;
}

std::vector<LayerKind> StackSpec::kinds() const {
  std::vector<LayerKind> out;
  for (const auto& l : layers) out.push_back(l.kind);
  return out;
}

std::string to_string(StackPattern pattern) {
  switch (pattern) {
    case StackPattern::average_first: return "average_first";
    case StackPattern::average_bottom: return "average_bottom";
    case StackPattern::dual: return "dual";
    case StackPattern::uniform_self: return "uniform_self";
    case StackPattern::uniform_avg: return "uniform_avg";
  }
  return "?";
}

std::optional<StackPattern> parse_stack_pattern(std::string_view name) {
  std::string n(name);
  for (auto& ch : n) {
    if (ch == '-') ch = '_';
  }
  for (auto p : all_stack_patterns()) {
    if (to_string(p) == n) return p;
  }
  return std::nullopt;
}

const std::vector<StackPattern>& all_stack_patterns() {
  static const std::vector<StackPattern> patterns = {
      StackPattern::average_first, StackPattern::average_bottom, StackPattern::dual,
      StackPattern::uniform_self, StackPattern::uniform_avg};
  return patterns;
}

StackSpec build_stack(StackPattern pattern, std::size_t depth, NormPlacement norm) {
  if (depth == 0) throw std::invalid_argument("stack depth must be at least 1");
  StackSpec stack;
  const std::size_t bottom = (depth + 1) / 2;
  for (std::size_t i = 0; i < depth; ++i) {
    LayerKind kind = LayerKind::self_attention;
    switch (pattern) {
      case StackPattern::average_first:
        kind = i % 2 == 0 ? LayerKind::average_attention : LayerKind::self_attention;
        break;
      case StackPattern::average_bottom:
        kind = i < bottom ? LayerKind::average_attention : LayerKind::self_attention;
        break;
      case StackPattern::dual: kind = LayerKind::dual_attention; break;
      case StackPattern::uniform_self: kind = LayerKind::self_attention; break;
      case StackPattern::uniform_avg: kind = LayerKind::average_attention; break;
    }
    stack.layers.push_back({kind, norm, 0.7});
  }
  return stack;
}

StackSpec build_stack(std::string_view pattern, std::size_t depth, NormPlacement norm) {
  auto p = parse_stack_pattern(pattern);
  if (!p) throw std::invalid_argument("unknown stack pattern '" + std::string(pattern) + "'");
  return build_stack(*p, depth, norm);
}

void DecoderLayerParams::check(LayerKind kind) const {
  if (needs_self(kind) && !self_attn) {
    throw std::invalid_argument(to_string(kind) + " layer needs self-attention parameters");
  }
  if (needs_avg(kind) && !avg_ffn) {
    throw std::invalid_argument(to_string(kind) + " layer needs average-attention FFN parameters");
  }
}

DecoderLayerParams DecoderLayerParams::random(LayerKind kind, std::size_t d_model,
                                              std::size_t heads, std::size_t ffn_hidden,
                                              rng::Engine& engine, bool talking_heads) {
  const std::size_t dk = head_dim_for(d_model, heads);
  DecoderLayerParams p;
  if (needs_self(kind)) p.self_attn = AttentionParams::random(d_model, heads, dk, engine, talking_heads);
  if (needs_avg(kind)) p.avg_ffn = FeedForward::random(d_model, ffn_hidden, engine);
  p.cross_attn = AttentionParams::random(d_model, heads, dk, engine, talking_heads);
  p.ffn = FeedForward::random(d_model, ffn_hidden, engine);
  p.norm_masked = LayerNorm::unit(d_model);
  p.norm_cross = LayerNorm::unit(d_model);
  p.norm_ffn = LayerNorm::unit(d_model);
  return p;
}

DecoderLayerParams DecoderLayerParams::zeros(LayerKind kind, std::size_t d_model,
                                             std::size_t heads, std::size_t ffn_hidden) {
  const std::size_t dk = head_dim_for(d_model, heads);
  DecoderLayerParams p;
  if (needs_self(kind)) p.self_attn = AttentionParams::zeros(d_model, heads, dk);
  if (needs_avg(kind)) p.avg_ffn = FeedForward::zeros(d_model, ffn_hidden);
  p.cross_attn = AttentionParams::zeros(d_model, heads, dk);
  p.ffn = FeedForward::zeros(d_model, ffn_hidden);
  p.norm_masked = LayerNorm::unit(d_model);
  p.norm_cross = LayerNorm::unit(d_model);
  p.norm_ffn = LayerNorm::unit(d_model);
  return p;
}

Matrix masked_sublayer(const Matrix& x, const LayerSpec& spec, const DecoderLayerParams& params) {
  params.check(spec.kind);
  switch (spec.kind) {
    case LayerKind::self_attention: return attention_forward(x, x, *params.self_attn, true);
    case LayerKind::average_attention: return aan_context(x, *params.avg_ffn);
    case LayerKind::weighted_attention: return exp_weighted_context(x, spec.alpha, *params.avg_ffn);
    case LayerKind::dual_attention: return dual_attention(x, *params.self_attn, *params.avg_ffn);
  }
  throw std::invalid_argument("unknown layer kind");
}

Matrix decoder_layer_forward(const Matrix& x, const Matrix& enc_out, const LayerSpec& spec,
                             const DecoderLayerParams& params) {
  if (enc_out.cols() != x.cols()) {
    throw std::invalid_argument("decoder layer: encoder width " + std::to_string(enc_out.cols()) +
                                " != decoder width " + std::to_string(x.cols()));
  }
  if (spec.norm == NormPlacement::pre) {
    Matrix h = add(x, masked_sublayer(params.norm_masked.apply(x), spec, params));
    h = add(h, attention_forward(params.norm_cross.apply(h), enc_out, params.cross_attn, false));
    return add(h, params.ffn.apply(params.norm_ffn.apply(h)));
  }
  Matrix h = params.norm_masked.apply(add(x, masked_sublayer(x, spec, params)));
  h = params.norm_cross.apply(add(h, attention_forward(h, enc_out, params.cross_attn, false)));
  return params.norm_ffn.apply(add(h, params.ffn.apply(h)));
}

Matrix decoder_stack_forward(const Matrix& x, const Matrix& enc_out, const StackSpec& stack,
                             std::span<const DecoderLayerParams> params) {
  if (stack.layers.empty()) throw std::invalid_argument("decoder stack is empty");
  if (params.size() != stack.layers.size()) {
    throw std::invalid_argument("decoder stack has " + std::to_string(stack.layers.size()) +
                                " layers but " + std::to_string(params.size()) + " parameter sets");
  }
  Matrix h = x;
  for (std::size_t i = 0; i < stack.layers.size(); ++i) {
    h = decoder_layer_forward(h, enc_out, stack.layers[i], params[i]);
  }
  return h;
}

std::vector<DecoderLayerParams> random_stack_params(const StackSpec& stack, std::size_t d_model,
                                                    std::size_t heads, std::size_t ffn_hidden,
                                                    rng::Engine& engine, bool talking_heads) {
  std::vector<DecoderLayerParams> out;
  for (const auto& layer : stack.layers) {
    out.push_back(DecoderLayerParams::random(layer.kind, d_model, heads, ffn_hidden, engine,
                                             talking_heads));
  }
  return out;
}

}  // namespace wmtkit::kernels
