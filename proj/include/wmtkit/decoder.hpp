#pragma once

// Decoder layers and the Mixed-AAN stack patterns.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wmtkit/kernels.hpp"

namespace wmtkit::kernels {

enum class LayerKind { self_attention, average_attention, weighted_attention, dual_attention };
enum class NormPlacement { pre, post };

std::string to_string(LayerKind kind);
std::optional<LayerKind> parse_layer_kind(std::string_view name);

struct LayerSpec {
  LayerKind kind = LayerKind::self_attention;
  NormPlacement norm = NormPlacement::pre;
  double alpha = 0.7;  // weighted_attention only

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct StackSpec {
  std::vector<LayerSpec> layers;

  std::vector<LayerKind> kinds() const;
};

enum class StackPattern { average_first, average_bottom, dual, uniform_self, uniform_avg };

std::string to_string(StackPattern pattern);
/// Accepts the names above and the hyphenated forms ("average-first").
std::optional<StackPattern> parse_stack_pattern(std::string_view name);
const std::vector<StackPattern>& all_stack_patterns();

/// average_first: avg, self, avg, ...; average_bottom: ceil(depth/2) avg then
/// self; dual: all dual. Throws std::invalid_argument for depth 0.
StackSpec build_stack(StackPattern pattern, std::size_t depth,
                      NormPlacement norm = NormPlacement::pre);
/// Throws std::invalid_argument for an unknown pattern name.
StackSpec build_stack(std::string_view pattern, std::size_t depth,
                      NormPlacement norm = NormPlacement::pre);

struct DecoderLayerParams {
  std::optional<AttentionParams> self_attn;  // self and dual layers
  std::optional<FeedForward> avg_ffn;        // average, weighted and dual layers
  AttentionParams cross_attn;
  FeedForward ffn;
  LayerNorm norm_masked, norm_cross, norm_ffn;

  /// Throws std::invalid_argument if a parameter set required by `kind` is missing.
  void check(LayerKind kind) const;

  static DecoderLayerParams random(LayerKind kind, std::size_t d_model, std::size_t heads,
                                   std::size_t ffn_hidden, rng::Engine& engine,
                                   bool talking_heads = false);
  /// All projections and FFN weights zero, unit layer norms.
  static DecoderLayerParams zeros(LayerKind kind, std::size_t d_model, std::size_t heads,
                                  std::size_t ffn_hidden);
};

/// The masked sublayer alone, chosen by kind.
Matrix masked_sublayer(const Matrix& x, const LayerSpec& spec, const DecoderLayerParams& params);

/// masked attention -> cross attention -> FFN, each with a residual connection;
/// pre: x + Sub(LN(x)), post: LN(x + Sub(x)).
Matrix decoder_layer_forward(const Matrix& x, const Matrix& enc_out, const LayerSpec& spec,
                             const DecoderLayerParams& params);

/// Throws std::invalid_argument for an empty stack or a parameter count mismatch.
Matrix decoder_stack_forward(const Matrix& x, const Matrix& enc_out, const StackSpec& stack,
                             std::span<const DecoderLayerParams> params);

std::vector<DecoderLayerParams> random_stack_params(const StackSpec& stack, std::size_t d_model,
                                                    std::size_t heads, std::size_t ffn_hidden,
                                                    rng::Engine& engine,
                                                    bool talking_heads = false);

}  // namespace wmtkit::kernels
