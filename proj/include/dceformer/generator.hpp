#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <torch/torch.h>

namespace dceformer::nn {

struct GeneratorConfig {
  int64_t input_channels = 3;
  int64_t output_channels = 2;
  int64_t base_embed_dim = 16;
  std::array<int64_t, 4> lewin_depths{1, 2, 8, 8};
  int64_t bottleneck_depth = 2;
  int64_t window_size = 8;
  std::array<int64_t, 4> heads{1, 2, 4, 8};
  int64_t bottleneck_heads = 16;
  double ffn_ratio = 4.0;
  bool modulators_enabled = true;

  /// Embed dim 32, window 10: tiles 160x160 slices at every level.
  static GeneratorConfig paper_scale();
  /// Embed dim 8: the CPU overfit configuration.
  static GeneratorConfig desk_overfit();

  /// Throws Error on non-positive depths, odd window, or a head count that
  /// does not divide the channel width of its level.
  void validate() const;
  /// Spatial extents must be a multiple of this.
  int64_t size_multiple() const { return window_size * 8; }
  /// Throws Error listing the smallest valid sizes when (h, w) is invalid.
  void check_input_size(int64_t height, int64_t width) const;
  /// Canonical one-line description; equal configs give equal strings.
  std::string fingerprint() const;
};

/// (B, H, W, C) -> (B * H/w * W/w, w*w, C), windows in raster order.
torch::Tensor window_partition(const torch::Tensor& x, int64_t window);
/// Inverse of window_partition.
torch::Tensor window_reverse(const torch::Tensor& windows, int64_t window, int64_t batch,
                             int64_t height, int64_t width);

/// Adds a per-window bias of shape (w*w, C) to every window of
/// `windows` (N, w*w, C).
torch::Tensor apply_modulator(const torch::Tensor& windows, const torch::Tensor& modulator);

/// Multi-head self-attention inside non-overlapping windows, with a learned
/// relative-position bias (zero-initialised). Keys carry no bias term:
/// softmax is invariant to it, so it would never train.
class WindowAttentionImpl : public torch::nn::Module {
 public:
  WindowAttentionImpl(int64_t dim, int64_t heads, int64_t window);

  /// windows: (N, w*w, C).
  torch::Tensor forward(const torch::Tensor& windows);

  torch::nn::Linear qkv{nullptr};
  torch::nn::Linear proj{nullptr};
  torch::Tensor q_bias, v_bias, relative_bias_table;

 private:
  int64_t dim_, heads_, window_;
  torch::Tensor relative_index_;
};
TORCH_MODULE(WindowAttention);

/// Locally-enhanced window transformer block: pre-norm window attention and
/// a pre-norm feed-forward with a depthwise 3x3 convolution between the two
/// pointwise layers, each wrapped in a residual connection.
class LeWinBlockImpl : public torch::nn::Module {
 public:
  LeWinBlockImpl(int64_t dim, int64_t heads, int64_t window, double ffn_ratio, bool modulator);

  /// x: (B, C, H, W) with H and W divisible by the window.
  torch::Tensor forward(const torch::Tensor& x);

  /// Zeroes the attention output projection and the last feed-forward layer,
  /// turning the block into the identity map.
  void zero_output_projections();

  torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr};
  WindowAttention attention{nullptr};
  torch::nn::Linear fc1{nullptr}, fc2{nullptr};
  torch::nn::Conv2d depthwise{nullptr};
  torch::Tensor modulator;  // undefined when disabled

 private:
  int64_t window_;
};
TORCH_MODULE(LeWinBlock);

/// U-shaped window transformer: input projection, four encoder levels with
/// strided-conv downsampling, a bottleneck, four decoder levels fed by
/// transposed-conv upsampling concatenated with the encoder skip, and a
/// sigmoid output projection.
class GeneratorImpl : public torch::nn::Module {
 public:
  explicit GeneratorImpl(GeneratorConfig config = {});

  /// (B, 3, H, W) in [0,1] -> (B, 2, H, W) in (0,1).
  torch::Tensor forward(const torch::Tensor& input);

  const GeneratorConfig& config() const { return config_; }
  int64_t parameter_count() const;

  /// Zeroes every block's output projections and every upsampler, which
  /// reduces the network to output_proj(concat(0, input_proj(x))).
  void zero_residual_branches();

  torch::nn::Conv2d input_proj{nullptr}, output_proj{nullptr};
  std::vector<torch::nn::Sequential> encoders, decoders;
  torch::nn::Sequential bottleneck{nullptr};
  std::vector<torch::nn::Conv2d> downsamplers;
  std::vector<torch::nn::ConvTranspose2d> upsamplers;

 private:
  GeneratorConfig config_;
};
TORCH_MODULE(Generator);

}  // namespace dceformer::nn
