#include "dceformer/generator.hpp"

#include <sstream>

#include "dceformer/error.hpp"

namespace dceformer::nn {

GeneratorConfig GeneratorConfig::paper_scale() {
  GeneratorConfig c;
  c.base_embed_dim = 32;
  c.window_size = 10;
  return c;
}

GeneratorConfig GeneratorConfig::desk_overfit() {
  GeneratorConfig c;
  c.base_embed_dim = 8;
  return c;
}

void GeneratorConfig::validate() const {
  if (input_channels <= 0 || output_channels <= 0 || base_embed_dim <= 0)
    throw Error("generator channel counts must be positive");
  for (int64_t d : lewin_depths)
    if (d <= 0) throw Error("LeWin depths must be positive");
  if (bottleneck_depth < 0) throw Error("bottleneck depth must be >= 0");
  if (window_size < 2 || window_size % 2 != 0)
    throw Error("window size must be even and >= 2, got " + std::to_string(window_size));
  if (!(ffn_ratio > 0)) throw Error("feed-forward ratio must be positive");
  for (size_t i = 0; i < heads.size(); ++i) {
    const int64_t enc_dim = base_embed_dim << i;
    if (heads[i] <= 0 || enc_dim % heads[i] != 0)
      throw Error("head count " + std::to_string(heads[i]) + " does not divide embed dim " +
                  std::to_string(enc_dim) + " at level " + std::to_string(i));
  }
  const int64_t bott_dim = base_embed_dim * 16;
  if (bottleneck_heads <= 0 || bott_dim % bottleneck_heads != 0)
    throw Error("bottleneck head count " + std::to_string(bottleneck_heads) +
                " does not divide embed dim " + std::to_string(bott_dim));
}

void GeneratorConfig::check_input_size(int64_t height, int64_t width) const {
  const int64_t m = size_multiple();
  if (height > 0 && width > 0 && height % m == 0 && width % m == 0) return;
  std::ostringstream msg;
  msg << "input " << height << "x" << width << " not divisible by window_size*8 = " << m
      << "; minimal valid sizes are " << m << ", " << 2 * m << ", " << 3 * m << ", ...";
  throw Error(msg.str());
}

std::string GeneratorConfig::fingerprint() const {
  std::ostringstream s;
  s << "generator(in=" << input_channels << ",out=" << output_channels
    << ",embed=" << base_embed_dim << ",depths=" << lewin_depths[0] << "/" << lewin_depths[1]
    << "/" << lewin_depths[2] << "/" << lewin_depths[3] << ",bottleneck=" << bottleneck_depth
    << ",window=" << window_size << ",heads=" << heads[0] << "/" << heads[1] << "/" << heads[2]
    << "/" << heads[3] << "/" << bottleneck_heads << ",ffn=" << ffn_ratio
    << ",modulators=" << (modulators_enabled ? 1 : 0) << ")";
  return s.str();
}

torch::Tensor window_partition(const torch::Tensor& x, int64_t window) {
  if (x.dim() != 4) throw Error("window_partition expects (B, H, W, C)");
  const int64_t b = x.size(0), h = x.size(1), w = x.size(2), c = x.size(3);
  if (window <= 0 || h % window != 0 || w % window != 0)
    throw Error("feature extent " + std::to_string(h) + "x" + std::to_string(w) +
                " not divisible by window " + std::to_string(window));
  return x.reshape({b, h / window, window, w / window, window, c})
      .permute({0, 1, 3, 2, 4, 5})
      .reshape({-1, window * window, c});
}

torch::Tensor window_reverse(const torch::Tensor& windows, int64_t window, int64_t batch,
                             int64_t height, int64_t width) {
  if (height % window != 0 || width % window != 0)
    throw Error("feature extent " + std::to_string(height) + "x" + std::to_string(width) +
                " not divisible by window " + std::to_string(window));
  const int64_t c = windows.size(-1);
  return windows.reshape({batch, height / window, width / window, window, window, c})
      .permute({0, 1, 3, 2, 4, 5})
      .reshape({batch, height, width, c});
}

torch::Tensor apply_modulator(const torch::Tensor& windows, const torch::Tensor& modulator) {
  if (windows.dim() != 3 || modulator.dim() != 2 || windows.size(1) != modulator.size(0) ||
      windows.size(2) != modulator.size(1))
    throw Error("modulator shape " + std::to_string(modulator.size(0)) + "x" +
                std::to_string(modulator.dim() > 1 ? modulator.size(1) : 0) +
                " does not match window tokens x channels");
  return windows + modulator;
}

WindowAttentionImpl::WindowAttentionImpl(int64_t dim, int64_t heads, int64_t window)
    : dim_(dim), heads_(heads), window_(window) {
  if (heads <= 0 || dim % heads != 0)
    throw Error("head count " + std::to_string(heads) + " does not divide embed dim " +
                std::to_string(dim));
  qkv = register_module("qkv", torch::nn::Linear(torch::nn::LinearOptions(dim, 3 * dim).bias(false)));
  proj = register_module("proj", torch::nn::Linear(dim, dim));
  q_bias = register_parameter("q_bias", torch::zeros({dim}));
  v_bias = register_parameter("v_bias", torch::zeros({dim}));
  const int64_t span = 2 * window - 1;
  relative_bias_table = register_parameter("relative_bias_table", torch::zeros({span * span, heads}));

  auto coords = torch::arange(window, torch::kLong);
  auto grid = torch::meshgrid({coords, coords}, "ij");
  auto flat_h = grid[0].flatten(), flat_w = grid[1].flatten();
  auto rel_h = flat_h.unsqueeze(1) - flat_h.unsqueeze(0) + (window - 1);
  auto rel_w = flat_w.unsqueeze(1) - flat_w.unsqueeze(0) + (window - 1);
  relative_index_ = register_buffer("relative_index", (rel_h * span + rel_w).flatten());

  torch::NoGradGuard guard;
  torch::nn::init::normal_(qkv->weight, 0.0, 0.02);
  torch::nn::init::normal_(proj->weight, 0.0, 0.02);
  torch::nn::init::zeros_(proj->bias);
}

torch::Tensor WindowAttentionImpl::forward(const torch::Tensor& windows) {
  const int64_t n = windows.size(0), t = windows.size(1), c = windows.size(2);
  if (t != window_ * window_ || c != dim_)
    throw Error("attention expects windows of " + std::to_string(window_ * window_) + " tokens x " +
                std::to_string(dim_) + " channels");
  const int64_t head_dim = c / heads_;
  auto bias = torch::cat({q_bias, torch::zeros_like(q_bias), v_bias});
  auto qkv_out = torch::nn::functional::linear(windows, qkv->weight, bias)
                     .reshape({n, t, 3, heads_, head_dim})
                     .permute({2, 0, 3, 1, 4});
  auto q = qkv_out[0] * (1.0 / std::sqrt(static_cast<double>(head_dim)));
  auto k = qkv_out[1];
  auto v = qkv_out[2];
  auto position_bias =
      relative_bias_table.index_select(0, relative_index_.to(torch::kLong)).reshape({t, t, heads_}).permute({2, 0, 1});
  auto attn = torch::matmul(q, k.transpose(-2, -1)) + position_bias.unsqueeze(0);
  attn = torch::softmax(attn, -1);
  auto out = torch::matmul(attn, v).transpose(1, 2).reshape({n, t, c});
  return proj(out);
}

LeWinBlockImpl::LeWinBlockImpl(int64_t dim, int64_t heads, int64_t window, double ffn_ratio,
                               bool with_modulator)
    : window_(window) {
  const auto hidden = static_cast<int64_t>(static_cast<double>(dim) * ffn_ratio);
  norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  attention = register_module("attention", WindowAttention(dim, heads, window));
  norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({dim})));
  fc1 = register_module("fc1", torch::nn::Linear(dim, hidden));
  depthwise = register_module(
      "depthwise",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, hidden, 3).padding(1).groups(hidden)));
  fc2 = register_module("fc2", torch::nn::Linear(hidden, dim));
  if (with_modulator) {
    modulator = register_parameter("modulator", torch::empty({window * window, dim}));
    torch::NoGradGuard guard;
    torch::nn::init::normal_(modulator, 0.0, 0.02);
  }
  torch::NoGradGuard guard;
  torch::nn::init::normal_(fc1->weight, 0.0, 0.02);
  torch::nn::init::zeros_(fc1->bias);
  torch::nn::init::normal_(fc2->weight, 0.0, 0.02);
  torch::nn::init::zeros_(fc2->bias);
}

torch::Tensor LeWinBlockImpl::forward(const torch::Tensor& x) {
  const int64_t b = x.size(0), h = x.size(2), w = x.size(3);
  auto tokens = x.permute({0, 2, 3, 1});

  auto windows = window_partition(norm1(tokens), window_);
  if (modulator.defined()) windows = apply_modulator(windows, modulator);
  tokens = tokens + window_reverse(attention(windows), window_, b, h, w);

  auto hidden = torch::gelu(fc1(norm2(tokens)));
  hidden = torch::gelu(depthwise(hidden.permute({0, 3, 1, 2}))).permute({0, 2, 3, 1});
  tokens = tokens + fc2(hidden);
  return tokens.permute({0, 3, 1, 2});
}

void LeWinBlockImpl::zero_output_projections() {
  torch::NoGradGuard guard;
  attention->proj->weight.zero_();
  attention->proj->bias.zero_();
  fc2->weight.zero_();
  fc2->bias.zero_();
}

GeneratorImpl::GeneratorImpl(GeneratorConfig config) : config_(std::move(config)) {
  config_.validate();
  const int64_t c0 = config_.base_embed_dim;
  const int64_t win = config_.window_size;

  input_proj = register_module(
      "input_proj",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(config_.input_channels, c0, 3).padding(1)));

  for (size_t i = 0; i < 4; ++i) {
    const int64_t dim = c0 << i;
    torch::nn::Sequential level;
    for (int64_t k = 0; k < config_.lewin_depths[i]; ++k)
      level->push_back(LeWinBlock(dim, config_.heads[i], win, config_.ffn_ratio, false));
    encoders.push_back(register_module("encoder" + std::to_string(i), level));
    downsamplers.push_back(register_module(
        "down" + std::to_string(i),
        torch::nn::Conv2d(torch::nn::Conv2dOptions(dim, 2 * dim, 4).stride(2).padding(1))));
  }

  // Bottleneck at 1/16 resolution uses half-size windows so that every
  // size accepted by check_input_size tiles evenly there too.
  bottleneck = torch::nn::Sequential();
  for (int64_t k = 0; k < config_.bottleneck_depth; ++k)
    bottleneck->push_back(
        LeWinBlock(c0 * 16, config_.bottleneck_heads, win / 2, config_.ffn_ratio, false));
  register_module("bottleneck", bottleneck);

  int64_t prev = c0 * 16;
  for (int i = 3; i >= 0; --i) {
    const int64_t dim = c0 << i;
    upsamplers.push_back(register_module(
        "up" + std::to_string(i),
        torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(prev, dim, 2).stride(2))));
    torch::nn::Sequential level;
    for (int64_t k = 0; k < config_.lewin_depths[static_cast<size_t>(i)]; ++k)
      level->push_back(LeWinBlock(2 * dim, 2 * config_.heads[static_cast<size_t>(i)], win,
                                  config_.ffn_ratio, config_.modulators_enabled));
    decoders.push_back(register_module("decoder" + std::to_string(i), level));
    prev = 2 * dim;
  }
  output_proj = register_module(
      "output_proj",
      torch::nn::Conv2d(torch::nn::Conv2dOptions(prev, config_.output_channels, 3).padding(1)));
}

torch::Tensor GeneratorImpl::forward(const torch::Tensor& input) {
  if (input.dim() != 4 || input.size(1) != config_.input_channels)
    throw Error("generator expects (B, " + std::to_string(config_.input_channels) + ", H, W)");
  config_.check_input_size(input.size(2), input.size(3));

  auto x = torch::leaky_relu(input_proj(input), 0.2);
  std::vector<torch::Tensor> skips;
  for (size_t i = 0; i < 4; ++i) {
    x = encoders[i]->forward(x);
    skips.push_back(x);
    x = downsamplers[i](x);
  }
  if (!bottleneck->is_empty()) x = bottleneck->forward(x);
  for (size_t j = 0; j < 4; ++j) {
    x = torch::cat({upsamplers[j](x), skips[3 - j]}, 1);
    x = decoders[j]->forward(x);
  }
  return torch::sigmoid(output_proj(x));
}

int64_t GeneratorImpl::parameter_count() const {
  int64_t n = 0;
  for (const auto& p : parameters()) n += p.numel();
  return n;
}

void GeneratorImpl::zero_residual_branches() {
  for (auto& m : modules(/*include_self=*/false))
    if (auto* block = m->as<LeWinBlockImpl>()) block->zero_output_projections();
  torch::NoGradGuard guard;
  for (auto& up : upsamplers) {
    up->weight.zero_();
    up->bias.zero_();
  }
}

}  // namespace dceformer::nn
