#include "dceformer/adversarial.hpp"

#include <sstream>

#include <ATen/CPUGeneratorImpl.h>

#include "dceformer/error.hpp"

namespace dceformer::nn {

void CriticConfig::validate() const {
  if (condition_channels < 0 || image_channels <= 0 || base_width <= 0)
    throw Error("critic channel counts must be positive");
  if (strided_blocks < 1) throw Error("critic needs at least one strided block");
}

int64_t CriticConfig::output_extent(int64_t n) const {
  for (int64_t i = 0; i < strided_blocks; ++i) n = (n + 2 - 4) / 2 + 1;
  return n - 2;
}

std::string CriticConfig::fingerprint() const {
  std::ostringstream s;
  s << "critic(cond=" << condition_channels << ",img=" << image_channels
    << ",width=" << base_width << ",blocks=" << strided_blocks
    << ",norm=" << (norm == CriticNorm::Instance ? "instance" : "none")
    << ",bias=" << (bias ? 1 : 0) << ",slope=" << leaky_slope << ")";
  return s.str();
}

PatchCriticImpl::PatchCriticImpl(CriticConfig config) : config_(std::move(config)) {
  config_.validate();
  convs = register_module("convs", torch::nn::ModuleList());
  norms = register_module("norms", torch::nn::ModuleList());

  auto conv = [&](int64_t in, int64_t out, int64_t stride) {
    return torch::nn::Conv2d(
        torch::nn::Conv2dOptions(in, out, 4).stride(stride).padding(1).bias(config_.bias));
  };
  int64_t width = config_.base_width;
  int64_t in = config_.condition_channels + config_.image_channels;
  // Strided blocks, then one stride-1 widening block, then the score head.
  for (int64_t i = 0; i < config_.strided_blocks; ++i) {
    convs->push_back(conv(in, width, 2));
    in = width;
    width *= 2;
  }
  convs->push_back(conv(in, width, 1));
  convs->push_back(conv(width, 1, 1));

  // The first block is never normalised; batch statistics are never used.
  for (size_t i = 1; i + 1 < convs->size(); ++i) {
    const int64_t channels = convs[i]->as<torch::nn::Conv2dImpl>()->options.out_channels();
    if (config_.norm == CriticNorm::Instance)
      norms->push_back(torch::nn::InstanceNorm2d(
          torch::nn::InstanceNorm2dOptions(channels).affine(true).track_running_stats(false)));
  }
}

torch::Tensor PatchCriticImpl::forward(const torch::Tensor& condition, const torch::Tensor& image) {
  if (condition.dim() != 4 || image.dim() != 4 || condition.size(0) != image.size(0) ||
      condition.size(2) != image.size(2) || condition.size(3) != image.size(3))
    throw Error("critic condition and image must share batch and spatial shape");
  if (condition.size(1) != config_.condition_channels || image.size(1) != config_.image_channels)
    throw Error("critic expects " + std::to_string(config_.condition_channels) + " condition and " +
                std::to_string(config_.image_channels) + " image channels");

  auto x = torch::cat({condition, image}, 1);
  const size_t n = convs->size();
  for (size_t i = 0; i < n; ++i) {
    x = convs[i]->as<torch::nn::Conv2dImpl>()->forward(x);
    if (i + 1 == n) break;
    if (i > 0 && config_.norm == CriticNorm::Instance)
      x = norms[i - 1]->as<torch::nn::InstanceNorm2dImpl>()->forward(x);
    x = torch::leaky_relu(x, config_.leaky_slope);
  }
  return x;
}

CriticFn as_critic_fn(PatchCritic critic) {
  return [critic](const torch::Tensor& c, const torch::Tensor& x) mutable { return critic->forward(c, x); };
}

torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& condition,
                               const torch::Tensor& real, const torch::Tensor& fake,
                               uint64_t seed) {
  if (!real.sizes().equals(fake.sizes()))
    throw Error("gradient penalty: real and fake shapes differ");
  const int64_t batch = real.size(0);

  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  std::vector<int64_t> eps_shape(static_cast<size_t>(real.dim()), 1);
  eps_shape[0] = batch;
  auto eps = torch::rand(eps_shape, gen, real.options().requires_grad(false));

  auto mixed = (eps * real.detach() + (1.0 - eps) * fake.detach()).requires_grad_(true);
  auto scores = critic(condition, mixed).reshape({batch, -1}).mean(1);
  torch::Tensor grads;
  // A critic that ignores its input has no graph back to `mixed`.
  if (scores.requires_grad())
    grads = torch::autograd::grad({scores.sum()}, {mixed}, /*grad_outputs=*/{},
                                  /*retain_graph=*/true, /*create_graph=*/true,
                                  /*allow_unused=*/true)[0];
  if (!grads.defined()) grads = torch::zeros_like(mixed);
  if (!torch::isfinite(grads).all().item<bool>()) throw Error("penalty diverged");

  auto norms = grads.reshape({batch, -1}).norm(2, 1);
  return (norms - 1.0).pow(2).mean();
}

AdversarialTerms adversarial_terms(const CriticFn& critic, const torch::Tensor& condition,
                                   const torch::Tensor& real, const torch::Tensor& fake,
                                   double gp_weight, uint64_t seed) {
  AdversarialTerms t;
  auto real_score = critic(condition, real).mean();
  auto fake_score = critic(condition, fake).mean();
  t.gradient_penalty = gp_weight != 0.0
                           ? gradient_penalty(critic, condition, real, fake, seed)
                           : torch::zeros({}, real.options());
  t.critic_loss = fake_score - real_score + gp_weight * t.gradient_penalty;
  t.generator_adv_loss = -fake_score;
  t.wasserstein_gap = real_score - fake_score;
  return t;
}

}  // namespace dceformer::nn
