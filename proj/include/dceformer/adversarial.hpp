#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <torch/torch.h>

namespace dceformer::nn {

enum class CriticNorm { None, Instance };

struct CriticConfig {
  int64_t condition_channels = 3;
  int64_t image_channels = 2;
  int64_t base_width = 64;
  int64_t strided_blocks = 3;
  CriticNorm norm = CriticNorm::Instance;
  bool bias = true;
  double leaky_slope = 0.2;

  void validate() const;
  /// Score-map extent for an input extent n: every strided block halves
  /// (k4 s2 p1), the two closing k4 s1 p1 convolutions each remove one.
  int64_t output_extent(int64_t n) const;
  std::string fingerprint() const;
};

/// Conditional PatchGAN critic. The condition (3 channels) and the image
/// (2 channels) are concatenated; the output is an unbounded patch score
/// map of shape (B, 1, h', w').
class PatchCriticImpl : public torch::nn::Module {
 public:
  explicit PatchCriticImpl(CriticConfig config = {});

  torch::Tensor forward(const torch::Tensor& condition, const torch::Tensor& image);

  const CriticConfig& config() const { return config_; }

  torch::nn::ModuleList convs{nullptr};
  torch::nn::ModuleList norms{nullptr};

 private:
  CriticConfig config_;
};
TORCH_MODULE(PatchCritic);

/// Any differentiable critic: (condition, image) -> score map (B, ...).
using CriticFn = std::function<torch::Tensor(const torch::Tensor&, const torch::Tensor&)>;

CriticFn as_critic_fn(PatchCritic critic);

/// WGAN-GP penalty. Interpolates x = e*real + (1-e)*fake with one uniform e
/// per instance drawn from a generator seeded by `seed`, and returns
/// mean_i (||grad_x s_i||_2 - 1)^2 where s_i is the mean patch score of
/// instance i. The graph is kept so the penalty can be backpropagated.
/// Throws Error("penalty diverged") on non-finite gradients.
torch::Tensor gradient_penalty(const CriticFn& critic, const torch::Tensor& condition,
                               const torch::Tensor& real, const torch::Tensor& fake,
                               uint64_t seed);

struct AdversarialTerms {
  torch::Tensor critic_loss;
  torch::Tensor generator_adv_loss;
  torch::Tensor gradient_penalty;
  torch::Tensor wasserstein_gap;
};

/// critic_loss = mean D(fake) - mean D(real) + gp_weight * penalty,
/// generator_adv_loss = -mean D(fake), wasserstein_gap = mean D(real) - mean D(fake).
/// Gradients flow into `fake` unless the caller detaches it.
AdversarialTerms adversarial_terms(const CriticFn& critic, const torch::Tensor& condition,
                                   const torch::Tensor& real, const torch::Tensor& fake,
                                   double gp_weight, uint64_t seed);

}  // namespace dceformer::nn
