#include <cmath>

#include <gtest/gtest.h>

#include "dceformer/adversarial.hpp"
#include "dceformer/error.hpp"
#include "test_util.hpp"

using namespace dceformer;
using namespace dceformer::nn;

namespace {

// s(c, x) = <w, x> per instance, a (B, 1) score map.
CriticFn linear_critic(const torch::Tensor& w) {
  return [w](const torch::Tensor&, const torch::Tensor& x) {
    return (x * w).reshape({x.size(0), -1}).sum(1, true);
  };
}

torch::Tensor weight_with_norm(double norm, uint64_t seed) {
  auto gen = at::detail::createCPUGenerator(seed);
  auto w = torch::randn({1, 2, 8, 8}, gen, torch::kFloat64);
  return w * (norm / w.norm().item<double>());
}

struct Batch {
  torch::Tensor cond, real, fake;
};

Batch random_batch(int64_t n = 64, torch::ScalarType dtype = torch::kFloat64) {
  auto gen = at::detail::createCPUGenerator(99);
  return {torch::rand({2, 3, n, n}, gen, dtype), torch::rand({2, 2, n, n}, gen, dtype),
          torch::rand({2, 2, n, n}, gen, dtype)};
}

}  // namespace

TEST(Critic, ScoreMapExtent) {
  CriticConfig cfg;
  EXPECT_EQ(cfg.output_extent(64), 6);
  EXPECT_EQ(cfg.output_extent(160), 18);
  torch::manual_seed(0);
  PatchCritic critic(cfg);
  auto b = random_batch(64, torch::kFloat32);
  EXPECT_EQ(critic(b.cond, b.real).sizes(), (std::vector<int64_t>{2, 1, 6, 6}));
  EXPECT_EQ(critic(b.cond.slice(2, 0, 32).slice(3, 0, 32), b.real.slice(2, 0, 32).slice(3, 0, 32)).size(2),
            cfg.output_extent(32));
}

TEST(Critic, DeterministicAndNoBatchCoupling) {
  torch::manual_seed(1);
  PatchCritic critic(CriticConfig{});
  auto b = random_batch(64, torch::kFloat32);
  auto s = critic(b.cond, b.real);
  EXPECT_TRUE(torch::equal(s, critic(b.cond, b.real)));
  // Instance scores do not depend on the rest of the batch.
  auto first = critic(b.cond.slice(0, 0, 1), b.real.slice(0, 0, 1));
  EXPECT_LE((first - s.slice(0, 0, 1)).abs().max().item<double>(), 1e-5);
  for (const auto& m : critic->modules(false)) EXPECT_EQ(m->name().find("BatchNorm"), std::string::npos);
}

TEST(Critic, PositiveHomogeneityWithoutNormOrBias) {
  CriticConfig cfg;
  cfg.norm = CriticNorm::None;
  cfg.bias = false;
  cfg.base_width = 8;
  torch::manual_seed(2);
  PatchCritic critic(cfg);
  auto b = random_batch(64, torch::kFloat32);
  auto s = critic(b.cond, b.real);
  torch::NoGradGuard guard;
  auto convs = critic->convs;
  auto& last = *convs[convs->size() - 1]->as<torch::nn::Conv2dImpl>();
  last.weight.mul_(2.0);
  EXPECT_LE((critic(b.cond, b.real) - 2.0 * s).abs().max().item<double>(), 1e-5);
  // Leaky ReLU is positively homogeneous, so doubling every layer scales by 2^L.
  for (size_t i = 0; i + 1 < convs->size(); ++i) convs[i]->as<torch::nn::Conv2dImpl>()->weight.mul_(2.0);
  const double scale = std::pow(2.0, static_cast<double>(convs->size()));
  EXPECT_LE((critic(b.cond, b.real) - scale * s).abs().max().item<double>(), 1e-4 * scale);
  // A purely linear critic doubles with its weights.
  auto w = weight_with_norm(1.5, 3);
  auto x = b.real.to(torch::kFloat64).slice(2, 0, 8).slice(3, 0, 8);
  EXPECT_TRUE(torch::allclose(linear_critic(2 * w)(b.cond, x), 2 * linear_critic(w)(b.cond, x)));
}

TEST(Critic, ConfigValidation) {
  CriticConfig c;
  c.strided_blocks = 0;
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.base_width = 0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_NE(CriticConfig{}.fingerprint(), c.fingerprint());
}

TEST(GradientPenalty, LinearCriticAnalytic) {
  auto b = random_batch(8);
  EXPECT_NEAR(gradient_penalty(linear_critic(weight_with_norm(3.0, 1)), b.cond, b.real, b.fake, 7).item<double>(),
              4.0, 1e-10);
  EXPECT_LE(gradient_penalty(linear_critic(weight_with_norm(1.0, 2)), b.cond, b.real, b.fake, 7).item<double>(),
            1e-12);
  for (uint64_t seed = 0; seed < 10; ++seed) {
    const double norm = 0.1 + 0.5 * static_cast<double>(seed);
    EXPECT_NEAR(gradient_penalty(linear_critic(weight_with_norm(norm, seed + 10)), b.cond, b.real, b.fake, seed)
                    .item<double>(),
                (norm - 1) * (norm - 1), 1e-10);
  }
}

TEST(GradientPenalty, ConstantCriticIsOne) {
  auto b = random_batch(8);
  CriticFn constant = [](const torch::Tensor& c, const torch::Tensor&) {
    return torch::ones({c.size(0), 1}, c.options());
  };
  EXPECT_DOUBLE_EQ(gradient_penalty(constant, b.cond, b.real, b.fake, 0).item<double>(), 1.0);
}

TEST(GradientPenalty, NonNegativeSeededAndDifferentiable) {
  torch::manual_seed(3);
  PatchCritic critic(CriticConfig{});
  auto b = random_batch(64, torch::kFloat32);
  auto fn = as_critic_fn(critic);
  auto p1 = gradient_penalty(fn, b.cond, b.real, b.fake, 11);
  auto p2 = gradient_penalty(fn, b.cond, b.real, b.fake, 11);
  EXPECT_GE(p1.item<double>(), 0.0);
  EXPECT_EQ(p1.item<double>(), p2.item<double>());
  p1.backward();
  double total = 0;
  for (const auto& p : critic->parameters())
    if (p.grad().defined()) total += p.grad().abs().sum().item<double>();
  EXPECT_GT(total, 0.0);
  EXPECT_THROW(gradient_penalty(fn, b.cond, b.real, b.fake.slice(2, 0, 32), 0), Error);
}

TEST(GradientPenalty, NonFiniteGradientDiverges) {
  auto b = random_batch(8);
  CriticFn bad = [](const torch::Tensor&, const torch::Tensor& x) {
    return (x * std::numeric_limits<double>::infinity()).reshape({x.size(0), -1}).sum(1);
  };
  EXPECT_THROW_MSG(gradient_penalty(bad, b.cond, b.real, b.fake, 0), "penalty diverged");
}

TEST(AdversarialTerms, IdentitiesAndSpecialCases) {
  torch::manual_seed(4);
  PatchCritic critic(CriticConfig{});
  auto fn = as_critic_fn(critic);
  auto b = random_batch(64, torch::kFloat32);
  auto same = adversarial_terms(fn, b.cond, b.real, b.real, 10.0, 0);
  EXPECT_EQ(same.wasserstein_gap.item<double>(), 0.0);

  auto t = adversarial_terms(fn, b.cond, b.real, b.fake, 10.0, 0);
  const double fake_mean = critic(b.cond, b.fake).mean().item<double>();
  EXPECT_NEAR(t.generator_adv_loss.item<double>() + fake_mean, 0.0, 1e-6);
  EXPECT_NEAR(t.critic_loss.item<double>(),
              -t.wasserstein_gap.item<double>() + 10.0 * t.gradient_penalty.item<double>(), 1e-5);

  auto plain = adversarial_terms(fn, b.cond, b.real, b.fake, 0.0, 0);
  EXPECT_EQ(plain.gradient_penalty.item<double>(), 0.0);
  EXPECT_NEAR(plain.critic_loss.item<double>(), -plain.wasserstein_gap.item<double>(), 1e-6);

  auto unit = linear_critic(weight_with_norm(1.0, 5));
  auto small = random_batch(8);
  auto u = adversarial_terms(unit, small.cond, small.real, small.fake, 10.0, 0);
  EXPECT_NEAR(u.critic_loss.item<double>(), -u.wasserstein_gap.item<double>(), 1e-10);
}
