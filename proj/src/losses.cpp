#include "dceformer/losses.hpp"

#include <atomic>
#include <cmath>
#include <iostream>

#include "dceformer/error.hpp"

namespace dceformer::losses {

namespace F = torch::nn::functional;

void SoftHistogramConfig::validate() const {
  if (bins < 2) throw Error("soft histogram needs at least 2 bins");
  if (bandwidth < 0.0) throw Error("soft histogram bandwidth must be >= 0 (0 selects the default)");
}

void LossWeights::validate() const {
  for (double w : {adversarial, l1, mi, rec_pix, rec_fft})
    if (!(w >= 0.0)) throw Error("loss weights must be >= 0");
  if (gaussian_kernel_size <= 0 || gaussian_kernel_size % 2 == 0)
    throw Error("gaussian kernel size must be odd, got " + std::to_string(gaussian_kernel_size));
  if (!(gaussian_sigma > 0.0)) throw Error("gaussian sigma must be positive");
  histogram.validate();
}

namespace {

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes()))
    throw Error(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                c10::str(b.sizes()));
}

void check_unit_range(const torch::Tensor& x, double tol, const char* what) {
  const double lo = x.min().item<double>();
  const double hi = x.max().item<double>();
  if (lo < -tol || hi > 1.0 + tol || !std::isfinite(lo) || !std::isfinite(hi))
    throw Error(std::string(what) + ": values must lie in [0,1], got [" + std::to_string(lo) +
                ", " + std::to_string(hi) + "]");
}

// -sum p log p over the trailing `ndims` dimensions; zero cells contribute
// zero value and zero gradient.
torch::Tensor entropy_over(const torch::Tensor& p, int64_t ndims) {
  auto positive = p > 0;
  auto safe = torch::where(positive, p, torch::ones_like(p));
  auto plogp = p * torch::log(safe);
  std::vector<int64_t> dims;
  for (int64_t i = 0; i < ndims; ++i) dims.push_back(-1 - i);
  return -plogp.sum(dims);
}

torch::Tensor flatten_images(const torch::Tensor& x) {
  if (x.dim() < 2) throw Error("expected an image with at least 2 dimensions");
  return x.reshape({-1, x.size(-2) * x.size(-1)});
}

}  // namespace

torch::Tensor soft_bin_weights(const torch::Tensor& image, const SoftHistogramConfig& cfg) {
  cfg.validate();
  const double sigma = cfg.effective_bandwidth();
  auto centers = (torch::arange(cfg.bins, image.options().requires_grad(false)) + 0.5) /
                 static_cast<double>(cfg.bins);
  auto d = image.unsqueeze(-1) - centers;
  return torch::softmax(-d.pow(2) / (2.0 * sigma * sigma), -1);
}

torch::Tensor soft_marginal_histogram(const torch::Tensor& image, const SoftHistogramConfig& cfg) {
  return soft_bin_weights(image.reshape({-1}), cfg).mean(0);
}

torch::Tensor soft_joint_histogram(const torch::Tensor& a, const torch::Tensor& b,
                                   const SoftHistogramConfig& cfg) {
  check_same_shape(a, b, "soft_joint_histogram");
  check_unit_range(a, cfg.range_tolerance, "soft_joint_histogram");
  check_unit_range(b, cfg.range_tolerance, "soft_joint_histogram");
  auto wa = soft_bin_weights(a.reshape({-1}), cfg);
  auto wb = soft_bin_weights(b.reshape({-1}), cfg);
  return torch::matmul(wa.transpose(0, 1), wb) / static_cast<double>(wa.size(0));
}

torch::Tensor entropy(const torch::Tensor& p) {
  if (p.dim() < 1 || p.dim() > 2) throw Error("entropy expects a probability vector or matrix");
  if (p.numel() == 0) throw Error("entropy of an empty distribution");
  if ((p < 0).any().item<bool>()) throw Error("entropy: negative probability");
  const double total = p.sum().item<double>();
  if (std::abs(total - 1.0) > 1e-6)
    throw Error("entropy: probabilities sum to " + std::to_string(total) + ", not 1");
  return entropy_over(p, p.dim());
}

torch::Tensor mi_loss(const torch::Tensor& real, const torch::Tensor& fake,
                      const SoftHistogramConfig& cfg) {
  check_same_shape(real, fake, "mi_loss");
  check_unit_range(real, cfg.range_tolerance, "mi_loss");
  check_unit_range(fake, cfg.range_tolerance, "mi_loss");

  auto wa = soft_bin_weights(flatten_images(real), cfg);  // (M, N, bins)
  auto wb = soft_bin_weights(flatten_images(fake), cfg);
  const auto n = static_cast<double>(wa.size(1));
  auto joint = torch::bmm(wa.transpose(1, 2), wb) / n;   // (M, bins, bins)
  auto h_real = entropy_over(joint.sum(2), 1);
  auto h_fake = entropy_over(joint.sum(1), 1);
  auto h_joint = entropy_over(joint, 2);

  // Two constant images carry no information to share; NMI is defined as 1.
  auto flat_real = flatten_images(real), flat_fake = flatten_images(fake);
  auto degenerate = (std::get<0>(flat_real.aminmax(1)) == std::get<1>(flat_real.aminmax(1))) &
                    (std::get<0>(flat_fake.aminmax(1)) == std::get<1>(flat_fake.aminmax(1)));
  if (degenerate.any().item<bool>()) {
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true))
      std::cerr << "[dceformer] mi_loss: both images constant, NMI defined as 1\n";
  }
  auto denom = h_real + h_fake;
  auto safe_denom = torch::where(denom > 1e-12, denom, torch::ones_like(denom));
  auto nmi = 2.0 * (denom - h_joint) / safe_denom;
  nmi = torch::where(degenerate, torch::ones_like(nmi), nmi);
  return nmi.mean();
}

torch::Tensor gaussian_kernel(int64_t size, double sigma) {
  if (size <= 0 || size % 2 == 0)
    throw Error("gaussian kernel size must be odd, got " + std::to_string(size));
  if (!(sigma > 0.0)) throw Error("gaussian sigma must be positive");
  auto x = torch::arange(size, torch::kFloat64) - static_cast<double>(size / 2);
  auto g = torch::exp(-x.pow(2) / (2.0 * sigma * sigma));
  g = g / g.sum();
  auto k = torch::outer(g, g);
  return k / k.sum();
}

torch::Tensor gaussian_lowpass(const torch::Tensor& image, int64_t size, double sigma) {
  auto kernel = gaussian_kernel(size, sigma).to(image.dtype());
  const int64_t h = image.size(-2), w = image.size(-1);
  const int64_t pad = size / 2;
  if (pad >= h || pad >= w)
    throw Error("image " + std::to_string(h) + "x" + std::to_string(w) +
                " too small for reflect padding of a " + std::to_string(size) + " kernel");
  auto x = image.reshape({-1, 1, h, w});
  x = F::pad(x, F::PadFuncOptions({pad, pad, pad, pad}).mode(torch::kReflect));
  auto out = F::conv2d(x, kernel.reshape({1, 1, size, size}));
  return out.reshape(image.sizes());
}

FrequencyBands frequency_split(const torch::Tensor& image, int64_t size, double sigma) {
  auto low = gaussian_lowpass(image, size, sigma);
  return {low, image - low};
}

torch::Tensor freq_pixel_loss(const torch::Tensor& x, const torch::Tensor& g, int64_t size,
                              double sigma) {
  check_same_shape(x, g, "freq_pixel_loss");
  auto bx = frequency_split(x, size, sigma);
  auto bg = frequency_split(g, size, sigma);
  return (bx.low - bg.low).abs().mean() + (bx.high - bg.high).abs().mean();
}

torch::Tensor freq_fft_loss(const torch::Tensor& x, const torch::Tensor& g,
                            SpectrumComponent component) {
  check_same_shape(x, g, "freq_fft_loss");
  auto fx = torch::fft::fft2(x, c10::nullopt, {-2, -1}, "ortho");
  auto fg = torch::fft::fft2(g, c10::nullopt, {-2, -1}, "ortho");
  if (component == SpectrumComponent::Real) return (torch::real(fx) - torch::real(fg)).abs().mean();
  return (fx.abs() - fg.abs()).abs().mean();
}

LossBreakdown composite_generator_loss(const torch::Tensor& real, const torch::Tensor& fake,
                                       const torch::Tensor& condition,
                                       const torch::Tensor& adv_term, const LossWeights& weights) {
  weights.validate();
  check_same_shape(real, fake, "composite_generator_loss");
  if (adv_term.numel() != 1) throw Error("adversarial term must be a scalar");

  LossBreakdown out;
  auto adv = adv_term.reshape({});
  auto l1 = (real - fake).abs().mean();

  torch::Tensor nmi;
  if (weights.mi_reference == MiReference::Target) {
    nmi = mi_loss(real, fake, weights.histogram);
  } else {
    if (condition.dim() != 4 || condition.size(0) != fake.size(0))
      throw Error("input-referenced MI needs the (B, C, H, W) condition");
    std::vector<torch::Tensor> parts;
    for (int64_t i = 0; i < condition.size(1); ++i)
      for (int64_t c = 0; c < fake.size(1); ++c)
        parts.push_back(mi_loss(condition.select(1, i), fake.select(1, c), weights.histogram));
    nmi = torch::stack(parts).mean();
  }
  auto pix = freq_pixel_loss(real, fake, weights.gaussian_kernel_size, weights.gaussian_sigma);
  auto fft = freq_fft_loss(real, fake, weights.spectrum);

  auto mi_term = weights.mi_form == MiForm::OneMinus ? weights.mi * (1.0 - nmi)
                                                     : 1.0 - weights.mi * nmi;
  out.total = weights.adversarial * adv + weights.l1 * l1 + mi_term + weights.rec_pix * pix +
              weights.rec_fft * fft;
  out.terms[kTermAdv] = adv;
  out.terms[kTermL1] = l1;
  out.terms[kTermMi] = 1.0 - nmi;
  out.terms[kTermFreqPix] = pix;
  out.terms[kTermFreqFft] = fft;
  return out;
}

}  // namespace dceformer::losses
