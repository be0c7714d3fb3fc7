#pragma once

#include <cstdint>
#include <map>
#include <string>

#include <torch/torch.h>

namespace dceformer::losses {

/// Gaussian (Parzen) soft binning over [0,1].
struct SoftHistogramConfig {
  int64_t bins = 64;
  /// Kernel sigma in intensity units; 0 selects the default of one bin width.
  double bandwidth = 0.0;
  /// Values may exceed [0,1] by this much before mi_loss rejects them.
  double range_tolerance = 1e-4;

  double effective_bandwidth() const {
    return bandwidth > 0.0 ? bandwidth : 1.0 / static_cast<double>(bins);
  }
  void validate() const;
};

enum class MiForm {
  OneMinus,  // lambda_mi * (1 - NMI)
  Literal,   // 1 - lambda_mi * NMI
};

enum class MiReference {
  Target,  // NMI between generated and ground-truth DCE
  Inputs,  // NMI between generated DCE and each non-contrast input
};

enum class SpectrumComponent { Real, Amplitude };

struct LossWeights {
  double adversarial = 1.0;
  double l1 = 5.0;
  double mi = 10.0;
  double rec_pix = 10.0;
  double rec_fft = 10.0;
  int64_t gaussian_kernel_size = 13;
  double gaussian_sigma = 2.0;
  SoftHistogramConfig histogram{};
  MiForm mi_form = MiForm::OneMinus;
  MiReference mi_reference = MiReference::Target;
  SpectrumComponent spectrum = SpectrumComponent::Real;

  void validate() const;
};

/// Per-pixel bin weights (..., N, bins); each pixel's weights sum to 1.
torch::Tensor soft_bin_weights(const torch::Tensor& image, const SoftHistogramConfig& cfg);

/// Marginal soft histogram of a single image (any shape) -> (bins).
torch::Tensor soft_marginal_histogram(const torch::Tensor& image, const SoftHistogramConfig& cfg);

/// Joint soft histogram of two equally-shaped images -> (bins, bins);
/// rows index `a`, columns index `b`.
torch::Tensor soft_joint_histogram(const torch::Tensor& a, const torch::Tensor& b,
                                   const SoftHistogramConfig& cfg);

/// Shannon entropy in nats of a probability vector or matrix, 0 log 0 = 0.
/// Throws Error when entries are negative or do not sum to 1 within 1e-6.
torch::Tensor entropy(const torch::Tensor& p);

/// Normalised mutual information 2 MI / (H(real) + H(fake)) of two images.
/// Leading dimensions beyond the last two are treated as separate images
/// and averaged. A pair of constant images gives 1.
torch::Tensor mi_loss(const torch::Tensor& real, const torch::Tensor& fake,
                      const SoftHistogramConfig& cfg = {});

/// Normalised, isotropic k x k Gaussian kernel (float64).
torch::Tensor gaussian_kernel(int64_t size, double sigma);

/// Depthwise Gaussian blur over the last two dimensions with reflect
/// padding; shape is preserved.
torch::Tensor gaussian_lowpass(const torch::Tensor& image, int64_t size, double sigma);

struct FrequencyBands {
  torch::Tensor low;
  torch::Tensor high;
};

/// low = gaussian_lowpass(x), high = x - low.
FrequencyBands frequency_split(const torch::Tensor& image, int64_t size, double sigma);

/// mean|x_L - g_L| + mean|x_H - g_H|.
torch::Tensor freq_pixel_loss(const torch::Tensor& x, const torch::Tensor& g, int64_t size,
                              double sigma);

/// mean |Re F(x) - Re F(g)| with F the orthonormal 2-D DFT over the last two
/// dimensions (or |F| when `component` is Amplitude).
torch::Tensor freq_fft_loss(const torch::Tensor& x, const torch::Tensor& g,
                            SpectrumComponent component = SpectrumComponent::Real);

/// Term names used throughout logging and ablation.
inline constexpr const char* kTermAdv = "adv";
inline constexpr const char* kTermL1 = "L1";
inline constexpr const char* kTermMi = "MI";
inline constexpr const char* kTermFreqPix = "freq_pix";
inline constexpr const char* kTermFreqFft = "freq_fft";
inline constexpr const char* kTermGp = "gp";

struct LossBreakdown {
  torch::Tensor total;
  /// Unweighted term values (adv, L1, MI, freq_pix, freq_fft); the MI entry
  /// is 1 - NMI so every entry is "lower is better".
  std::map<std::string, torch::Tensor> terms;
};

/// total = w_adv*adv + l1*L1 + mi*(1 - NMI) + rec_pix*freq_pix + rec_fft*freq_fft.
/// real/fake: (B, 2, H, W); condition: (B, 3, H, W), only used with
/// MiReference::Inputs. Image-space terms are averaged over channels.
LossBreakdown composite_generator_loss(const torch::Tensor& real, const torch::Tensor& fake,
                                       const torch::Tensor& condition,
                                       const torch::Tensor& adv_term, const LossWeights& weights);

}  // namespace dceformer::losses
