#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "dceformer/volume.hpp"

namespace dceformer::metrics {

/// Returned by psnr when the images are identical (or MSE is negligible).
inline constexpr double kPsnrCapDb = 100.0;

double psnr(const torch::Tensor& x, const torch::Tensor& g, double peak = 1.0);

/// Single-scale SSIM with a Gaussian window (sigma 1.5), K1 = 0.01,
/// K2 = 0.03, valid-region local statistics, averaged over the map.
/// Inputs are (H, W); leading dimensions are averaged image by image.
double ssim(const torch::Tensor& x, const torch::Tensor& g, int64_t window = 11,
            double data_range = 1.0);

double mae(const torch::Tensor& x, const torch::Tensor& g);

/// Negative eigenvalues down to this value are treated as rounding noise.
inline constexpr double kEigenClipTolerance = 1e-6;

/// Frechet distance between two Gaussians (float64 tensors).
double frechet_distance(const torch::Tensor& mu1, const torch::Tensor& cov1,
                        const torch::Tensor& mu2, const torch::Tensor& cov2);

/// FID over feature matrices (N, d) and (M, d); N, M >= 2. Unbiased
/// covariance estimates.
double fid(const torch::Tensor& real_features, const torch::Tensor& fake_features);

/// Deterministic image -> feature map used for FID.
class EmbeddingExtractor {
 public:
  virtual ~EmbeddingExtractor() = default;
  virtual std::string name() const = 0;
  /// images: (N, 1, H, W) -> (N, d) float64.
  virtual torch::Tensor features(const torch::Tensor& images) const = 0;
};

/// Two fixed random convolution layers with ReLU followed by global mean
/// and standard-deviation pooling. Not comparable to Inception-based FID.
class RandomConvExtractor : public EmbeddingExtractor {
 public:
  explicit RandomConvExtractor(uint64_t seed = 1234, int64_t width = 16);
  std::string name() const override;
  torch::Tensor features(const torch::Tensor& images) const override;

 private:
  uint64_t seed_;
  torch::Tensor w1_, w2_;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct PhaseMetrics {
  Summary psnr, ssim, mae;
  double fid = 0.0;
};

struct SampleMetrics {
  std::string study_id;
  int64_t slice_index = 0;
  std::array<double, 2> psnr{}, ssim{}, mae{};
};

inline constexpr std::array<const char*, 2> kPhaseNames = {"early", "late"};

struct MetricsReport {
  std::array<PhaseMetrics, 2> phases;  // early, late
  int64_t sample_count = 0;
  std::string extractor;
  std::vector<SampleMetrics> samples;

  /// JSON document with summaries and the per-sample breakdown.
  std::string to_json() const;
  /// Tab-separated "metric phase mean std count extractor" rows.
  std::string to_table() const;
};

/// Maps a batch of inputs (B, 3, H, W) to predictions (B, 2, H, W).
using Model = std::function<torch::Tensor(const torch::Tensor&)>;

MetricsReport evaluate_dataset(const Model& model, std::span<const data::TrainingSample> dataset,
                               const EmbeddingExtractor& extractor, int64_t batch_size = 8);

Summary summarize(std::span<const double> values);

}  // namespace dceformer::metrics
