#include "dceformer/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <ATen/CPUGeneratorImpl.h>
#include <nlohmann/json.hpp>

#include "dceformer/error.hpp"

namespace dceformer::metrics {

namespace F = torch::nn::functional;

namespace {

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes()))
    throw Error(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                c10::str(b.sizes()));
}

torch::Tensor gaussian_window(int64_t size, double sigma) {
  auto x = torch::arange(size, torch::kFloat64) - static_cast<double>(size - 1) / 2.0;
  auto g = torch::exp(-x.pow(2) / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

torch::Tensor sqrt_psd(const torch::Tensor& m, const char* which) {
  auto [evals, evecs] = torch::linalg_eigh(m);
  const double lo = evals.min().item<double>();
  if (lo < -kEigenClipTolerance) {
    std::ostringstream msg;
    msg << "degenerate covariance (" << which << "): min eigenvalue " << lo << ", max eigenvalue "
        << evals.max().item<double>() << ", dimension " << m.size(0);
    throw Error(msg.str());
  }
  auto root = evals.clamp_min(0.0).sqrt();
  return torch::matmul(evecs * root.unsqueeze(0), evecs.transpose(0, 1));
}

}  // namespace

double psnr(const torch::Tensor& x, const torch::Tensor& g, double peak) {
  check_same_shape(x, g, "psnr");
  const double mse = (x.to(torch::kFloat64) - g.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse <= 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const torch::Tensor& x, const torch::Tensor& g, int64_t window, double data_range) {
  check_same_shape(x, g, "ssim");
  if (x.dim() < 2) throw Error("ssim expects (H, W) images");
  const int64_t h = x.size(-2), w = x.size(-1);
  if (h < window || w < window)
    throw Error("ssim: image " + std::to_string(h) + "x" + std::to_string(w) +
                " smaller than window " + std::to_string(window));

  auto kernel = gaussian_window(window, 1.5).reshape({1, 1, window, window});
  auto a = x.to(torch::kFloat64).reshape({-1, 1, h, w});
  auto b = g.to(torch::kFloat64).reshape({-1, 1, h, w});
  auto filt = [&](const torch::Tensor& t) { return F::conv2d(t, kernel); };

  auto mu_a = filt(a), mu_b = filt(b);
  auto var_a = filt(a * a) - mu_a * mu_a;
  auto var_b = filt(b * b) - mu_b * mu_b;
  auto cov = filt(a * b) - mu_a * mu_b;
  const double c1 = std::pow(0.01 * data_range, 2);
  const double c2 = std::pow(0.03 * data_range, 2);
  auto map = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  // Mean per image, then across images.
  return map.flatten(1).mean(1).mean().item<double>();
}

double mae(const torch::Tensor& x, const torch::Tensor& g) {
  check_same_shape(x, g, "mae");
  return (x.to(torch::kFloat64) - g.to(torch::kFloat64)).abs().mean().item<double>();
}

double frechet_distance(const torch::Tensor& mu1, const torch::Tensor& cov1,
                        const torch::Tensor& mu2, const torch::Tensor& cov2) {
  auto m1 = mu1.to(torch::kFloat64), m2 = mu2.to(torch::kFloat64);
  auto c1 = cov1.to(torch::kFloat64), c2 = cov2.to(torch::kFloat64);
  if (m1.dim() != 1 || !m1.sizes().equals(m2.sizes()) || c1.dim() != 2 ||
      !c1.sizes().equals(c2.sizes()) || c1.size(0) != m1.size(0) || c1.size(1) != m1.size(0))
    throw Error("frechet_distance: inconsistent mean/covariance shapes");

  auto root1 = sqrt_psd(c1, "real");
  (void)sqrt_psd(c2, "fake");
  auto inner = torch::matmul(torch::matmul(root1, c2), root1);
  inner = 0.5 * (inner + inner.transpose(0, 1));
  const double trace_cross = torch::trace(sqrt_psd(inner, "product")).item<double>();
  const double mean_term = (m1 - m2).pow(2).sum().item<double>();
  const double d = mean_term + torch::trace(c1).item<double>() + torch::trace(c2).item<double>() -
                   2.0 * trace_cross;
  return std::max(0.0, d);
}

double fid(const torch::Tensor& real_features, const torch::Tensor& fake_features) {
  if (real_features.dim() != 2 || fake_features.dim() != 2 ||
      real_features.size(1) != fake_features.size(1))
    throw Error("fid expects feature matrices (N, d) with equal d");
  if (real_features.size(0) < 2 || fake_features.size(0) < 2)
    throw Error("fid needs at least 2 samples per set");
  auto moments = [](const torch::Tensor& f) {
    auto x = f.to(torch::kFloat64);
    auto mu = x.mean(0);
    auto centered = x - mu;
    auto cov = torch::matmul(centered.transpose(0, 1), centered) / static_cast<double>(x.size(0) - 1);
    return std::make_pair(mu, cov);
  };
  auto [mu_r, cov_r] = moments(real_features);
  auto [mu_f, cov_f] = moments(fake_features);
  return frechet_distance(mu_r, cov_r, mu_f, cov_f);
}

RandomConvExtractor::RandomConvExtractor(uint64_t seed, int64_t width) : seed_(seed) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto opts = torch::TensorOptions().dtype(torch::kFloat64);
  w1_ = torch::randn({width, 1, 3, 3}, gen, opts) / 3.0;
  w2_ = torch::randn({2 * width, width, 3, 3}, gen, opts) / std::sqrt(9.0 * static_cast<double>(width));
}

std::string RandomConvExtractor::name() const {
  return "random-conv(seed=" + std::to_string(seed_) + ",width=" + std::to_string(w1_.size(0)) + ")";
}

torch::Tensor RandomConvExtractor::features(const torch::Tensor& images) const {
  if (images.dim() != 4 || images.size(1) != 1)
    throw Error("extractor expects (N, 1, H, W) images");
  torch::NoGradGuard guard;
  auto x = images.to(torch::kFloat64);
  x = torch::relu(F::conv2d(x, w1_, F::Conv2dFuncOptions().stride(2).padding(1)));
  x = torch::relu(F::conv2d(x, w2_, F::Conv2dFuncOptions().stride(2).padding(1)));
  auto flat = x.flatten(2);
  return torch::cat({flat.mean(2), flat.std(2, /*unbiased=*/false)}, 1);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

MetricsReport evaluate_dataset(const Model& model, std::span<const data::TrainingSample> dataset,
                               const EmbeddingExtractor& extractor, int64_t batch_size) {
  if (dataset.empty()) throw Error("evaluate_dataset: empty dataset");
  if (batch_size <= 0) throw Error("evaluate_dataset: batch size must be positive");
  torch::NoGradGuard guard;

  MetricsReport report;
  report.extractor = extractor.name();
  report.sample_count = static_cast<int64_t>(dataset.size());
  std::array<std::vector<torch::Tensor>, 2> real_feats, fake_feats;

  for (size_t start = 0; start < dataset.size(); start += static_cast<size_t>(batch_size)) {
    const size_t stop = std::min(dataset.size(), start + static_cast<size_t>(batch_size));
    std::vector<torch::Tensor> inputs, targets;
    for (size_t i = start; i < stop; ++i) {
      inputs.push_back(dataset[i].input);
      targets.push_back(dataset[i].target);
    }
    auto x = torch::stack(inputs);
    auto y = torch::stack(targets);
    auto pred = model(x);
    if (!pred.sizes().equals(y.sizes()))
      throw Error("model output shape " + c10::str(pred.sizes()) + " does not match targets " +
                  c10::str(y.sizes()));
    for (int64_t c = 0; c < 2; ++c) {
      real_feats[c].push_back(extractor.features(y.select(1, c).unsqueeze(1)));
      fake_feats[c].push_back(extractor.features(pred.select(1, c).unsqueeze(1)));
    }
    for (size_t i = start; i < stop; ++i) {
      const auto b = static_cast<int64_t>(i - start);
      SampleMetrics s;
      s.study_id = dataset[i].study_id;
      s.slice_index = dataset[i].slice_index;
      for (int64_t c = 0; c < 2; ++c) {
        auto p = pred[b][c], t = y[b][c];
        s.psnr[c] = psnr(p, t);
        s.ssim[c] = ssim(p, t);
        s.mae[c] = mae(p, t);
      }
      report.samples.push_back(std::move(s));
    }
  }

  for (size_t c = 0; c < 2; ++c) {
    std::vector<double> ps, ss, ms;
    for (const auto& s : report.samples) {
      ps.push_back(s.psnr[c]);
      ss.push_back(s.ssim[c]);
      ms.push_back(s.mae[c]);
    }
    report.phases[c].psnr = summarize(ps);
    report.phases[c].ssim = summarize(ss);
    report.phases[c].mae = summarize(ms);
    report.phases[c].fid =
        dataset.size() >= 2 ? fid(torch::cat(real_feats[c]), torch::cat(fake_feats[c])) : 0.0;
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["sample_count"] = sample_count;
  j["extractor"] = extractor;
  for (size_t c = 0; c < 2; ++c) {
    const auto& p = phases[c];
    j["phases"][kPhaseNames[c]] = {
        {"psnr", {{"mean", p.psnr.mean}, {"std", p.psnr.std}}},
        {"ssim", {{"mean", p.ssim.mean}, {"std", p.ssim.std}}},
        {"mae", {{"mean", p.mae.mean}, {"std", p.mae.std}}},
        {"fid", p.fid},
    };
  }
  auto& rows = j["samples"] = nlohmann::json::array();
  for (const auto& s : samples)
    rows.push_back({{"study_id", s.study_id},
                    {"slice_index", s.slice_index},
                    {"psnr", s.psnr},
                    {"ssim", s.ssim},
                    {"mae", s.mae}});
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << "metric\tphase\tmean\tstd\tcount\textractor\n";
  out << std::setprecision(6) << std::fixed;
  for (size_t c = 0; c < 2; ++c) {
    const auto& p = phases[c];
    auto row = [&](const char* metric, const Summary& s) {
      out << metric << '\t' << kPhaseNames[c] << '\t' << s.mean << '\t' << s.std << '\t'
          << sample_count << '\t' << extractor << '\n';
    };
    row("PSNR", p.psnr);
    row("SSIM", p.ssim);
    row("MAE", p.mae);
    out << "FID\t" << kPhaseNames[c] << '\t' << p.fid << "\t-\t" << sample_count << '\t'
        << extractor << '\n';
  }
  return out.str();
}

}  // namespace dceformer::metrics
