#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "dceformer/adversarial.hpp"
#include "dceformer/generator.hpp"
#include "dceformer/losses.hpp"
#include "dceformer/metrics.hpp"
#include "dceformer/volume.hpp"

namespace dceformer::training {

struct TrainConfig {
  int64_t epochs = 50;
  int64_t batch_size = 4;
  /// When > 0, overrides epochs: train exactly this many generator steps.
  int64_t max_steps = 0;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.9;
  int64_t n_critic = 1;
  double gp_weight = 10.0;
  uint64_t seed = 0;
  losses::LossWeights weights{};
  // Loss ablation switches; a disabled family has its weight forced to 0.
  bool use_l1 = true;
  bool use_freq = true;
  bool use_mi = true;
  /// Steps between evaluations / checkpoints; 0 disables.
  int64_t eval_interval = 0;
  int64_t checkpoint_interval = 0;
  int threads = 1;
  nn::GeneratorConfig generator{};
  nn::CriticConfig critic{};

  /// 200 epochs, batch 6, embed dim 32 generator.
  static TrainConfig paper();
  /// Embed 8 generator, width-32 critic, batch 2, 2000 steps: the CPU
  /// overfit configuration.
  static TrainConfig desk_overfit();

  void validate() const;
  /// Weights after applying the ablation switches.
  losses::LossWeights effective_weights() const;
  std::string fingerprint() const;
};

/// Every field is addressable by its JSON key; unknown keys are rejected.
/// An optional "preset" key ("desk", "desk_overfit", "paper") selects the
/// base before the remaining keys are applied.
TrainConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const TrainConfig& c);
TrainConfig load_config(const std::filesystem::path& path);

/// Term values of one step. `terms` holds exactly adv, L1, MI, freq_pix,
/// freq_fft and gp; the generator total and critic loss are kept apart.
struct StepRecord {
  int64_t step = 0;  // 1-based count of completed generator updates
  int64_t epoch = 0;
  std::map<std::string, double> terms;
  double total = 0.0;
  double critic_loss = 0.0;
  double wasserstein_gap = 0.0;

  bool operator==(const StepRecord&) const = default;
};

/// Owns the generator, critic and their optimizers. Weights are initialised
/// from config.seed; all per-step randomness is derived from (seed, step),
/// so the state is fully captured by weights, moments and the step count.
class Trainer {
 public:
  explicit Trainer(TrainConfig config);

  /// n_critic critic updates followed by one generator update.
  /// inputs: (B, 3, H, W), targets: (B, 2, H, W).
  StepRecord train_step(const torch::Tensor& inputs, const torch::Tensor& targets);

  /// Generator objective for a batch against the current critic.
  losses::LossBreakdown generator_objective(const torch::Tensor& inputs,
                                            const torch::Tensor& targets,
                                            const torch::Tensor& fake);

  torch::Tensor predict(const torch::Tensor& inputs);
  metrics::Model model_fn();

  int64_t step() const { return step_; }
  const TrainConfig& config() const { return config_; }
  nn::Generator& generator() { return generator_; }
  nn::PatchCritic& critic() { return critic_; }

  /// Weights, optimizer moments and step count.
  void save(const std::filesystem::path& path) const;
  /// Refuses a checkpoint whose architecture fingerprint differs.
  void load(const std::filesystem::path& path);

 private:
  TrainConfig config_;
  nn::Generator generator_{nullptr};
  nn::PatchCritic critic_{nullptr};
  std::unique_ptr<torch::optim::Adam> gen_opt_, critic_opt_;
  int64_t step_ = 0;
};

/// Loads just the generator from a training checkpoint (for eval/predict).
nn::Generator load_generator(const std::filesystem::path& path);

struct EvalRecord {
  int64_t step = 0;
  metrics::MetricsReport report;
};

struct FitOptions {
  /// Evaluation set; the training set is used when empty.
  std::span<const data::TrainingSample> validation{};
  std::optional<std::filesystem::path> resume_from;
  /// Run directory for checkpoints, history.jsonl, evaluations.jsonl and
  /// run_metadata.json. Nothing is written when empty.
  std::filesystem::path output_dir;
  std::function<void(const StepRecord&)> on_step;
};

struct FitResult {
  std::unique_ptr<Trainer> trainer;
  std::vector<StepRecord> history;
  std::vector<EvalRecord> evaluations;
};

/// Indices of the training set in the order epoch `epoch` visits them.
std::vector<size_t> epoch_order(size_t count, uint64_t seed, int64_t epoch);

FitResult fit(std::span<const data::TrainingSample> dataset, const TrainConfig& config,
              const FitOptions& options = {});

/// One JSON line per term: {"step":s,"term":name,"value":v}.
void write_step_log(std::ostream& out, const StepRecord& record);
/// Inverse of write_step_log over a whole file.
std::vector<StepRecord> read_step_log(const std::filesystem::path& path);

struct AblationRow {
  std::string label;
  bool use_l1 = true, use_freq = false, use_mi = false;
  metrics::Summary psnr, ssim;  // pooled over early and late
  std::filesystem::path checkpoint;
};

struct AblationTable {
  std::vector<AblationRow> rows;
  std::string to_text() const;
  std::string to_json() const;
};

/// Pooled PSNR/SSIM over both phases of a metrics report.
std::pair<metrics::Summary, metrics::Summary> pooled_psnr_ssim(const metrics::MetricsReport& r);

/// Trains L1; L1 + rec,pix + rec,fft; L1 + rec,pix + rec,fft + MI with the
/// same seed and evaluates each on `evaluation` (training set when empty).
AblationTable ablate(std::span<const data::TrainingSample> dataset, const TrainConfig& base,
                     std::span<const data::TrainingSample> evaluation = {},
                     const std::filesystem::path& output_dir = {});

}  // namespace dceformer::training
