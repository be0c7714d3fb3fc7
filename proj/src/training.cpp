#include "dceformer/training.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string_view>

#include "dceformer/checkpoint.hpp"
#include "dceformer/error.hpp"

namespace dceformer::training {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

uint64_t derive_seed(uint64_t seed, uint64_t a, uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

double scalar(const torch::Tensor& t) { return t.detach().item<double>(); }

torch::optim::AdamOptions adam_options(const TrainConfig& c) {
  return torch::optim::AdamOptions(c.learning_rate).betas({c.beta1, c.beta2});
}

void export_adam(const torch::optim::Adam& opt, const torch::nn::Module& module,
                 const std::string& prefix, std::map<std::string, torch::Tensor>& out) {
  const auto& state = opt.state();
  for (const auto& item : module.named_parameters(true)) {
    auto it = state.find(item.value().unsafeGetTensorImpl());
    if (it == state.end()) continue;
    const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
    const std::string base = prefix + "." + item.key();
    out[base + ".exp_avg"] = s.exp_avg().clone();
    out[base + ".exp_avg_sq"] = s.exp_avg_sq().clone();
    out[base + ".step"] = torch::tensor({s.step()}, torch::kInt64);
  }
}

void import_adam(torch::optim::Adam& opt, const torch::nn::Module& module,
                 const std::string& prefix, const std::map<std::string, torch::Tensor>& in) {
  auto& state = opt.state();
  state.clear();
  for (const auto& item : module.named_parameters(true)) {
    const std::string base = prefix + "." + item.key();
    auto avg = in.find(base + ".exp_avg");
    if (avg == in.end()) continue;
    auto sq = in.find(base + ".exp_avg_sq");
    auto st = in.find(base + ".step");
    if (sq == in.end() || st == in.end())
      throw Error("checkpoint has incomplete optimizer state for '" + base + "'");
    auto s = std::make_unique<torch::optim::AdamParamState>();
    s->exp_avg(avg->second.clone());
    s->exp_avg_sq(sq->second.clone());
    s->step(st->second.item<int64_t>());
    state[item.value().unsafeGetTensorImpl()] = std::move(s);
  }
}

torch::Tensor stack_field(std::span<const data::TrainingSample> ds, const std::vector<size_t>& idx,
                          bool inputs) {
  std::vector<torch::Tensor> parts;
  parts.reserve(idx.size());
  for (size_t i : idx) parts.push_back(inputs ? ds[i].input : ds[i].target);
  return torch::stack(parts);
}

}  // namespace

// ---------------------------------------------------------------- config

TrainConfig TrainConfig::paper() {
  TrainConfig c;
  c.epochs = 200;
  c.batch_size = 6;
  c.generator = nn::GeneratorConfig::paper_scale();
  return c;
}

TrainConfig TrainConfig::desk_overfit() {
  TrainConfig c;
  c.batch_size = 2;
  c.max_steps = 2000;
  c.generator = nn::GeneratorConfig::desk_overfit();
  c.critic.base_width = 32;
  return c;
}

void TrainConfig::validate() const {
  if (epochs <= 0 && max_steps <= 0) throw Error("epochs must be positive");
  if (batch_size <= 0) throw Error("batch size must be positive");
  if (max_steps < 0) throw Error("max_steps must be >= 0");
  if (!(learning_rate > 0)) throw Error("learning rate must be positive");
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1))
    throw Error("Adam betas must lie in [0, 1)");
  if (n_critic < 1) throw Error("n_critic must be >= 1");
  if (!(gp_weight >= 0)) throw Error("gp_weight must be >= 0");
  if (eval_interval < 0 || checkpoint_interval < 0) throw Error("intervals must be >= 0");
  if (threads < 1) throw Error("threads must be >= 1");
  weights.validate();
  generator.validate();
  critic.validate();
  if (critic.condition_channels != generator.input_channels ||
      critic.image_channels != generator.output_channels)
    throw Error("critic channels must match generator input/output channels");
}

losses::LossWeights TrainConfig::effective_weights() const {
  losses::LossWeights w = weights;
  if (!use_l1) w.l1 = 0.0;
  if (!use_freq) w.rec_pix = w.rec_fft = 0.0;
  if (!use_mi) w.mi = 0.0;
  return w;
}

std::string TrainConfig::fingerprint() const {
  return generator.fingerprint() + "|" + critic.fingerprint();
}

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

template <typename E>
E parse_enum(const std::string& value, std::initializer_list<std::pair<const char*, E>> options,
             const char* key) {
  for (const auto& [name, e] : options)
    if (value == name) return e;
  throw Error(std::string("config: invalid value '") + value + "' for " + key);
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& section) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error("config: unknown key '" + section + key + "'");
  }
}

}  // namespace

TrainConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("config must be a JSON object");
  reject_unknown(j,
                 {"preset", "epochs", "batch_size", "max_steps", "learning_rate", "beta1", "beta2",
                  "n_critic", "gp_weight", "seed", "use_l1", "use_freq", "use_mi", "eval_interval",
                  "checkpoint_interval", "threads", "loss", "generator", "critic"},
                 "");
  TrainConfig c;
  try {
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset == "paper") c = TrainConfig::paper();
      else if (preset == "desk_overfit") c = TrainConfig::desk_overfit();
      else if (preset != "desk") throw Error("config: unknown preset '" + preset + "'");
    }
    take(j, "epochs", c.epochs);
    take(j, "batch_size", c.batch_size);
    take(j, "max_steps", c.max_steps);
    take(j, "learning_rate", c.learning_rate);
    take(j, "beta1", c.beta1);
    take(j, "beta2", c.beta2);
    take(j, "n_critic", c.n_critic);
    take(j, "gp_weight", c.gp_weight);
    take(j, "seed", c.seed);
    take(j, "use_l1", c.use_l1);
    take(j, "use_freq", c.use_freq);
    take(j, "use_mi", c.use_mi);
    take(j, "eval_interval", c.eval_interval);
    take(j, "checkpoint_interval", c.checkpoint_interval);
    take(j, "threads", c.threads);

    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      reject_unknown(l,
                     {"lambda_adv", "lambda_l1", "lambda_mi", "lambda_rec_pix", "lambda_rec_fft",
                      "gaussian_kernel_size", "gaussian_sigma", "histogram_bins",
                      "histogram_bandwidth", "mi_form", "mi_reference", "spectrum"},
                     "loss.");
      auto& w = c.weights;
      take(l, "lambda_adv", w.adversarial);
      take(l, "lambda_l1", w.l1);
      take(l, "lambda_mi", w.mi);
      take(l, "lambda_rec_pix", w.rec_pix);
      take(l, "lambda_rec_fft", w.rec_fft);
      take(l, "gaussian_kernel_size", w.gaussian_kernel_size);
      take(l, "gaussian_sigma", w.gaussian_sigma);
      take(l, "histogram_bins", w.histogram.bins);
      take(l, "histogram_bandwidth", w.histogram.bandwidth);
      if (l.contains("mi_form"))
        w.mi_form = parse_enum<losses::MiForm>(
            l.at("mi_form").get<std::string>(),
            {{"one_minus", losses::MiForm::OneMinus}, {"literal", losses::MiForm::Literal}},
            "loss.mi_form");
      if (l.contains("mi_reference"))
        w.mi_reference = parse_enum<losses::MiReference>(
            l.at("mi_reference").get<std::string>(),
            {{"target", losses::MiReference::Target}, {"inputs", losses::MiReference::Inputs}},
            "loss.mi_reference");
      if (l.contains("spectrum"))
        w.spectrum = parse_enum<losses::SpectrumComponent>(
            l.at("spectrum").get<std::string>(),
            {{"real", losses::SpectrumComponent::Real},
             {"amplitude", losses::SpectrumComponent::Amplitude}},
            "loss.spectrum");
    }
    if (j.contains("generator")) {
      const auto& g = j.at("generator");
      reject_unknown(g,
                     {"base_embed_dim", "lewin_depths", "bottleneck_depth", "window_size", "heads",
                      "bottleneck_heads", "ffn_ratio", "modulators_enabled"},
                     "generator.");
      auto& gc = c.generator;
      take(g, "base_embed_dim", gc.base_embed_dim);
      take(g, "lewin_depths", gc.lewin_depths);
      take(g, "bottleneck_depth", gc.bottleneck_depth);
      take(g, "window_size", gc.window_size);
      take(g, "heads", gc.heads);
      take(g, "bottleneck_heads", gc.bottleneck_heads);
      take(g, "ffn_ratio", gc.ffn_ratio);
      take(g, "modulators_enabled", gc.modulators_enabled);
    }
    if (j.contains("critic")) {
      const auto& d = j.at("critic");
      reject_unknown(d, {"base_width", "strided_blocks", "norm", "bias", "leaky_slope"}, "critic.");
      auto& cc = c.critic;
      take(d, "base_width", cc.base_width);
      take(d, "strided_blocks", cc.strided_blocks);
      take(d, "bias", cc.bias);
      take(d, "leaky_slope", cc.leaky_slope);
      if (d.contains("norm"))
        cc.norm = parse_enum<nn::CriticNorm>(
            d.at("norm").get<std::string>(),
            {{"instance", nn::CriticNorm::Instance}, {"none", nn::CriticNorm::None}},
            "critic.norm");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const TrainConfig& c) {
  const auto& w = c.weights;
  const auto& g = c.generator;
  const auto& d = c.critic;
  return {
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"max_steps", c.max_steps},
      {"learning_rate", c.learning_rate},
      {"beta1", c.beta1},
      {"beta2", c.beta2},
      {"n_critic", c.n_critic},
      {"gp_weight", c.gp_weight},
      {"seed", c.seed},
      {"use_l1", c.use_l1},
      {"use_freq", c.use_freq},
      {"use_mi", c.use_mi},
      {"eval_interval", c.eval_interval},
      {"checkpoint_interval", c.checkpoint_interval},
      {"threads", c.threads},
      {"loss",
       {{"lambda_adv", w.adversarial},
        {"lambda_l1", w.l1},
        {"lambda_mi", w.mi},
        {"lambda_rec_pix", w.rec_pix},
        {"lambda_rec_fft", w.rec_fft},
        {"gaussian_kernel_size", w.gaussian_kernel_size},
        {"gaussian_sigma", w.gaussian_sigma},
        {"histogram_bins", w.histogram.bins},
        {"histogram_bandwidth", w.histogram.effective_bandwidth()},
        {"mi_form", w.mi_form == losses::MiForm::OneMinus ? "one_minus" : "literal"},
        {"mi_reference", w.mi_reference == losses::MiReference::Target ? "target" : "inputs"},
        {"spectrum", w.spectrum == losses::SpectrumComponent::Real ? "real" : "amplitude"}}},
      {"generator",
       {{"base_embed_dim", g.base_embed_dim},
        {"lewin_depths", g.lewin_depths},
        {"bottleneck_depth", g.bottleneck_depth},
        {"window_size", g.window_size},
        {"heads", g.heads},
        {"bottleneck_heads", g.bottleneck_heads},
        {"ffn_ratio", g.ffn_ratio},
        {"modulators_enabled", g.modulators_enabled}}},
      {"critic",
       {{"base_width", d.base_width},
        {"strided_blocks", d.strided_blocks},
        {"norm", d.norm == nn::CriticNorm::Instance ? "instance" : "none"},
        {"bias", d.bias},
        {"leaky_slope", d.leaky_slope}}},
  };
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(j);
}

// ---------------------------------------------------------------- trainer

Trainer::Trainer(TrainConfig config) : config_(std::move(config)) {
  config_.validate();
  torch::manual_seed(config_.seed);
  generator_ = nn::Generator(config_.generator);
  critic_ = nn::PatchCritic(config_.critic);
  gen_opt_ = std::make_unique<torch::optim::Adam>(generator_->parameters(), adam_options(config_));
  critic_opt_ = std::make_unique<torch::optim::Adam>(critic_->parameters(), adam_options(config_));
}

losses::LossBreakdown Trainer::generator_objective(const torch::Tensor& inputs,
                                                   const torch::Tensor& targets,
                                                   const torch::Tensor& fake) {
  auto adv = -critic_->forward(inputs, fake).mean();
  return losses::composite_generator_loss(targets, fake, inputs, adv, config_.effective_weights());
}

StepRecord Trainer::train_step(const torch::Tensor& inputs, const torch::Tensor& targets) {
  if (inputs.size(0) == 0) throw Error("train_step: empty batch");
  generator_->train();
  critic_->train();
  const int64_t next = step_ + 1;
  auto fail = [&](const std::string& term) {
    throw Error("non-finite loss term '" + term + "' at step " + std::to_string(next));
  };

  auto fake = generator_->forward(inputs);
  auto critic_fn = nn::as_critic_fn(critic_);

  StepRecord rec;
  rec.step = next;
  nn::AdversarialTerms adv_terms;
  for (int64_t k = 0; k < config_.n_critic; ++k) {
    try {
      adv_terms = nn::adversarial_terms(critic_fn, inputs, targets, fake.detach(), config_.gp_weight,
                                        derive_seed(config_.seed, static_cast<uint64_t>(next),
                                                    static_cast<uint64_t>(k)));
    } catch (const Error& e) {
      if (std::string_view(e.what()).find("penalty diverged") != std::string_view::npos) fail("gp");
      throw;
    }
    if (!std::isfinite(scalar(adv_terms.critic_loss))) fail("critic_loss");
    critic_opt_->zero_grad();
    adv_terms.critic_loss.backward();
    critic_opt_->step();
  }
  rec.critic_loss = scalar(adv_terms.critic_loss);
  rec.wasserstein_gap = scalar(adv_terms.wasserstein_gap);

  for (auto& p : critic_->parameters()) p.requires_grad_(false);
  auto breakdown = generator_objective(inputs, targets, fake);
  for (auto& p : critic_->parameters()) p.requires_grad_(true);

  for (const auto& [name, value] : breakdown.terms) {
    rec.terms[name] = scalar(value);
    if (!std::isfinite(rec.terms[name])) fail(name);
  }
  rec.terms[losses::kTermGp] = scalar(adv_terms.gradient_penalty);
  rec.total = scalar(breakdown.total);
  if (!std::isfinite(rec.total)) fail("total");

  gen_opt_->zero_grad();
  breakdown.total.backward();
  gen_opt_->step();
  step_ = next;
  return rec;
}

torch::Tensor Trainer::predict(const torch::Tensor& inputs) {
  torch::NoGradGuard guard;
  generator_->eval();
  auto out = generator_->forward(inputs);
  generator_->train();
  return out;
}

metrics::Model Trainer::model_fn() {
  return [this](const torch::Tensor& x) { return predict(x); };
}

void Trainer::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.fingerprint = config_.fingerprint();
  nlohmann::json meta{{"step", step_}, {"config", config_to_json(config_)}};
  ckpt.metadata = meta.dump();
  export_module(*generator_, "generator", ckpt.tensors);
  export_module(*critic_, "critic", ckpt.tensors);
  export_adam(*gen_opt_, *generator_, "optim.generator", ckpt.tensors);
  export_adam(*critic_opt_, *critic_, "optim.critic", ckpt.tensors);
  write_checkpoint(ckpt, path);
}

void Trainer::load(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.fingerprint != config_.fingerprint())
    throw Error("checkpoint fingerprint mismatch: file has '" + ckpt.fingerprint +
                "', model expects '" + config_.fingerprint() + "'");
  import_module(*generator_, "generator", ckpt.tensors);
  import_module(*critic_, "critic", ckpt.tensors);
  import_adam(*gen_opt_, *generator_, "optim.generator", ckpt.tensors);
  import_adam(*critic_opt_, *critic_, "optim.critic", ckpt.tensors);
  step_ = nlohmann::json::parse(ckpt.metadata).at("step").get<int64_t>();
}

nn::Generator load_generator(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  TrainConfig config;
  try {
    config = config_from_json(nlohmann::json::parse(ckpt.metadata).at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw Error("checkpoint '" + path.string() + "' has unreadable metadata: " + e.what());
  }
  if (ckpt.fingerprint != config.fingerprint())
    throw Error("checkpoint fingerprint mismatch: file has '" + ckpt.fingerprint +
                "', metadata describes '" + config.fingerprint() + "'");
  nn::Generator gen(config.generator);
  import_module(*gen, "generator", ckpt.tensors);
  gen->eval();
  return gen;
}

// ---------------------------------------------------------------- fit

std::vector<size_t> epoch_order(size_t count, uint64_t seed, int64_t epoch) {
  std::vector<size_t> order(count);
  for (size_t i = 0; i < count; ++i) order[i] = i;
  uint64_t state = derive_seed(seed, 0xE90C4ULL, static_cast<uint64_t>(epoch));
  for (size_t i = count; i > 1; --i) {
    state = splitmix64(state);
    std::swap(order[i - 1], order[state % i]);
  }
  return order;
}

void write_step_log(std::ostream& out, const StepRecord& r) {
  auto line = [&](const std::string& term, double value) {
    out << nlohmann::json{{"step", r.step}, {"epoch", r.epoch}, {"term", term}, {"value", value}}
               .dump()
        << '\n';
  };
  for (const auto& [term, value] : r.terms) line(term, value);
  line("total", r.total);
  line("critic_loss", r.critic_loss);
  line("wasserstein_gap", r.wasserstein_gap);
}

std::vector<StepRecord> read_step_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open step log '" + path.string() + "'");
  std::vector<StepRecord> out;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    const auto step = j.at("step").get<int64_t>();
    if (out.empty() || out.back().step != step) {
      out.emplace_back();
      out.back().step = step;
      out.back().epoch = j.value("epoch", int64_t{0});
    }
    const auto term = j.at("term").get<std::string>();
    const auto value = j.at("value").get<double>();
    if (term == "total") out.back().total = value;
    else if (term == "critic_loss") out.back().critic_loss = value;
    else if (term == "wasserstein_gap") out.back().wasserstein_gap = value;
    else out.back().terms[term] = value;
  }
  return out;
}

FitResult fit(std::span<const data::TrainingSample> dataset, const TrainConfig& config,
              const FitOptions& options) {
  if (dataset.empty()) throw Error("fit: empty dataset");
  config.validate();
  at::set_num_threads(config.threads);

  FitResult result;
  result.trainer = std::make_unique<Trainer>(config);
  Trainer& trainer = *result.trainer;
  if (options.resume_from) trainer.load(*options.resume_from);

  const auto n = dataset.size();
  const auto bs = static_cast<size_t>(config.batch_size);
  const int64_t steps_per_epoch = static_cast<int64_t>((n + bs - 1) / bs);
  const int64_t total_steps = config.max_steps > 0 ? config.max_steps : config.epochs * steps_per_epoch;
  const auto eval_set = options.validation.empty() ? dataset : options.validation;
  const metrics::RandomConvExtractor extractor;

  const bool writing = !options.output_dir.empty();
  std::ofstream history_log, eval_log;
  if (writing) {
    std::filesystem::create_directories(options.output_dir / "checkpoints");
    const auto mode = options.resume_from ? std::ios::app : std::ios::trunc;
    history_log.open(options.output_dir / "history.jsonl", mode);
    eval_log.open(options.output_dir / "evaluations.jsonl", mode);
    if (!history_log || !eval_log) throw Error("cannot write logs in '" + options.output_dir.string() + "'");
    nlohmann::json meta{
        {"config", config_to_json(config)},
        {"fingerprint", config.fingerprint()},
        {"steps_per_epoch", steps_per_epoch},
        {"total_steps", total_steps},
        {"train_slices", n},
        {"assumptions",
         {"optimizer: Adam, constant learning rate, betas as configured",
          "n_critic and gradient-penalty weight as configured",
          "adversarial term weight in the generator objective as configured (default 1)",
          "no early stopping"}}};
    std::ofstream(options.output_dir / "run_metadata.json") << meta.dump(2) << '\n';
  }

  std::vector<size_t> order;
  int64_t order_epoch = -1;
  while (trainer.step() < total_steps) {
    const int64_t s = trainer.step();
    const int64_t epoch = s / steps_per_epoch;
    if (epoch != order_epoch) {
      order = epoch_order(n, config.seed, epoch);
      order_epoch = epoch;
    }
    const auto begin = static_cast<size_t>(s % steps_per_epoch) * bs;
    std::vector<size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                            order.begin() + static_cast<std::ptrdiff_t>(std::min(n, begin + bs)));

    StepRecord rec = trainer.train_step(stack_field(dataset, idx, true), stack_field(dataset, idx, false));
    rec.epoch = epoch;
    if (writing) {
      write_step_log(history_log, rec);
      history_log.flush();
    }
    if (options.on_step) options.on_step(rec);
    result.history.push_back(std::move(rec));

    const int64_t done = trainer.step();
    if (config.eval_interval > 0 && (done % config.eval_interval == 0 || done == total_steps)) {
      EvalRecord ev{done, metrics::evaluate_dataset(trainer.model_fn(), eval_set, extractor)};
      if (writing)
        eval_log << nlohmann::json{{"step", done}, {"report", nlohmann::json::parse(ev.report.to_json())}}.dump()
                 << '\n' << std::flush;
      result.evaluations.push_back(std::move(ev));
    }
    if (writing && config.checkpoint_interval > 0 &&
        (done % config.checkpoint_interval == 0 || done == total_steps)) {
      std::ostringstream name;
      name << "step_" << std::setw(7) << std::setfill('0') << done << ".ckpt";
      trainer.save(options.output_dir / "checkpoints" / name.str());
      trainer.save(options.output_dir / "checkpoints" / "latest.ckpt");
    }
  }

  for (const auto& p : trainer.generator()->parameters())
    if (!torch::isfinite(p).all().item<bool>()) throw Error("generator parameter became non-finite");
  if (writing) trainer.save(options.output_dir / "final.ckpt");
  return result;
}

// ---------------------------------------------------------------- ablation

std::pair<metrics::Summary, metrics::Summary> pooled_psnr_ssim(const metrics::MetricsReport& r) {
  std::vector<double> ps, ss;
  for (const auto& s : r.samples)
    for (size_t c = 0; c < 2; ++c) {
      ps.push_back(s.psnr[c]);
      ss.push_back(s.ssim[c]);
    }
  return {metrics::summarize(ps), metrics::summarize(ss)};
}

AblationTable ablate(std::span<const data::TrainingSample> dataset, const TrainConfig& base,
                     std::span<const data::TrainingSample> evaluation,
                     const std::filesystem::path& output_dir) {
  if (dataset.empty()) throw Error("ablate: empty dataset");
  const auto eval_set = evaluation.empty() ? dataset : evaluation;
  const metrics::RandomConvExtractor extractor;

  AblationTable table;
  table.rows = {
      {"L1", true, false, false, {}, {}, {}},
      {"L1 + L_rec,pix + L_rec,fft", true, true, false, {}, {}, {}},
      {"L1 + L_rec,pix + L_rec,fft + L_MI", true, true, true, {}, {}, {}},
  };
  for (size_t i = 0; i < table.rows.size(); ++i) {
    AblationRow& row = table.rows[i];
    TrainConfig cfg = base;
    cfg.use_l1 = row.use_l1;
    cfg.use_freq = row.use_freq;
    cfg.use_mi = row.use_mi;
    cfg.eval_interval = 0;
    cfg.checkpoint_interval = 0;
    FitResult run = fit(dataset, cfg);
    auto report = metrics::evaluate_dataset(run.trainer->model_fn(), eval_set, extractor);
    std::tie(row.psnr, row.ssim) = pooled_psnr_ssim(report);
    if (!output_dir.empty()) {
      std::filesystem::create_directories(output_dir);
      row.checkpoint = output_dir / ("ablation_row" + std::to_string(i + 1) + ".ckpt");
      run.trainer->save(row.checkpoint);
    }
  }
  return table;
}

std::string AblationTable::to_text() const {
  std::ostringstream out;
  out << "Model\tPSNR\tSSIM\n" << std::fixed;
  for (const auto& r : rows)
    out << r.label << '\t' << std::setprecision(2) << r.psnr.mean << " +/- " << r.psnr.std << '\t'
        << std::setprecision(4) << r.ssim.mean << " +/- " << std::setprecision(3) << r.ssim.std
        << '\n';
  return out.str();
}

std::string AblationTable::to_json() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows)
    rows_json.push_back({{"label", r.label},
                         {"use_l1", r.use_l1},
                         {"use_freq", r.use_freq},
                         {"use_mi", r.use_mi},
                         {"psnr", {{"mean", r.psnr.mean}, {"std", r.psnr.std}}},
                         {"ssim", {{"mean", r.ssim.mean}, {"std", r.ssim.std}}},
                         {"checkpoint", r.checkpoint.string()}});
  return nlohmann::json{{"rows", rows_json}}.dump(2);
}

}  // namespace dceformer::training
