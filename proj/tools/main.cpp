// Command-line front end: gen-data, train, eval, predict, ablate, grid.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dceformer/dataset_io.hpp"
#include "dceformer/error.hpp"
#include "dceformer/montage.hpp"
#include "dceformer/spec_json.hpp"
#include "dceformer/training.hpp"

namespace fs = std::filesystem;
using namespace dceformer;

namespace {

std::vector<data::TrainingSample> slices_of(const std::vector<data::Study>& studies) {
  std::vector<data::TrainingSample> out;
  for (const auto& s : studies) {
    auto part = data::extract_slices(s);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
}

torch::Tensor run_generator(nn::Generator& gen, const torch::Tensor& inputs) {
  torch::NoGradGuard guard;
  std::vector<torch::Tensor> parts;
  for (int64_t b = 0; b < inputs.size(0); b += 8)
    parts.push_back(gen->forward(inputs.slice(0, b, std::min<int64_t>(b + 8, inputs.size(0)))));
  return torch::cat(parts);
}

training::TrainConfig config_with_overrides(const std::string& path, std::optional<uint64_t> seed,
                                            std::optional<int64_t> max_steps, int threads) {
  auto config = path.empty() ? training::TrainConfig{} : training::load_config(path);
  if (seed) config.seed = *seed;
  if (max_steps) config.max_steps = *max_steps;
  if (threads > 0) config.threads = threads;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DCE-MRI synthesis from non-contrast inputs"};
  app.require_subcommand(1);

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate phantom train/val dataset containers");
  std::string gen_recipe, gen_out;
  std::optional<uint64_t> gen_seed;
  gen->add_option("--recipe", gen_recipe, "dataset recipe JSON (desk defaults when omitted)");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--seed", gen_seed, "override base_seed");

  // train
  auto* train = app.add_subcommand("train", "train generator and critic");
  std::string tr_config, tr_data, tr_val, tr_out, tr_resume;
  std::optional<uint64_t> tr_seed;
  std::optional<int64_t> tr_steps;
  int tr_threads = 0;
  bool tr_quiet = false;
  train->add_option("--config", tr_config, "training config JSON");
  train->add_option("--data", tr_data, "training dataset container")->required();
  train->add_option("--val", tr_val, "validation dataset container");
  train->add_option("--out", tr_out, "run directory")->required();
  train->add_option("--resume", tr_resume, "checkpoint to resume from");
  train->add_option("--seed", tr_seed, "override seed");
  train->add_option("--max-steps", tr_steps, "override max_steps");
  train->add_option("--threads", tr_threads, "override thread count");
  train->add_flag("--quiet", tr_quiet, "no per-step output");

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  std::string ev_ckpt, ev_data, ev_out, ev_table;
  eval->add_option("--checkpoint", ev_ckpt)->required();
  eval->add_option("--data", ev_data)->required();
  eval->add_option("--out", ev_out, "metrics report JSON")->required();
  eval->add_option("--table", ev_table, "also write a TSV table");

  // predict
  auto* predict = app.add_subcommand("predict", "write predicted early/late volumes");
  std::string pr_ckpt, pr_data, pr_out;
  predict->add_option("--checkpoint", pr_ckpt)->required();
  predict->add_option("--data", pr_data, "input dataset container")->required();
  predict->add_option("--out", pr_out, "output dataset container")->required();

  // ablate
  auto* ablate = app.add_subcommand("ablate", "loss-component ablation table");
  std::string ab_config, ab_data, ab_val, ab_out;
  std::optional<uint64_t> ab_seed;
  std::optional<int64_t> ab_steps;
  int ab_threads = 0;
  ablate->add_option("--config", ab_config, "base training config JSON");
  ablate->add_option("--data", ab_data)->required();
  ablate->add_option("--val", ab_val);
  ablate->add_option("--out", ab_out, "output directory")->required();
  ablate->add_option("--seed", ab_seed, "override seed");
  ablate->add_option("--max-steps", ab_steps, "override max_steps");
  ablate->add_option("--threads", ab_threads, "override thread count");

  // grid
  auto* grid = app.add_subcommand("grid", "input / truth / prediction montage (PGM)");
  std::string gr_ckpt, gr_data, gr_out;
  std::vector<int64_t> gr_slices;
  size_t gr_study = 0;
  grid->add_option("--checkpoint", gr_ckpt)->required();
  grid->add_option("--data", gr_data)->required();
  grid->add_option("--out", gr_out, "output .pgm")->required();
  grid->add_option("--study", gr_study, "study index in the container");
  grid->add_option("--slices", gr_slices, "slice indices (default: all)")->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      auto recipe = gen_recipe.empty() ? data::DatasetRecipe{} : data::load_recipe(gen_recipe);
      if (gen_seed) recipe.base_seed = *gen_seed;
      recipe.validate();
      auto studies = data::generate_phantom_set(recipe.phantom, recipe.studies, recipe.base_seed, recipe.crop);
      const auto n_train = static_cast<size_t>(data::training_split_size(recipe));
      std::vector<data::Study> tr(studies.begin(), studies.begin() + static_cast<std::ptrdiff_t>(n_train));
      std::vector<data::Study> va(studies.begin() + static_cast<std::ptrdiff_t>(n_train), studies.end());
      fs::create_directories(gen_out);
      data::save_dataset(tr, fs::path(gen_out) / "train.dcef");
      if (!va.empty()) data::save_dataset(va, fs::path(gen_out) / "val.dcef");
      write_text(fs::path(gen_out) / "recipe.json", recipe_to_json(recipe).dump(2) + "\n");
      std::cout << "wrote " << tr.size() << " training and " << va.size() << " validation studies to "
                << gen_out << "\n";
    } else if (*train) {
      auto config = config_with_overrides(tr_config, tr_seed, tr_steps, tr_threads);
      const auto train_set = slices_of(data::load_dataset(tr_data));
      std::vector<data::TrainingSample> val_set;
      if (!tr_val.empty()) val_set = slices_of(data::load_dataset(tr_val));
      training::FitOptions opts;
      opts.validation = val_set;
      opts.output_dir = tr_out;
      if (!tr_resume.empty()) opts.resume_from = fs::path(tr_resume);
      if (!tr_quiet)
        opts.on_step = [](const training::StepRecord& r) {
          if (r.step % 50 == 0 || r.step == 1)
            std::cout << "step " << r.step << " total " << r.total << " critic " << r.critic_loss << "\n"
                      << std::flush;
        };
      auto result = training::fit(train_set, config, opts);
      std::cout << "trained to step " << result.trainer->step() << "; final checkpoint "
                << (fs::path(tr_out) / "final.ckpt").string() << "\n";
    } else if (*eval) {
      auto g = training::load_generator(ev_ckpt);
      const auto samples = slices_of(data::load_dataset(ev_data));
      const metrics::RandomConvExtractor extractor;
      auto report = metrics::evaluate_dataset(
          [&](const torch::Tensor& x) { return run_generator(g, x); }, samples, extractor);
      write_text(ev_out, report.to_json() + "\n");
      if (!ev_table.empty()) write_text(ev_table, report.to_table());
      std::cout << report.to_table();
    } else if (*predict) {
      auto g = training::load_generator(pr_ckpt);
      std::vector<data::Study> out;
      for (const auto& study : data::load_dataset(pr_data)) {
        auto samples = data::extract_slices(study);
        std::vector<torch::Tensor> inputs;
        for (const auto& s : samples) inputs.push_back(s.input);
        auto pred = run_generator(g, torch::stack(inputs));
        for (size_t i = 0; i < samples.size(); ++i) samples[i].target = pred[static_cast<int64_t>(i)];
        auto assembled = data::assemble_study(samples, study.id);
        for (auto& [m, v] : assembled.volumes) v.spacing_mm = study.volume(m).spacing_mm;
        assembled.lesion_mask = study.lesion_mask;
        out.push_back(std::move(assembled));
      }
      data::save_dataset(out, pr_out);
      std::cout << "wrote predictions for " << out.size() << " studies to " << pr_out << "\n";
    } else if (*ablate) {
      auto config = config_with_overrides(ab_config, ab_seed, ab_steps, ab_threads);
      const auto train_set = slices_of(data::load_dataset(ab_data));
      std::vector<data::TrainingSample> val_set;
      if (!ab_val.empty()) val_set = slices_of(data::load_dataset(ab_val));
      auto table = training::ablate(train_set, config, val_set, ab_out);
      write_text(fs::path(ab_out) / "ablation.txt", table.to_text());
      write_text(fs::path(ab_out) / "ablation.json", table.to_json() + "\n");
      std::cout << table.to_text();
    } else if (*grid) {
      auto g = training::load_generator(gr_ckpt);
      const auto studies = data::load_dataset(gr_data);
      if (gr_study >= studies.size())
        throw Error("study index " + std::to_string(gr_study) + " out of range (" +
                    std::to_string(studies.size()) + " studies)");
      const auto samples = data::extract_slices(studies[gr_study]);
      if (gr_slices.empty())
        for (size_t i = 0; i < samples.size(); ++i) gr_slices.push_back(static_cast<int64_t>(i));
      std::vector<torch::Tensor> in, tg;
      for (int64_t i : gr_slices) {
        if (i < 0 || i >= static_cast<int64_t>(samples.size()))
          throw Error("slice " + std::to_string(i) + " out of range");
        in.push_back(samples[static_cast<size_t>(i)].input);
        tg.push_back(samples[static_cast<size_t>(i)].target);
      }
      auto inputs = torch::stack(in);
      viz::write_pgm(viz::comparison_grid(inputs, torch::stack(tg), run_generator(g, inputs)), gr_out);
      std::cout << "wrote " << gr_out << " (columns: T2W ADC T1 early-truth early-pred late-truth late-pred)\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
