#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "dceformer/phantom.hpp"

namespace dceformer::data {

/// Dataset recipe for `gen-data`: a phantom spec plus how many studies to
/// draw and how to crop and split them.
struct DatasetRecipe {
  PhantomSpec phantom{};
  int studies = 5;
  uint64_t base_seed = 0;
  Shape3 crop{64, 64, 8};
  /// Fraction of studies assigned to the validation split (study-level).
  double validation_fraction = 0.2;

  /// Eight 176x176x20 studies cropped to 160x160x16.
  static DatasetRecipe paper_scale();
  void validate() const;
};

/// Unknown keys are rejected. An optional "preset" ("desk" or "paper")
/// selects the base.
DatasetRecipe recipe_from_json(const nlohmann::json& j);
nlohmann::json recipe_to_json(const DatasetRecipe& r);
DatasetRecipe load_recipe(const std::filesystem::path& path);

/// Number of studies in the training split (the rest go to validation).
int training_split_size(const DatasetRecipe& r);

}  // namespace dceformer::data
