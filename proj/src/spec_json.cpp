#include "dceformer/spec_json.hpp"

#include <cmath>
#include <fstream>

#include "dceformer/error.hpp"

namespace dceformer::data {

namespace {

template <typename T>
void take(const nlohmann::json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                    const std::string& section) {
  if (!j.is_object()) throw Error("recipe: '" + section + "' must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw Error("recipe: unknown key '" + section + key + "'");
  }
}

void read_tissue(const nlohmann::json& j, const char* key, TissueIntensities& t) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  reject_unknown(v, {"t2w", "adc", "t1pre"}, std::string("phantom.") + key + ".");
  take(v, "t2w", t.t2w);
  take(v, "adc", t.adc);
  take(v, "t1pre", t.t1pre);
}

nlohmann::json tissue_json(const TissueIntensities& t) {
  return {{"t2w", t.t2w}, {"adc", t.adc}, {"t1pre", t.t1pre}};
}

Shape3 shape_from(const nlohmann::json& v) {
  const auto a = v.get<std::array<int64_t, 3>>();
  return {a[0], a[1], a[2]};
}

nlohmann::json shape_json(const Shape3& s) { return {s.height, s.width, s.depth}; }

}  // namespace

DatasetRecipe DatasetRecipe::paper_scale() {
  DatasetRecipe r;
  r.phantom = PhantomSpec::paper_scale();
  r.studies = 8;
  r.crop = {160, 160, 16};
  return r;
}

void DatasetRecipe::validate() const {
  phantom.validate();
  if (studies < 1) throw Error("recipe: studies must be >= 1");
  if (crop.height < 1 || crop.width < 1 || crop.depth < 1) throw Error("recipe: crop must be positive");
  if (crop.height > phantom.grid.height || crop.width > phantom.grid.width ||
      crop.depth > phantom.grid.depth)
    throw Error("recipe: crop " + to_string(crop) + " exceeds grid " + to_string(phantom.grid));
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
    throw Error("recipe: validation_fraction must lie in [0, 1)");
}

int training_split_size(const DatasetRecipe& r) {
  const int val = static_cast<int>(std::lround(r.studies * r.validation_fraction));
  return std::max(1, r.studies - val);
}

DatasetRecipe recipe_from_json(const nlohmann::json& j) {
  reject_unknown(j, {"preset", "studies", "base_seed", "crop", "validation_fraction", "phantom"}, "");
  DatasetRecipe r;
  try {
    if (j.contains("preset")) {
      const auto preset = j.at("preset").get<std::string>();
      if (preset == "paper") r = DatasetRecipe::paper_scale();
      else if (preset != "desk") throw Error("recipe: unknown preset '" + preset + "'");
    }
    take(j, "studies", r.studies);
    take(j, "base_seed", r.base_seed);
    if (j.contains("crop")) r.crop = shape_from(j.at("crop"));
    take(j, "validation_fraction", r.validation_fraction);
    if (j.contains("phantom")) {
      const auto& p = j.at("phantom");
      reject_unknown(p,
                     {"grid", "spacing_mm", "body_radius_fraction_h", "body_radius_fraction_w",
                      "body", "organ_radii", "organ_offset", "organ", "organ_early_uptake",
                      "organ_late_uptake", "min_lesions", "max_lesions", "min_lesion_radius",
                      "max_lesion_radius", "adc_attenuation", "t2w_factor", "early_enhancement",
                      "late_enhancement", "texture_amplitude", "noise_level", "smoothing_width",
                      "low_percentile", "high_percentile"},
                     "phantom.");
      auto& s = r.phantom;
      if (p.contains("grid")) s.grid = shape_from(p.at("grid"));
      take(p, "spacing_mm", s.spacing_mm);
      take(p, "body_radius_fraction_h", s.body_radius_fraction_h);
      take(p, "body_radius_fraction_w", s.body_radius_fraction_w);
      read_tissue(p, "body", s.body);
      take(p, "organ_radii", s.organ_radii);
      take(p, "organ_offset", s.organ_offset);
      read_tissue(p, "organ", s.organ);
      take(p, "organ_early_uptake", s.organ_early_uptake);
      take(p, "organ_late_uptake", s.organ_late_uptake);
      take(p, "min_lesions", s.min_lesions);
      take(p, "max_lesions", s.max_lesions);
      take(p, "min_lesion_radius", s.min_lesion_radius);
      take(p, "max_lesion_radius", s.max_lesion_radius);
      take(p, "adc_attenuation", s.adc_attenuation);
      take(p, "t2w_factor", s.t2w_factor);
      take(p, "early_enhancement", s.early_enhancement);
      take(p, "late_enhancement", s.late_enhancement);
      take(p, "texture_amplitude", s.texture_amplitude);
      take(p, "noise_level", s.noise_level);
      take(p, "smoothing_width", s.smoothing_width);
      take(p, "low_percentile", s.normalization.low_percentile);
      take(p, "high_percentile", s.normalization.high_percentile);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("recipe: ") + e.what());
  }
  r.validate();
  return r;
}

nlohmann::json recipe_to_json(const DatasetRecipe& r) {
  const auto& s = r.phantom;
  return {{"studies", r.studies},
          {"base_seed", r.base_seed},
          {"crop", shape_json(r.crop)},
          {"validation_fraction", r.validation_fraction},
          {"phantom",
           {{"grid", shape_json(s.grid)},
            {"spacing_mm", s.spacing_mm},
            {"body_radius_fraction_h", s.body_radius_fraction_h},
            {"body_radius_fraction_w", s.body_radius_fraction_w},
            {"body", tissue_json(s.body)},
            {"organ_radii", s.organ_radii},
            {"organ_offset", s.organ_offset},
            {"organ", tissue_json(s.organ)},
            {"organ_early_uptake", s.organ_early_uptake},
            {"organ_late_uptake", s.organ_late_uptake},
            {"min_lesions", s.min_lesions},
            {"max_lesions", s.max_lesions},
            {"min_lesion_radius", s.min_lesion_radius},
            {"max_lesion_radius", s.max_lesion_radius},
            {"adc_attenuation", s.adc_attenuation},
            {"t2w_factor", s.t2w_factor},
            {"early_enhancement", s.early_enhancement},
            {"late_enhancement", s.late_enhancement},
            {"texture_amplitude", s.texture_amplitude},
            {"noise_level", s.noise_level},
            {"smoothing_width", s.smoothing_width},
            {"low_percentile", s.normalization.low_percentile},
            {"high_percentile", s.normalization.high_percentile}}}};
}

DatasetRecipe load_recipe(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open recipe '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error("recipe '" + path.string() + "': " + e.what());
  }
  return recipe_from_json(j);
}

}  // namespace dceformer::data
