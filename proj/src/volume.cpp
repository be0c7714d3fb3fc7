#include "dceformer/volume.hpp"

#include <algorithm>
#include <cmath>

#include <torch/torch.h>

namespace dceformer::data {

std::string_view modality_name(Modality m) {
  switch (m) {
    case Modality::T2W: return "T2W";
    case Modality::ADC: return "ADC";
    case Modality::T1PRE: return "T1PRE";
    case Modality::DCE_EARLY: return "DCE_EARLY";
    case Modality::DCE_LATE: return "DCE_LATE";
  }
  throw Error("invalid modality enum value");
}

Modality modality_from_name(std::string_view tag) {
  for (Modality m : kAllModalities)
    if (modality_name(m) == tag) return m;
  throw Error("unknown modality tag '" + std::string(tag) + "'");
}

std::string to_string(const Shape3& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.depth);
}

const MriVolume& Study::volume(Modality m) const {
  auto it = volumes.find(m);
  if (it == volumes.end())
    throw Error("study '" + id + "' is missing modality " + std::string(modality_name(m)));
  return it->second;
}

Shape3 Study::shape() const {
  if (volumes.empty()) throw Error("study '" + id + "' has no volumes");
  const Shape3 first = volumes.begin()->second.voxels.shape();
  for (const auto& [m, v] : volumes) {
    if (!(v.voxels.shape() == first))
      throw Error("study '" + id + "': modality " + std::string(modality_name(m)) + " has shape " +
                  to_string(v.voxels.shape()) + ", expected " + to_string(first));
  }
  return first;
}

void NormalizationParams::validate() const {
  if (!(low_percentile >= 0.0 && low_percentile < high_percentile && high_percentile <= 100.0))
    throw Error("normalization percentiles must satisfy 0 <= low < high <= 100");
}

double percentile(std::span<const float> values, double pct) {
  if (values.empty()) throw Error("percentile of empty set");
  std::vector<float> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = pct / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(rank));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return static_cast<double>(sorted[lo]) +
         frac * (static_cast<double>(sorted[hi]) - static_cast<double>(sorted[lo]));
}

MriVolume normalize_volume(const ScalarGrid& raw, Modality modality,
                           const NormalizationParams& params) {
  params.validate();
  const auto& v = raw.values();
  if (v.empty()) throw Error("degenerate volume: no voxels");
  for (float x : v)
    if (!std::isfinite(x)) throw Error("degenerate volume: non-finite voxel");

  const double lo = percentile(v, params.low_percentile);
  const double hi = percentile(v, params.high_percentile);
  if (!(hi > lo)) throw Error("degenerate volume");

  MriVolume out{ScalarGrid(raw.shape()), modality, {1.0F, 1.0F, 1.0F}};
  auto& dst = out.voxels.values();
  const double scale = 1.0 / (hi - lo);
  for (size_t i = 0; i < v.size(); ++i) {
    const double clipped = std::clamp(static_cast<double>(v[i]), lo, hi);
    dst[i] = static_cast<float>((clipped - lo) * scale);
  }
  return out;
}

CropOffsets center_crop_offsets(const Shape3& input, const Shape3& crop) {
  if (input.height < crop.height || input.width < crop.width || input.depth < crop.depth)
    throw Error("volume smaller than crop: " + to_string(input) + " < " + to_string(crop));
  if (crop.height <= 0 || crop.width <= 0 || crop.depth <= 0)
    throw Error("crop extents must be positive, got " + to_string(crop));
  return {(input.height - crop.height) / 2, (input.width - crop.width) / 2,
          (input.depth - crop.depth) / 2};
}

namespace {

template <typename T>
Grid3<T> crop_grid(const Grid3<T>& src, const Shape3& crop, const CropOffsets& off) {
  Grid3<T> out(crop);
  for (int64_t d = 0; d < crop.depth; ++d)
    for (int64_t h = 0; h < crop.height; ++h) {
      const T* row = &src.at(h + off.height, off.width, d + off.depth);
      std::copy(row, row + crop.width, &out.at(h, 0, d));
    }
  return out;
}

}  // namespace

Study center_crop(const Study& study, const Shape3& crop) {
  const Shape3 shape = study.shape();
  const CropOffsets off = center_crop_offsets(shape, crop);
  Study out;
  out.id = study.id;
  for (const auto& [m, v] : study.volumes)
    out.volumes[m] = MriVolume{crop_grid(v.voxels, crop, off), v.modality, v.spacing_mm};
  if (study.lesion_mask) out.lesion_mask = crop_grid(*study.lesion_mask, crop, off);
  return out;
}

std::vector<TrainingSample> extract_slices(const Study& study) {
  for (Modality m : kAllModalities) (void)study.volume(m);
  const Shape3 shape = study.shape();
  const auto opts = torch::TensorOptions().dtype(torch::kFloat32);

  std::vector<TrainingSample> samples;
  samples.reserve(static_cast<size_t>(shape.depth));
  for (int64_t d = 0; d < shape.depth; ++d) {
    TrainingSample s;
    s.input = torch::empty({3, shape.height, shape.width}, opts);
    s.target = torch::empty({2, shape.height, shape.width}, opts);
    for (size_t c = 0; c < kInputModalities.size(); ++c) {
      auto src = study.volume(kInputModalities[c]).voxels.slice(d);
      std::copy(src.begin(), src.end(), s.input[static_cast<int64_t>(c)].data_ptr<float>());
    }
    for (size_t c = 0; c < kTargetModalities.size(); ++c) {
      auto src = study.volume(kTargetModalities[c]).voxels.slice(d);
      std::copy(src.begin(), src.end(), s.target[static_cast<int64_t>(c)].data_ptr<float>());
    }
    s.study_id = study.id;
    s.slice_index = d;
    samples.push_back(std::move(s));
  }
  return samples;
}

Study assemble_study(std::span<const TrainingSample> samples, const std::string& id) {
  if (samples.empty()) throw Error("cannot assemble a study from zero slices");
  const int64_t h = samples.front().input.size(1);
  const int64_t w = samples.front().input.size(2);
  const Shape3 shape{h, w, static_cast<int64_t>(samples.size())};

  Study out;
  out.id = id;
  for (Modality m : kAllModalities) out.volumes[m] = MriVolume{ScalarGrid(shape), m, {1, 1, 1}};

  for (const auto& s : samples) {
    if (s.slice_index < 0 || s.slice_index >= shape.depth)
      throw Error("slice index " + std::to_string(s.slice_index) + " outside depth " +
                  std::to_string(shape.depth));
    const auto input = s.input.contiguous().to(torch::kFloat32);
    const auto target = s.target.contiguous().to(torch::kFloat32);
    auto copy_channel = [&](const torch::Tensor& src, Modality m) {
      auto dst = out.volumes[m].voxels.slice(s.slice_index);
      const float* p = src.data_ptr<float>();
      std::copy(p, p + shape.slice_size(), dst.begin());
    };
    for (size_t c = 0; c < kInputModalities.size(); ++c)
      copy_channel(input[static_cast<int64_t>(c)], kInputModalities[c]);
    for (size_t c = 0; c < kTargetModalities.size(); ++c)
      copy_channel(target[static_cast<int64_t>(c)], kTargetModalities[c]);
  }
  return out;
}

}  // namespace dceformer::data
