#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <torch/types.h>

#include "dceformer/error.hpp"

namespace dceformer::data {

enum class Modality { T2W, ADC, T1PRE, DCE_EARLY, DCE_LATE };

inline constexpr std::array<Modality, 5> kAllModalities = {
    Modality::T2W, Modality::ADC, Modality::T1PRE, Modality::DCE_EARLY, Modality::DCE_LATE};

/// Input channel order of a TrainingSample.
inline constexpr std::array<Modality, 3> kInputModalities = {Modality::T2W, Modality::ADC,
                                                             Modality::T1PRE};
/// Target channel order of a TrainingSample (0 = early, 1 = late).
inline constexpr std::array<Modality, 2> kTargetModalities = {Modality::DCE_EARLY,
                                                              Modality::DCE_LATE};

std::string_view modality_name(Modality m);
/// Throws Error("unknown modality tag '<tag>'") for anything unrecognised.
Modality modality_from_name(std::string_view tag);

struct Shape3 {
  int64_t height = 0;
  int64_t width = 0;
  int64_t depth = 0;

  int64_t voxel_count() const { return height * width * depth; }
  int64_t slice_size() const { return height * width; }
  bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

/// Dense 3-D grid stored slice-major: index = (d * height + h) * width + w,
/// so every axial slice is one contiguous run of height*width values.
template <typename T>
class Grid3 {
 public:
  Grid3() = default;
  explicit Grid3(Shape3 shape, T fill = T{})
      : shape_(shape), values_(static_cast<size_t>(shape.voxel_count()), fill) {}
  Grid3(Shape3 shape, std::vector<T> values) : shape_(shape), values_(std::move(values)) {
    if (static_cast<int64_t>(values_.size()) != shape_.voxel_count())
      throw Error("grid value count " + std::to_string(values_.size()) +
                  " does not match shape " + to_string(shape_));
  }

  const Shape3& shape() const { return shape_; }
  size_t index(int64_t h, int64_t w, int64_t d) const {
    return static_cast<size_t>((d * shape_.height + h) * shape_.width + w);
  }
  T& at(int64_t h, int64_t w, int64_t d) { return values_[index(h, w, d)]; }
  const T& at(int64_t h, int64_t w, int64_t d) const { return values_[index(h, w, d)]; }

  std::span<T> slice(int64_t d) {
    return {values_.data() + d * shape_.slice_size(), static_cast<size_t>(shape_.slice_size())};
  }
  std::span<const T> slice(int64_t d) const {
    return {values_.data() + d * shape_.slice_size(), static_cast<size_t>(shape_.slice_size())};
  }

  std::vector<T>& values() { return values_; }
  const std::vector<T>& values() const { return values_; }

  bool operator==(const Grid3&) const = default;

 private:
  Shape3 shape_;
  std::vector<T> values_;
};

using ScalarGrid = Grid3<float>;
using MaskGrid = Grid3<uint8_t>;

struct MriVolume {
  ScalarGrid voxels;
  Modality modality = Modality::T2W;
  std::array<float, 3> spacing_mm{1.0F, 1.0F, 1.0F};

  bool operator==(const MriVolume&) const = default;
};

struct Study {
  std::string id;
  std::map<Modality, MriVolume> volumes;
  std::optional<MaskGrid> lesion_mask;

  /// Throws Error naming the modality if it is absent.
  const MriVolume& volume(Modality m) const;
  /// Common grid shape; throws if modalities disagree or the study is empty.
  Shape3 shape() const;

  bool operator==(const Study&) const = default;
};

/// One axial slice: input (3,H,W) = T2W, ADC, T1PRE; target (2,H,W) =
/// early, late. float32, values in [0,1].
struct TrainingSample {
  torch::Tensor input;
  torch::Tensor target;
  std::string study_id;
  int64_t slice_index = 0;
};

struct NormalizationParams {
  double low_percentile = 0.5;
  double high_percentile = 99.5;

  void validate() const;
};

/// Linear-interpolated percentile (same convention as numpy's default).
double percentile(std::span<const float> values, double pct);

/// Clips at the two percentiles and maps affinely onto [0,1].
/// Throws Error("degenerate volume") when no valid affine map exists.
MriVolume normalize_volume(const ScalarGrid& raw, Modality modality,
                           const NormalizationParams& params = {});

struct CropOffsets {
  int64_t height = 0;
  int64_t width = 0;
  int64_t depth = 0;
};

/// Offsets used by center_crop for a given input/crop pair.
CropOffsets center_crop_offsets(const Shape3& input, const Shape3& crop);

Study center_crop(const Study& study, const Shape3& crop);

/// One sample per depth index, in depth order.
std::vector<TrainingSample> extract_slices(const Study& study);

/// Inverse of extract_slices for the five modality volumes (spacing and
/// lesion mask are not carried by samples and are left default/empty).
Study assemble_study(std::span<const TrainingSample> samples, const std::string& id);

}  // namespace dceformer::data
