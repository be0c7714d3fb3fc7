#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "dceformer/volume.hpp"

namespace dceformer::data {

/// Base tissue intensities (arbitrary raw units before normalization).
struct TissueIntensities {
  double t2w = 0.0;
  double adc = 0.0;
  double t1pre = 0.0;
};

/// Synthetic prostate-like study: an elliptic body cross-section extruded
/// through depth, an ellipsoidal organ, and a handful of spherical lesions
/// that are dark on ADC and enhance on both DCE phases.
struct PhantomSpec {
  Shape3 grid{72, 72, 10};
  std::array<float, 3> spacing_mm{0.5F, 0.5F, 3.0F};

  // Body cross-section semi-axes as a fraction of the grid extent.
  double body_radius_fraction_h = 0.45;
  double body_radius_fraction_w = 0.40;
  TissueIntensities body{0.45, 0.35, 0.50};

  std::array<double, 3> organ_radii{18.0, 15.0, 6.0};   // voxels (h, w, d)
  std::array<double, 3> organ_offset{0.0, 0.0, 0.0};    // from grid center
  TissueIntensities organ{0.70, 0.80, 0.45};
  double organ_early_uptake = 0.20;  // DCE = T1 * (1 + uptake * organ)
  double organ_late_uptake = 0.35;

  int min_lesions = 1;
  int max_lesions = 3;
  double min_lesion_radius = 3.0;  // voxels
  double max_lesion_radius = 6.0;
  double adc_attenuation = 0.4;     // < 1: lesions dark in ADC
  double t2w_factor = 0.6;
  double early_enhancement = 2.2;   // > 1
  double late_enhancement = 1.6;    // > 1, below early: washout

  double texture_amplitude = 0.10;
  double noise_level = 0.01;        // Gaussian sigma, raw units
  double smoothing_width = 0.5;     // logistic edge, 10%-90% width in voxels

  NormalizationParams normalization{};

  /// 176x176x20 grid that center-crops to the 160x160x16 training crop.
  static PhantomSpec paper_scale();
  void validate() const;
};

struct Lesion {
  std::array<double, 3> center{};  // voxel coordinates (h, w, d)
  double radius = 0.0;

  bool operator==(const Lesion&) const = default;
};

struct Phantom {
  Study study;  // normalized volumes, lesion mask attached
  std::vector<Lesion> lesions;
};

/// Deterministic in (spec, seed). Throws Error("lesion does not fit ...")
/// when the largest lesion cannot sit inside the organ.
Phantom generate_phantom(const PhantomSpec& spec, uint64_t seed);

/// Generates `count` studies with seeds base_seed, base_seed+1, ... and
/// center-crops each to `crop`.
std::vector<Study> generate_phantom_set(const PhantomSpec& spec, int count, uint64_t base_seed,
                                        const Shape3& crop);

}  // namespace dceformer::data
