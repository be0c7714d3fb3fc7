#include "dceformer/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace dceformer::data {

namespace {

// Soft inside indicator; `width` is the 10%-90% transition distance.
double logistic_inside(double signed_distance, double width) {
  return 1.0 / (1.0 + std::exp(2.0 * std::log(9.0) * signed_distance / width));
}

}  // namespace

PhantomSpec PhantomSpec::paper_scale() {
  PhantomSpec s;
  s.grid = {176, 176, 20};
  s.organ_radii = {45.0, 38.0, 7.0};
  s.min_lesions = 1;
  s.max_lesions = 4;
  s.min_lesion_radius = 4.0;
  s.max_lesion_radius = 7.0;
  return s;
}

void PhantomSpec::validate() const {
  if (grid.height <= 0 || grid.width <= 0 || grid.depth <= 0)
    throw Error("phantom grid must be positive, got " + to_string(grid));
  for (double r : organ_radii)
    if (!(r > 0)) throw Error("organ radii must be positive");
  if (min_lesions < 0 || max_lesions < min_lesions)
    throw Error("lesion count range must satisfy 0 <= min <= max");
  if (!(min_lesion_radius > 0) || max_lesion_radius < min_lesion_radius)
    throw Error("lesion radius range must satisfy 0 < min <= max");
  if (!(early_enhancement > 1.0) || !(late_enhancement > 1.0))
    throw Error("DCE enhancement factors must exceed 1");
  if (!(adc_attenuation > 0.0 && adc_attenuation < 1.0))
    throw Error("ADC attenuation factor must lie in (0, 1)");
  if (!(noise_level >= 0) || !(smoothing_width > 0))
    throw Error("noise level must be >= 0 and smoothing width > 0");
  if (max_lesions > 0 &&
      max_lesion_radius > *std::min_element(organ_radii.begin(), organ_radii.end()))
    throw Error("lesion does not fit: max lesion radius " + std::to_string(max_lesion_radius) +
                " exceeds smallest organ radius");
  normalization.validate();
}

Phantom generate_phantom(const PhantomSpec& spec, uint64_t seed) {
  spec.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const Shape3 g = spec.grid;
  const double ch = 0.5 * static_cast<double>(g.height - 1) + spec.organ_offset[0];
  const double cw = 0.5 * static_cast<double>(g.width - 1) + spec.organ_offset[1];
  const double cd = 0.5 * static_cast<double>(g.depth - 1) + spec.organ_offset[2];

  // Smooth multiplicative texture shared by every modality.
  const double fh = uniform(1.0, 3.0), fw = uniform(1.0, 3.0);
  const double ph = uniform(0.0, 2.0 * std::numbers::pi), pw = uniform(0.0, 2.0 * std::numbers::pi);

  Phantom out;
  const int lesion_count =
      std::uniform_int_distribution<int>(spec.min_lesions, spec.max_lesions)(rng);
  const auto& R = spec.organ_radii;
  for (int i = 0; i < lesion_count; ++i) {
    Lesion les;
    les.radius = uniform(spec.min_lesion_radius, spec.max_lesion_radius);
    // Centre drawn uniformly inside the organ ellipsoid shrunk by the radius.
    const std::array<double, 3> inner{R[0] - les.radius, R[1] - les.radius,
                                      std::max(R[2] - les.radius, 0.0)};
    std::array<double, 3> u{};
    do {
      for (double& x : u) x = uniform(-1.0, 1.0);
    } while (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] > 1.0);
    les.center = {ch + u[0] * inner[0], cw + u[1] * inner[1], cd + u[2] * inner[2]};
    out.lesions.push_back(les);
  }

  const double body_rh = spec.body_radius_fraction_h * static_cast<double>(g.height);
  const double body_rw = spec.body_radius_fraction_w * static_cast<double>(g.width);
  const double body_scale = std::min(body_rh, body_rw);
  const double organ_scale = std::min(R[0], R[1]);
  const double s = spec.smoothing_width;
  const double gh = 0.5 * static_cast<double>(g.height - 1);
  const double gw = 0.5 * static_cast<double>(g.width - 1);

  std::array<ScalarGrid, 5> raw;
  for (auto& r : raw) r = ScalarGrid(g);
  MaskGrid mask(g, 0);

  for (int64_t d = 0; d < g.depth; ++d)
    for (int64_t h = 0; h < g.height; ++h)
      for (int64_t w = 0; w < g.width; ++w) {
        const double y = static_cast<double>(h), x = static_cast<double>(w),
                     z = static_cast<double>(d);
        const double rho_body =
            std::hypot((y - gh) / body_rh, (x - gw) / body_rw);
        const double body = logistic_inside((rho_body - 1.0) * body_scale, s);
        const double rho_org = std::sqrt(std::pow((y - ch) / R[0], 2) +
                                         std::pow((x - cw) / R[1], 2) +
                                         std::pow((z - cd) / R[2], 2));
        const double org = logistic_inside((rho_org - 1.0) * organ_scale, s);
        const double tex =
            1.0 + spec.texture_amplitude *
                      std::cos(2.0 * std::numbers::pi * fh * y / static_cast<double>(g.height) + ph) *
                      std::cos(2.0 * std::numbers::pi * fw * x / static_cast<double>(g.width) + pw);

        double les = 0.0;
        bool inside = false;
        for (const Lesion& l : out.lesions) {
          const double dist = std::sqrt(std::pow(y - l.center[0], 2) +
                                        std::pow(x - l.center[1], 2) +
                                        std::pow(z - l.center[2], 2));
          les = std::max(les, logistic_inside(dist - l.radius, s));
          inside = inside || dist <= l.radius;
        }
        mask.at(h, w, d) = inside ? 1 : 0;

        auto mix = [&](double body_level, double organ_level, double lesion_factor) {
          return (body_level * body * (1.0 - org) + organ_level * org) * tex *
                 (1.0 + (lesion_factor - 1.0) * les);
        };
        const double t1 = mix(spec.body.t1pre, spec.organ.t1pre, 1.0);
        const size_t idx = mask.index(h, w, d);
        raw[0].values()[idx] = static_cast<float>(mix(spec.body.t2w, spec.organ.t2w, spec.t2w_factor));
        raw[1].values()[idx] =
            static_cast<float>(mix(spec.body.adc, spec.organ.adc, spec.adc_attenuation));
        raw[2].values()[idx] = static_cast<float>(t1);
        raw[3].values()[idx] = static_cast<float>(t1 * (1.0 + spec.organ_early_uptake * org) *
                                                  (1.0 + (spec.early_enhancement - 1.0) * les));
        raw[4].values()[idx] = static_cast<float>(t1 * (1.0 + spec.organ_late_uptake * org) *
                                                  (1.0 + (spec.late_enhancement - 1.0) * les));
      }

  std::normal_distribution<double> noise(0.0, 1.0);
  for (auto& r : raw)
    for (float& v : r.values()) v += static_cast<float>(spec.noise_level * noise(rng));

  out.study.id = "phantom_" + std::to_string(seed);
  for (size_t i = 0; i < kAllModalities.size(); ++i) {
    MriVolume vol = normalize_volume(raw[i], kAllModalities[i], spec.normalization);
    vol.spacing_mm = spec.spacing_mm;
    out.study.volumes[kAllModalities[i]] = std::move(vol);
  }
  out.study.lesion_mask = std::move(mask);
  return out;
}

std::vector<Study> generate_phantom_set(const PhantomSpec& spec, int count, uint64_t base_seed,
                                        const Shape3& crop) {
  if (count <= 0) throw Error("phantom set needs at least one study");
  std::vector<Study> studies;
  studies.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    studies.push_back(center_crop(generate_phantom(spec, base_seed + static_cast<uint64_t>(i)).study, crop));
  return studies;
}

}  // namespace dceformer::data
