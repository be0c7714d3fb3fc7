#pragma once

#include <filesystem>
#include <vector>

#include <torch/torch.h>

namespace dceformer::viz {

/// Tiles 2-D images (each (H, W), values in [0, 1]) into a grid with `cols`
/// columns and a `gap`-pixel border of value `background`. Images may differ
/// in size; each cell takes the largest extent. Returns (rows*h, cols*w).
torch::Tensor tile(const std::vector<torch::Tensor>& images, int64_t cols, int64_t gap = 2,
                   double background = 1.0);

/// One row per sample: T2W, ADC, T1, early (truth), early (pred), late
/// (truth), late (pred). inputs (B, 3, H, W), targets / predictions (B, 2, H, W).
torch::Tensor comparison_grid(const torch::Tensor& inputs, const torch::Tensor& targets,
                              const torch::Tensor& predictions);

/// Binary 8-bit greyscale PGM (P5). Values are clamped to [0, 1].
void write_pgm(const torch::Tensor& image, const std::filesystem::path& path);

}  // namespace dceformer::viz
