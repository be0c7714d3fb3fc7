#include "dceformer/montage.hpp"

#include <fstream>

#include "dceformer/error.hpp"

namespace dceformer::viz {

torch::Tensor tile(const std::vector<torch::Tensor>& images, int64_t cols, int64_t gap,
                   double background) {
  if (images.empty()) throw Error("tile: no images");
  if (cols < 1 || gap < 0) throw Error("tile: cols must be >= 1 and gap >= 0");
  int64_t h = 0, w = 0;
  for (const auto& im : images) {
    if (im.dim() != 2) throw Error("tile: images must be 2-D");
    h = std::max(h, im.size(0));
    w = std::max(w, im.size(1));
  }
  const auto n = static_cast<int64_t>(images.size());
  const int64_t rows = (n + cols - 1) / cols;
  auto canvas = torch::full({rows * (h + gap) + gap, cols * (w + gap) + gap}, background,
                            torch::kFloat32);
  using torch::indexing::Slice;
  for (int64_t i = 0; i < n; ++i) {
    const auto& im = images[static_cast<size_t>(i)];
    const int64_t y = gap + (i / cols) * (h + gap);
    const int64_t x = gap + (i % cols) * (w + gap);
    canvas.index_put_({Slice(y, y + im.size(0)), Slice(x, x + im.size(1))},
                      im.detach().to(torch::kFloat32).cpu());
  }
  return canvas;
}

torch::Tensor comparison_grid(const torch::Tensor& inputs, const torch::Tensor& targets,
                              const torch::Tensor& predictions) {
  if (inputs.dim() != 4 || targets.dim() != 4 || !targets.sizes().equals(predictions.sizes()) ||
      inputs.size(0) != targets.size(0))
    throw Error("comparison_grid: expected inputs (B,3,H,W) and matching (B,2,H,W) targets/predictions");
  std::vector<torch::Tensor> cells;
  for (int64_t b = 0; b < inputs.size(0); ++b) {
    for (int64_t c = 0; c < inputs.size(1); ++c) cells.push_back(inputs[b][c]);
    for (int64_t c = 0; c < targets.size(1); ++c) {
      cells.push_back(targets[b][c]);
      cells.push_back(predictions[b][c]);
    }
  }
  return tile(cells, inputs.size(1) + 2 * targets.size(1));
}

void write_pgm(const torch::Tensor& image, const std::filesystem::path& path) {
  if (image.dim() != 2) throw Error("write_pgm: image must be 2-D");
  auto bytes = (image.detach().to(torch::kFloat32).cpu().clamp(0, 1) * 255.0f)
                   .round()
                   .to(torch::kUInt8)
                   .contiguous();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << image.size(1) << ' ' << image.size(0) << "\n255\n";
  out.write(reinterpret_cast<const char*>(bytes.data_ptr<uint8_t>()), bytes.numel());
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

}  // namespace dceformer::viz
