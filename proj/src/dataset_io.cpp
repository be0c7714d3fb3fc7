#include "dceformer/dataset_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "dceformer/binary_io.hpp"

namespace dceformer::data {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'E', 'F', 'D', 'S', 'E', 'T'};

}  // namespace

void save_dataset(const std::vector<Study>& studies, const std::filesystem::path& path) {
  Shape3 common{};
  if (!studies.empty()) common = studies.front().shape();
  for (const Study& s : studies) {
    for (Modality m : kAllModalities) (void)s.volume(m);
    if (!(s.shape() == common))
      throw Error("study '" + s.id + "' has shape " + to_string(s.shape()) +
                  ", container shape is " + to_string(common));
  }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  io::Writer w(out);
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(kDatasetFormatVersion);
  w.u32(static_cast<uint32_t>(studies.size()));
  w.u32(static_cast<uint32_t>(common.height));
  w.u32(static_cast<uint32_t>(common.width));
  w.u32(static_cast<uint32_t>(common.depth));

  for (const Study& s : studies) {
    w.str(s.id);
    const auto& spacing = s.volume(Modality::T2W).spacing_mm;
    for (float v : spacing) w.f32(v);
    w.u32(static_cast<uint32_t>(common.height));
    w.u32(static_cast<uint32_t>(common.width));
    w.u32(static_cast<uint32_t>(common.depth));
    w.u32(static_cast<uint32_t>(kAllModalities.size()));
    for (Modality m : kAllModalities) {
      w.str(std::string(modality_name(m)));
      w.f32s(s.volume(m).voxels.values());
    }
    if (s.lesion_mask) {
      w.u8(1);
      w.u8s(s.lesion_mask->values());
    } else {
      w.u8(0);
    }
  }
  out.flush();
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

std::vector<Study> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  io::Reader r(in, path.string());

  char magic[8];
  r.bytes(magic, sizeof(magic), "header");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("'" + path.string() + "' is not a dataset container (bad magic)");
  const uint32_t version = r.u32("header");
  if (version != kDatasetFormatVersion)
    throw Error("unsupported dataset version " + std::to_string(version));
  const uint32_t count = r.u32("header");
  const Shape3 header_shape{r.u32("header"), r.u32("header"), r.u32("header")};

  std::vector<Study> studies;
  studies.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const std::string where = "record " + std::to_string(i);
    Study s;
    s.id = r.str(where);
    const std::string ctx = where + " (study '" + s.id + "')";
    std::array<float, 3> spacing{r.f32(ctx), r.f32(ctx), r.f32(ctx)};
    const Shape3 shape{r.u32(ctx), r.u32(ctx), r.u32(ctx)};
    if (!(shape == header_shape))
      throw Error(ctx + ": shape " + to_string(shape) + " disagrees with header " +
                  to_string(header_shape));
    const uint32_t nvol = r.u32(ctx);
    for (uint32_t v = 0; v < nvol; ++v) {
      const std::string tag = r.str(ctx);
      Modality m;
      try {
        m = modality_from_name(tag);
      } catch (const Error& e) {
        throw Error(ctx + ": " + e.what());
      }
      if (s.volumes.contains(m)) throw Error(ctx + ": duplicate modality " + tag);
      std::vector<float> voxels = r.f32s(static_cast<size_t>(shape.voxel_count()), ctx);
      s.volumes[m] = MriVolume{ScalarGrid(shape, std::move(voxels)), m, spacing};
    }
    for (Modality m : kAllModalities)
      if (!s.volumes.contains(m))
        throw Error(ctx + ": missing modality " + std::string(modality_name(m)));
    const uint8_t has_mask = r.u8(ctx);
    if (has_mask > 1) throw Error(ctx + ": invalid mask flag " + std::to_string(has_mask));
    if (has_mask == 1)
      s.lesion_mask = MaskGrid(shape, r.u8s(static_cast<size_t>(shape.voxel_count()), ctx));
    studies.push_back(std::move(s));
  }
  if (in.peek() != std::char_traits<char>::eof())
    throw Error("'" + path.string() + "': trailing bytes after " + std::to_string(count) +
                " records");
  return studies;
}

}  // namespace dceformer::data
