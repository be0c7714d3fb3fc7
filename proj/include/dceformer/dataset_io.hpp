#pragma once

#include <filesystem>
#include <vector>

#include "dceformer/volume.hpp"

namespace dceformer::data {

inline constexpr uint32_t kDatasetFormatVersion = 1;

/// Writes all studies into one little-endian container (layout in
/// docs/formats.md). Every study must carry all five modalities and share
/// one grid shape.
void save_dataset(const std::vector<Study>& studies, const std::filesystem::path& path);

/// Throws Error naming the record index and study id when the file is
/// truncated, has an unknown modality tag, or disagrees with its header.
std::vector<Study> load_dataset(const std::filesystem::path& path);

}  // namespace dceformer::data
