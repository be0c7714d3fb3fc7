#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <torch/torch.h>

namespace dceformer {

inline constexpr uint32_t kCheckpointFormatVersion = 1;

/// Named-tensor container. `fingerprint` identifies the architecture the
/// tensors belong to; `metadata` is a free-form JSON string.
struct Checkpoint {
  std::string fingerprint;
  std::string metadata;
  std::map<std::string, torch::Tensor> tensors;
};

/// Writes to a sibling temporary file and renames it into place, so an
/// existing checkpoint at `path` survives a failed write.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies every parameter and buffer of `module` into `out` as
/// "<prefix>.<name>".
void export_module(const torch::nn::Module& module, const std::string& prefix,
                   std::map<std::string, torch::Tensor>& out);
/// Loads tensors written by export_module; throws Error on a missing name
/// or a shape mismatch.
void import_module(torch::nn::Module& module, const std::string& prefix,
                   const std::map<std::string, torch::Tensor>& in);

}  // namespace dceformer
