#include "dceformer/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "dceformer/binary_io.hpp"
#include "dceformer/error.hpp"

namespace dceformer {

namespace {

constexpr char kMagic[8] = {'D', 'C', 'E', 'F', 'C', 'K', 'P', 'T'};

uint8_t dtype_code(torch::ScalarType t) {
  switch (t) {
    case torch::kFloat32: return 0;
    case torch::kFloat64: return 1;
    case torch::kInt64: return 2;
    default: throw Error(std::string("checkpoint: unsupported dtype ") + c10::toString(t));
  }
}

torch::ScalarType dtype_from_code(uint8_t code, const std::string& ctx) {
  switch (code) {
    case 0: return torch::kFloat32;
    case 1: return torch::kFloat64;
    case 2: return torch::kInt64;
    default: throw Error(ctx + ": unknown dtype code " + std::to_string(code));
  }
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    io::Writer w(out);
    w.bytes(kMagic, sizeof(kMagic));
    w.u32(kCheckpointFormatVersion);
    w.str(ckpt.fingerprint);
    w.str(ckpt.metadata);
    w.u64(ckpt.tensors.size());
    for (const auto& [name, tensor] : ckpt.tensors) {
      auto t = tensor.detach().contiguous().cpu();
      w.str(name);
      w.u8(dtype_code(t.scalar_type()));
      w.u32(static_cast<uint32_t>(t.dim()));
      for (int64_t d : t.sizes()) w.i64(d);
      w.bytes(t.data_ptr(), t.nbytes());
    }
    out.flush();
    if (!out) throw Error("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  io::Reader r(in, path.string());
  char magic[8];
  r.bytes(magic, sizeof(magic), "header");
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw Error("'" + path.string() + "' is not a checkpoint (bad magic)");
  const uint32_t version = r.u32("header");
  if (version != kCheckpointFormatVersion)
    throw Error("unsupported checkpoint version " + std::to_string(version));

  Checkpoint ckpt;
  ckpt.fingerprint = r.str("header");
  ckpt.metadata = r.str("header", 1u << 26);
  const uint64_t count = r.u64("header");
  for (uint64_t i = 0; i < count; ++i) {
    const std::string name = r.str("tensor " + std::to_string(i));
    const std::string ctx = "tensor '" + name + "'";
    const auto dtype = dtype_from_code(r.u8(ctx), ctx);
    const uint32_t ndim = r.u32(ctx);
    if (ndim > 8) throw Error(ctx + ": implausible rank " + std::to_string(ndim));
    std::vector<int64_t> sizes(ndim);
    for (auto& s : sizes) {
      s = r.i64(ctx);
      if (s < 0) throw Error(ctx + ": negative extent");
    }
    auto t = torch::empty(sizes, torch::TensorOptions().dtype(dtype));
    r.bytes(t.data_ptr(), t.nbytes(), ctx);
    ckpt.tensors.emplace(name, std::move(t));
  }
  return ckpt;
}

void export_module(const torch::nn::Module& module, const std::string& prefix,
                   std::map<std::string, torch::Tensor>& out) {
  for (const auto& item : module.named_parameters(/*recurse=*/true))
    out[prefix + "." + item.key()] = item.value().detach().clone();
  for (const auto& item : module.named_buffers(/*recurse=*/true))
    out[prefix + "." + item.key()] = item.value().detach().clone();
}

void import_module(torch::nn::Module& module, const std::string& prefix,
                   const std::map<std::string, torch::Tensor>& in) {
  torch::NoGradGuard guard;
  auto load = [&](const std::string& key, torch::Tensor& dst) {
    const std::string name = prefix + "." + key;
    auto it = in.find(name);
    if (it == in.end()) throw Error("checkpoint is missing tensor '" + name + "'");
    if (!it->second.sizes().equals(dst.sizes()))
      throw Error("checkpoint tensor '" + name + "' has shape " + c10::str(it->second.sizes()) +
                  ", model expects " + c10::str(dst.sizes()));
    dst.copy_(it->second);
  };
  for (auto& item : module.named_parameters(/*recurse=*/true)) load(item.key(), item.value());
  for (auto& item : module.named_buffers(/*recurse=*/true)) load(item.key(), item.value());
}

}  // namespace dceformer
