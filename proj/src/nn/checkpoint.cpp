#include "cmr/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cmr::nn {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'R', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  return v;
}

std::string read_bytes(std::istream& in, std::size_t n, const std::filesystem::path& path) {
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
  return s;
}

}  // namespace

void Checkpoint::add_parameters(const ParameterSet& params, const std::string& prefix) {
  for (const auto& [name, t] : params.entries()) {
    tensors.push_back({prefix + name, t.shape(), std::vector<Real>(t.values().begin(), t.values().end())});
  }
}

const NamedTensor* Checkpoint::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

void Checkpoint::load_parameters(const ParameterSet& params, const std::string& prefix) const {
  for (const auto& [name, t] : params.entries()) {
    const NamedTensor* src = find(prefix + name);
    if (src == nullptr) throw std::runtime_error("checkpoint is missing parameter " + prefix + name);
    if (src->shape != t.shape()) {
      throw std::runtime_error("checkpoint parameter " + prefix + name + " has shape " + shape_str(src->shape) +
                               ", expected " + shape_str(t.shape()));
    }
    Tensor dst = t;
    std::copy(src->values.begin(), src->values.end(), dst.values().begin());
  }
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kCheckpointVersion);
  write_pod(out, static_cast<std::uint32_t>(sizeof(Real)));
  const std::string header = ckpt.header.dump();
  write_pod(out, static_cast<std::uint64_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_pod(out, static_cast<std::uint64_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (shape_numel(t.shape) != t.values.size()) throw std::invalid_argument("tensor " + t.name + " shape/value mismatch");
    write_pod(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod(out, static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) write_pod(out, static_cast<std::uint64_t>(d));
    out.write(reinterpret_cast<const char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(Real)));
  }
  if (!out) throw std::runtime_error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path.string());
  }
  const auto version = read_pod<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version) + " in " + path.string());
  }
  const auto real_bytes = read_pod<std::uint32_t>(in, path);
  if (real_bytes != sizeof(Real)) {
    throw std::runtime_error("checkpoint was written with " + std::to_string(real_bytes) + "-byte reals; this build uses " +
                             std::to_string(sizeof(Real)));
  }
  Checkpoint ckpt;
  const auto header_len = read_pod<std::uint64_t>(in, path);
  ckpt.header = nlohmann::json::parse(read_bytes(in, header_len, path));
  const auto count = read_pod<std::uint64_t>(in, path);
  ckpt.tensors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = read_bytes(in, read_pod<std::uint32_t>(in, path), path);
    const auto rank = read_pod<std::uint32_t>(in, path);
    for (std::uint32_t r = 0; r < rank; ++r) t.shape.push_back(read_pod<std::uint64_t>(in, path));
    t.values.resize(shape_numel(t.shape));
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(t.values.size() * sizeof(Real)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path.string());
    ckpt.tensors.push_back(std::move(t));
  }
  return ckpt;
}

}  // namespace cmr::nn
