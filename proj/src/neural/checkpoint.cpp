#include "dialogen/neural/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <vector>

#include "dialogen/core/error.hpp"

namespace dialogen::nn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     std::span<const ParamStore* const> stores) {
  nlohmann::json arrays = nlohmann::json::array();
  std::set<std::string> seen;
  std::uint64_t offset = 0;
  for (const ParamStore* s : stores) {
    for (std::size_t i = 0; i < s->size(); ++i) {
      const Param& p = (*s)[i];
      if (!seen.insert(p.name).second) throw UsageError("duplicate parameter '" + p.name + "' in checkpoint");
      arrays.push_back({{"name", p.name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}, {"offset", offset}});
      offset += static_cast<std::uint64_t>(p.value.size());
    }
  }
  const nlohmann::json manifest = {{"version", kCheckpointVersion}, {"header", header}, {"arrays", arrays}};
  const std::string text = manifest.dump();
  const auto len = static_cast<std::uint32_t>(text.size());

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    out.write(reinterpret_cast<const char*>(&len), sizeof(len));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const ParamStore* s : stores) {
      for (std::size_t i = 0; i < s->size(); ++i) {
        const Mat& v = (*s)[i].value;
        out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
      }
    }
    if (!out) throw std::runtime_error("failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointFile read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  std::uint32_t len = 0;
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ParseError("not a checkpoint file: " + path.string());
  }
  if (!in.read(reinterpret_cast<char*>(&len), sizeof(len))) throw ParseError("truncated checkpoint header");
  std::string text(len, '\0');
  if (!in.read(text.data(), len)) throw ParseError("truncated checkpoint manifest");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad checkpoint manifest: ") + e.what());
  }
  if (manifest.value("version", -1) != kCheckpointVersion) throw ParseError("unsupported checkpoint version");

  std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t n_doubles = data.size() / sizeof(double);
  if (data.size() % sizeof(double) != 0) throw ParseError("checkpoint data block is misaligned");

  CheckpointFile file;
  file.header = manifest.at("header");
  for (const auto& a : manifest.at("arrays")) {
    const auto name = a.at("name").get<std::string>();
    const auto rows = a.at("rows").get<std::int64_t>();
    const auto cols = a.at("cols").get<std::int64_t>();
    const auto off = a.at("offset").get<std::uint64_t>();
    if (rows < 0 || cols < 0 || off + static_cast<std::uint64_t>(rows * cols) > n_doubles) {
      throw ParseError("checkpoint array '" + name + "' exceeds the data block");
    }
    Mat m(rows, cols);
    std::memcpy(m.data(), data.data() + off * sizeof(double), static_cast<std::size_t>(rows * cols) * sizeof(double));
    if (!file.arrays.emplace(name, std::move(m)).second) throw ParseError("duplicate array '" + name + "'");
  }
  return file;
}

void restore_params(ParamStore& params, const CheckpointFile& file) {
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = params[i];
    auto it = file.arrays.find(p.name);
    if (it == file.arrays.end()) throw ValidationError("checkpoint lacks parameter '" + p.name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      throw ValidationError("shape mismatch for parameter '" + p.name + "'");
    }
    p.value = it->second;
  }
}

}  // namespace dialogen::nn
