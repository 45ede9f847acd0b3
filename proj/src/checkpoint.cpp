#include "procseed/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "procseed/errors.hpp"
#include "procseed/model_config.hpp"

namespace procseed {

namespace {

constexpr char kMagic[4] = {'P', 'C', 'K', 'P'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

// Tensors carry the owning head index in their name (".head<h>."); the
// file format stores only name/tag/layer, so recover it on load.
int head_from_name(const std::string& name) {
  auto pos = name.find(".head");
  if (pos == std::string::npos) return -1;
  size_t i = pos + 5;
  if (i >= name.size() || !isdigit(static_cast<unsigned char>(name[i]))) return -1;
  int h = 0;
  while (i < name.size() && isdigit(static_cast<unsigned char>(name[i]))) {
    h = h * 10 + (name[i] - '0');
    ++i;
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& p) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for writing: " + path);
  nlohmann::json meta = {{"config", p.config}, {"provenance", p.provenance}};
  std::string ms = meta.dump();
  out.write(kMagic, 4);
  write_pod(out, kVersion);
  write_pod(out, static_cast<uint32_t>(ms.size()));
  out.write(ms.data(), static_cast<std::streamsize>(ms.size()));
  write_pod(out, static_cast<uint32_t>(p.tensors.size()));
  for (const auto& t : p.tensors) {
    write_pod(out, static_cast<uint16_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod(out, static_cast<uint8_t>(t.component));
    write_pod(out, static_cast<int32_t>(t.layer));
    write_pod(out, static_cast<uint32_t>(t.value.rows()));
    write_pod(out, static_cast<uint32_t>(t.value.cols()));
    out.write(reinterpret_cast<const char*>(t.value.data()),
              static_cast<std::streamsize>(sizeof(float) * t.value.size()));
  }
  out.flush();
  if (!out) throw IoError("checkpoint write failed: " + path);
}

ParamSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a checkpoint file");
  uint32_t version = read_pod<uint32_t>(in);
  if (version != kVersion) throw IoError("unsupported checkpoint version");
  uint32_t mlen = read_pod<uint32_t>(in);
  std::string ms(mlen, '\0');
  in.read(ms.data(), mlen);
  if (!in) throw IoError("checkpoint truncated");
  nlohmann::json meta = nlohmann::json::parse(ms);
  ParamSet p;
  p.config = meta.at("config").get<ModelConfig>();
  p.provenance = meta.value("provenance", nlohmann::json::object());
  uint32_t n = read_pod<uint32_t>(in);
  p.tensors.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    auto& t = p.tensors[i];
    uint16_t nlen = read_pod<uint16_t>(in);
    t.name.resize(nlen);
    in.read(t.name.data(), nlen);
    uint8_t comp = read_pod<uint8_t>(in);
    if (comp > static_cast<uint8_t>(Component::kHead))
      throw IoError("bad component tag in checkpoint");
    t.component = static_cast<Component>(comp);
    t.layer = read_pod<int32_t>(in);
    t.head = head_from_name(t.name);
    uint32_t rows = read_pod<uint32_t>(in);
    uint32_t cols = read_pod<uint32_t>(in);
    t.value.resize(rows, cols);
    in.read(reinterpret_cast<char*>(t.value.data()),
            static_cast<std::streamsize>(sizeof(float) * t.value.size()));
    if (!in) throw IoError("checkpoint truncated");
  }
  return p;
}

}  // namespace procseed
