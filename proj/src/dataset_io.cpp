#include "procseed/dataset_io.hpp"

#include <cstring>
#include <vector>

#include "procseed/errors.hpp"

namespace procseed {

namespace {

constexpr char kMagic[4] = {'P', 'D', 'S', '1'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("dataset file truncated");
  return v;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string& path, const DatasetHeader& header)
    : out_(path, std::ios::binary | std::ios::trunc) {
  if (!out_) throw IoError("cannot open dataset for writing: " + path);
  nlohmann::json h = {{"meta", header.meta}, {"vocab", header.vocab}};
  std::string hs = h.dump();
  out_.write(kMagic, 4);
  write_pod(out_, kVersion);
  write_pod(out_, static_cast<uint32_t>(hs.size()));
  out_.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  count_pos_ = out_.tellp();
  write_pod(out_, uint64_t{0});
}

void DatasetWriter::add(const ProcSample& s) {
  if (closed_) throw IoError("dataset writer already closed");
  if (s.tokens.size() != s.loss_mask.size())
    throw ConfigError("sample token/mask length mismatch");
  write_pod(out_, static_cast<uint32_t>(s.tokens.size()));
  for (TokenId t : s.tokens) {
    if (t < 0 || t > 0xffff) throw ConfigError("token id does not fit the record format");
    write_pod(out_, static_cast<uint16_t>(t));
  }
  std::vector<uint8_t> bits((s.tokens.size() + 7) / 8, 0);
  for (size_t i = 0; i < s.loss_mask.size(); ++i)
    if (s.loss_mask[i]) bits[i / 8] |= static_cast<uint8_t>(1u << (i % 8));
  out_.write(reinterpret_cast<const char*>(bits.data()),
             static_cast<std::streamsize>(bits.size()));
  ++count_;
}

void DatasetWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.seekp(count_pos_);
  write_pod(out_, count_);
  out_.flush();
  if (!out_) throw IoError("dataset write failed");
  out_.close();
}

DatasetWriter::~DatasetWriter() {
  try {
    close();
  } catch (...) {
  }
}

DatasetReader::DatasetReader(const std::string& path) : in_(path, std::ios::binary) {
  if (!in_) throw IoError("cannot open dataset: " + path);
  char magic[4];
  in_.read(magic, 4);
  if (!in_ || std::memcmp(magic, kMagic, 4) != 0) throw IoError("not a dataset file");
  uint32_t version = read_pod<uint32_t>(in_);
  if (version != kVersion) throw IoError("unsupported dataset version");
  uint32_t hlen = read_pod<uint32_t>(in_);
  std::string hs(hlen, '\0');
  in_.read(hs.data(), hlen);
  if (!in_) throw IoError("dataset file truncated");
  nlohmann::json h = nlohmann::json::parse(hs);
  header_.meta = h.at("meta");
  header_.vocab = h.at("vocab").get<VocabSpec>();
  count_ = read_pod<uint64_t>(in_);
  first_record_ = in_.tellg();
}

bool DatasetReader::next(ProcSample& s) {
  if (read_ >= count_) return false;
  uint32_t n = read_pod<uint32_t>(in_);
  s.tokens.resize(n);
  for (uint32_t i = 0; i < n; ++i) s.tokens[i] = read_pod<uint16_t>(in_);
  std::vector<uint8_t> bits((n + 7) / 8);
  in_.read(reinterpret_cast<char*>(bits.data()), static_cast<std::streamsize>(bits.size()));
  if (!in_) throw IoError("dataset file truncated");
  s.loss_mask.resize(n);
  for (uint32_t i = 0; i < n; ++i)
    s.loss_mask[i] = (bits[i / 8] >> (i % 8)) & 1;
  s.source_tag = header_.meta.is_object()
                     ? header_.meta.value("tag", std::string{})
                     : std::string{};
  ++read_;
  return true;
}

void DatasetReader::reset() {
  in_.clear();
  in_.seekg(first_record_);
  read_ = 0;
}

}  // namespace procseed
