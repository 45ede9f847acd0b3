#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "procseed/sample.hpp"
#include "procseed/vocab.hpp"

namespace procseed {

// Dataset container: magic "PDS1", format version, a JSON header holding
// the producing config and the vocab, a record count, then length-prefixed
// records of u16 token ids plus an LSB-first packed loss-mask bitset.
// All integers little-endian.
struct DatasetHeader {
  // {"gen": ...} or {"task": ...} plus free-form keys such as "tag".
  nlohmann::json meta = nlohmann::json::object();
  VocabSpec vocab;
};

class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, const DatasetHeader& header);
  ~DatasetWriter();
  DatasetWriter(const DatasetWriter&) = delete;
  DatasetWriter& operator=(const DatasetWriter&) = delete;

  void add(const ProcSample& s);
  // Patches the record count and closes the file. Called by the destructor
  // if not called explicitly; throws only when called explicitly.
  void close();

  uint64_t written() const { return count_; }

 private:
  std::ofstream out_;
  std::streampos count_pos_;
  uint64_t count_ = 0;
  bool closed_ = false;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  const DatasetHeader& header() const { return header_; }
  uint64_t size() const { return count_; }

  // Returns false at end of file.
  bool next(ProcSample& s);
  void reset();

 private:
  std::ifstream in_;
  DatasetHeader header_;
  uint64_t count_ = 0;
  uint64_t read_ = 0;
  std::streampos first_record_;
};

}  // namespace procseed
