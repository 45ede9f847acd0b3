#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "procseed/errors.hpp"
#include "procseed/ingest.hpp"

namespace procseed {
namespace {

namespace fs = std::filesystem;

TEST(BuildCharMap, SortedDistinctBytesGetDenseIds) {
  CharMap m = build_char_map("banana");
  ASSERT_EQ(m.size(), 3);
  EXPECT_EQ(m.to_id.at('a'), 0);
  EXPECT_EQ(m.to_id.at('b'), 1);
  EXPECT_EQ(m.to_id.at('n'), 2);
  EXPECT_EQ(m.vocab().size, 3);

  CharMap empty = build_char_map("");
  EXPECT_EQ(empty.size(), 0);
}

TEST(MapChars, SkipDropsUnknownBytesAndErrorThrows) {
  CharMap m = build_char_map("abc");
  std::vector<TokenId> ids = map_chars("cab", m, OnUnmappable::kError);
  EXPECT_EQ(ids, (std::vector<TokenId>{2, 0, 1}));

  EXPECT_EQ(map_chars("a!b!c", m, OnUnmappable::kSkip),
            (std::vector<TokenId>{0, 1, 2}));
  EXPECT_THROW(map_chars("a!b", m, OnUnmappable::kError), ConfigError);
}

TEST(Detokenize, InvertsMapCharsAndRejectsForeignIds) {
  std::string text = "the quick brown fox";
  CharMap m = build_char_map(text);
  std::vector<TokenId> ids = map_chars(text, m, OnUnmappable::kError);
  EXPECT_EQ(detokenize(ids, m), text);

  EXPECT_THROW(detokenize({static_cast<TokenId>(m.size())}, m), ConfigError);
}

TEST(BlocksFromTokens, FixedBlocksWithFullMaskAndDroppedTail) {
  std::vector<TokenId> tokens = {0, 1, 2, 3, 4, 5, 6};
  auto blocks = blocks_from_tokens(tokens, 3);
  ASSERT_EQ(blocks.size(), 2u);
  EXPECT_EQ(blocks[0].tokens, (std::vector<TokenId>{0, 1, 2}));
  EXPECT_EQ(blocks[1].tokens, (std::vector<TokenId>{3, 4, 5}));
  for (const auto& b : blocks) {
    EXPECT_EQ(b.loss_mask, (std::vector<uint8_t>{1, 1, 1}));
    EXPECT_EQ(b.source_tag, "ingest");
  }

  EXPECT_TRUE(blocks_from_tokens({0, 1}, 3).empty());
  EXPECT_THROW(blocks_from_tokens(tokens, 1), ConfigError);
}

class IngestFileTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("procseed_ingest_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string write(const std::string& name, const std::string& content) {
    fs::path p = dir_ / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
  }

  fs::path dir_;
};

TEST_F(IngestFileTest, StreamsBlocksFromDisk) {
  std::string text = "abcabcab";
  std::string path = write("corpus.txt", text);
  CharMap m = build_char_map(text);

  auto stream = ingest_tokens(path, m, 4, OnUnmappable::kError);
  EXPECT_EQ(stream->vocab().size, 3);
  auto samples = take(*stream, 10);
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(detokenize(samples[0].tokens, m), "abca");
  EXPECT_EQ(detokenize(samples[1].tokens, m), "bcab");
}

TEST_F(IngestFileTest, EmptyOrShortFileYieldsEmptyStream) {
  CharMap m = build_char_map("xy");
  auto empty = ingest_tokens(write("empty.txt", ""), m, 4,
                             OnUnmappable::kError);
  EXPECT_TRUE(take(*empty, 5).empty());

  auto short_file = ingest_tokens(write("short.txt", "xy"), m, 4,
                                  OnUnmappable::kError);
  EXPECT_TRUE(take(*short_file, 5).empty());

  EXPECT_THROW(
      ingest_tokens((dir_ / "missing.txt").string(), m, 4,
                    OnUnmappable::kError),
      IoError);
}

TEST(CharMapJson, RoundTripPreservesBytesAndRejectsBadValues) {
  CharMap m = build_char_map("hello\nworld");
  nlohmann::ordered_json j = to_json(m);
  CharMap back = char_map_from_json(j);
  EXPECT_EQ(back.to_id, m.to_id);
  EXPECT_EQ(nlohmann::ordered_json(to_json(back)), j);

  nlohmann::json bad = {{"bytes", {{"300", 0}}}};
  EXPECT_THROW(char_map_from_json(bad), ConfigError);
}

}  // namespace
}  // namespace procseed
