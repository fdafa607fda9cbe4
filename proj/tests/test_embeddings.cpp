#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "promptrel/promptrel.hpp"
#include "support.hpp"

using Catch::Matchers::ContainsSubstring;
namespace pr = promptrel;
using testsupport::TempDir;

TEST_CASE("embedding lookup tries exact case then ASCII lowercase") {
  pr::EmbeddingTable table(2);
  table.insert("Paris", {1.0, 0.0});
  table.insert("cat", {0.0, 1.0});

  auto exact = table.lookup("Paris");
  REQUIRE(exact);
  CHECK(*exact->word == "Paris");

  auto lowered = table.lookup("CAT");
  REQUIRE(lowered);
  CHECK(*lowered->word == "cat");
  CHECK((*lowered->vec)[1] == 1.0);

  // Exact match wins even when a lowercase variant exists.
  table.insert("paris", {0.5, 0.5});
  auto both = table.lookup("Paris");
  REQUIRE(both);
  CHECK(*both->word == "Paris");

  CHECK_FALSE(table.lookup("dog"));
  CHECK(table.find_exact("cat") != nullptr);
  CHECK(table.find_exact("CAT") == nullptr);
}

TEST_CASE("embedding insert keeps the first vector for a repeated word") {
  pr::EmbeddingTable table(1);
  CHECK(table.insert("w", {1.0}));
  CHECK_FALSE(table.insert("w", {2.0}));
  CHECK((*table.lookup("w")->vec)[0] == 1.0);
  CHECK(table.vocab_size() == 1);
  CHECK_THROWS(table.insert("short", {1.0, 2.0}));
}

TEST_CASE("text embedding loader parses header and rows") {
  TempDir dir;
  auto path = dir / "emb.txt";
  pr::detail::write_file(path,
                         "3 4\n"
                         "the 0.5 -0.25 0 1\n"
                         "cat 1 2 3 4\n"
                         "New_York 9 9 9 9\n");
  pr::EmbeddingTable table = pr::load_embeddings_text(path);
  CHECK(table.dim() == 4);
  // Underscore entries (multiword phrases) are filtered at load.
  CHECK(table.vocab_size() == 2);
  CHECK_FALSE(table.lookup("New_York"));
  CHECK(*table.lookup("the")->vec ==
        std::vector<double>{0.5, -0.25, 0.0, 1.0});
  CHECK(table.parameter_count() == 8);
}

TEST_CASE("text embedding loader rejects malformed input") {
  TempDir dir;
  auto path = dir / "emb.txt";

  pr::detail::write_file(path, "not a header\nx 1\n");
  CHECK_THROWS_WITH(pr::load_embeddings_text(path),
                    ContainsSubstring("malformed header"));

  pr::detail::write_file(path, "1 3\nword 1 2\n");
  CHECK_THROWS_WITH(
      pr::load_embeddings_text(path),
      ContainsSubstring("dimension mismatch for word 'word'"));

  pr::detail::write_file(path, "1 2\nword 1 oops\n");
  CHECK_THROWS_WITH(pr::load_embeddings_text(path),
                    ContainsSubstring("non-numeric component 'oops'"));

  pr::detail::write_file(path, "3 2\nword 1 2\n");
  CHECK_THROWS_WITH(pr::load_embeddings_text(path),
                    ContainsSubstring("declares 3 words but file has 1"));
}

TEST_CASE("binary embeddings round-trip byte for byte") {
  TempDir dir;
  pr::EmbeddingTable table(3);
  table.insert("alpha", {0.5, -1.25, 3.0});
  table.insert("beta", {1e-3, 0.0, -0.0});
  table.insert("gamma", {123.456, -7.0, 0.125});
  // float32 values exactly as the loader will see them
  auto narrowed = [](pr::EmbeddingTable t) {
    pr::EmbeddingTable out(t.dim());
    for (std::size_t w = 0; w < t.vocab_size(); ++w) {
      std::vector<double> vec;
      for (double v : t.vector_at(w)) {
        vec.push_back(static_cast<double>(static_cast<float>(v)));
      }
      out.insert(t.words()[w], std::move(vec));
    }
    return out;
  };
  table = narrowed(table);

  auto path = dir / "emb.bin";
  pr::write_embeddings_binary(table, path);
  pr::EmbeddingTable loaded = pr::load_embeddings_binary(path);
  REQUIRE(loaded.vocab_size() == table.vocab_size());
  CHECK(loaded.words() == table.words());
  for (std::size_t w = 0; w < table.vocab_size(); ++w) {
    CHECK(loaded.vector_at(w) == table.vector_at(w));
  }

  auto again = dir / "again.bin";
  pr::write_embeddings_binary(loaded, again);
  CHECK(pr::detail::read_file(again) == pr::detail::read_file(path));
}

TEST_CASE("binary loader accepts per-record newlines and filters phrases") {
  TempDir dir;
  auto path = dir / "emb.bin";
  auto float_le = [](float f) {
    std::uint32_t u = std::bit_cast<std::uint32_t>(f);
    std::string s;
    s += static_cast<char>(u & 0xFF);
    s += static_cast<char>((u >> 8) & 0xFF);
    s += static_cast<char>((u >> 16) & 0xFF);
    s += static_cast<char>((u >> 24) & 0xFF);
    return s;
  };
  std::string data = "2 2\n";
  data += "cat " + float_le(1.0f) + float_le(2.0f) + "\n";
  data += "New_York " + float_le(9.0f) + float_le(9.0f) + "\n";
  pr::detail::write_file(path, data);
  pr::EmbeddingTable table = pr::load_embeddings_binary(path);
  CHECK(table.vocab_size() == 1);
  CHECK(table.vector_at(0) == std::vector<double>{1.0, 2.0});
}

TEST_CASE("binary loader reports truncation with byte counts") {
  TempDir dir;
  auto path = dir / "emb.bin";
  pr::detail::write_file(path, "1 2\nword \x01\x02");
  CHECK_THROWS_WITH(
      pr::load_embeddings_binary(path),
      ContainsSubstring("expected 8 vector bytes for word 'word', only 2"));

  pr::detail::write_file(path, "2 1\nword \x01\x02\x03\x04");
  CHECK_THROWS_WITH(pr::load_embeddings_binary(path),
                    ContainsSubstring("record 2 is incomplete"));

  pr::detail::write_file(path, "no header");
  CHECK_THROWS_WITH(pr::load_embeddings_binary(path),
                    ContainsSubstring("missing header"));

  std::string extra = "1 1\nword \x01\x02\x03\x04rest";
  pr::detail::write_file(path, extra);
  CHECK_THROWS_WITH(pr::load_embeddings_binary(path),
                    ContainsSubstring("unexpected trailing bytes"));
}

TEST_CASE("IDF counts a word once per sentence") {
  // 4 sentences; "the" in all 4, "cat" in 2, "dog" in 1 (twice in that one).
  pr::SegmentedCorpus corpus = pr::make_corpus({
      {{"the", "cat"}, {"the", "cat"}},
      {{"the", "dog", "dog"}, {"the"}},
  });
  pr::IdfTable idf = pr::build_idf(corpus);
  CHECK(idf.n_sentences() == 4);
  const double n = 4.0;
  CHECK(*idf.find("the") == Catch::Approx(std::log(n / 5.0)).epsilon(1e-12));
  CHECK(*idf.find("cat") == Catch::Approx(std::log(n / 3.0)).epsilon(1e-12));
  CHECK(*idf.find("dog") == Catch::Approx(std::log(n / 2.0)).epsilon(1e-12));
  // A word in every sentence goes negative and stays that way.
  CHECK(*idf.find("the") < 0.0);
  // Unseen words score as if absent from every sentence: ln(N/1).
  CHECK(idf.value_or_unseen("zebra") ==
        Catch::Approx(std::log(n)).epsilon(1e-12));
  CHECK_FALSE(idf.find("zebra"));

  pr::SegmentedCorpus empty;
  CHECK_THROWS(pr::build_idf(empty));
}

TEST_CASE("weights save and load reproduce values exactly") {
  TempDir dir;
  pr::WeightTable weights;
  weights.insert("a", 1.0);
  weights.insert("b", -1.3099999999999998);
  weights.insert("c", 0.1 + 0.2);  // not representable as a short decimal
  weights.insert("d", 3.0);

  auto path = dir / "weights.tsv";
  pr::save_weights(weights, path);
  pr::WeightTable loaded = pr::load_weights(path);
  CHECK(loaded == weights);
  CHECK(loaded.at("c") == 0.1 + 0.2);
  CHECK(loaded.parameter_count() == 4);

  // Serialization is stable: saving the loaded table is byte-identical.
  auto again = dir / "again.tsv";
  pr::save_weights(loaded, again);
  CHECK(pr::detail::read_file(again) == pr::detail::read_file(path));

  pr::detail::write_file(path, "a\t1.0\na\t2.0\n");
  CHECK_THROWS_WITH(pr::load_weights(path),
                    ContainsSubstring(":2: duplicate word 'a'"));
  pr::detail::write_file(path, "a\tnot-a-number\n");
  CHECK_THROWS_WITH(pr::load_weights(path),
                    ContainsSubstring("unparseable weight 'not-a-number'"));
}

TEST_CASE("weight table lookups") {
  pr::WeightTable weights;
  weights.insert("w", 2.5);
  CHECK(weights.at("w") == 2.5);
  CHECK(*weights.find("w") == 2.5);
  CHECK_FALSE(weights.find("x"));
  CHECK_THROWS_WITH(weights.at("x"), ContainsSubstring("no weight for word 'x'"));
  CHECK_THROWS_WITH(weights.insert("w", 1.0),
                    ContainsSubstring("duplicate word 'w'"));
}

TEST_CASE("ones_like covers the embedding vocabulary with weight 1") {
  pr::EmbeddingTable emb(2);
  emb.insert("a", {1, 0});
  emb.insert("b", {0, 1});
  pr::WeightTable weights = pr::WeightTable::ones_like(emb);
  CHECK(weights.size() == 2);
  CHECK(weights.at("a") == 1.0);
  CHECK(weights.at("b") == 1.0);
  CHECK(weights.words() == emb.words());
}

TEST_CASE("IDF table round-trips with its #N= header") {
  TempDir dir;
  pr::SegmentedCorpus corpus = pr::make_corpus({
      {{"a", "b"}, {"a", "c"}},
      {{"b"}},
  });
  pr::IdfTable idf = pr::build_idf(corpus);
  auto path = dir / "idf.tsv";
  pr::save_idf(idf, path);

  std::string data = pr::detail::read_file(path);
  CHECK(data.starts_with("#N=3\n"));

  pr::IdfTable loaded = pr::load_idf(path);
  CHECK(loaded.n_sentences() == 3);
  CHECK(loaded.size() == idf.size());
  for (std::size_t i = 0; i < idf.size(); ++i) {
    CHECK(loaded.words()[i] == idf.words()[i]);
    CHECK(loaded.value_at(i) == idf.value_at(i));
  }

  pr::detail::write_file(path, "a\t1.0\n");
  CHECK_THROWS_WITH(pr::load_idf(path),
                    ContainsSubstring("missing '#N=<sentence_count>' header"));
  pr::detail::write_file(path, "#N=zero\na\t1.0\n");
  CHECK_THROWS_WITH(pr::load_idf(path),
                    ContainsSubstring("invalid sentence count"));
  // Body errors report physical line numbers, counting the header.
  pr::detail::write_file(path, "#N=3\na\t1.0\na\t2.0\n");
  CHECK_THROWS_WITH(pr::load_idf(path),
                    ContainsSubstring(":3: duplicate word 'a'"));
}

TEST_CASE("shortest round-trip formatting survives parse") {
  for (double v : {0.1, -1.31, 3.32, 1e-300, 123456.789, 0.0, 2.5e-10}) {
    std::string s = pr::detail::format_double(v);
    double back;
    REQUIRE(pr::detail::parse_double(s, back));
    CHECK(back == v);
  }
  double out;
  CHECK_FALSE(pr::detail::parse_double("1.0extra", out));
  CHECK_FALSE(pr::detail::parse_double("", out));
  CHECK_FALSE(pr::detail::parse_double("nan", out));
  CHECK_FALSE(pr::detail::parse_double("inf", out));
}
