#include <doctest.h>

#include "sstories/text.hpp"

using namespace sstories::text;
using V = std::vector<std::string>;

TEST_CASE("word_tokenize lowercases letter runs and keeps inner apostrophes") {
  CHECK(word_tokenize("Once upon a TIME, Lily's dog didn't bark.") ==
        V{"once", "upon", "a", "time", "lily's", "dog", "didn't", "bark"});
  CHECK(word_tokenize("rock'n'roll 'quoted' dogs'") == V{"rock'n'roll", "quoted", "dogs"});
  CHECK(word_tokenize("abc123def 4 5") == V{"abc", "def"});
  CHECK(word_tokenize("   ").empty());
  // curly apostrophe is kept as a straight one
  CHECK(word_tokenize("it\xE2\x80\x99s") == V{"it's"});
  CHECK(word_tokenize("Caf\xC3\x89 na\xC3\xAFve") == V{"caf\xC3\xA9", "na\xC3\xAFve"});
}

TEST_CASE("tag_tokenize splits punctuation and keeps digits") {
  CHECK(tag_tokenize("\"Hi,\" said Mia's 2 cats.") == V{"\"", "Hi", ",", "\"", "said", "Mia's", "2", "cats", "."});
  CHECK(tag_tokenize("wait...") == V{"wait", ".", ".", "."});
}

TEST_CASE("utf8 round trip") {
  const std::string s = "a\xC3\xA9\xE2\x80\x9C\xF0\x9F\x98\x80";
  const auto u = decode_utf8(s);
  CHECK(u.size() == 4);
  CHECK(u[3] == 0x1F600);
  CHECK(encode_utf8(u) == s);
}

TEST_CASE("normalize_quotes maps typographic quotes to ASCII") {
  CHECK(normalize_quotes("\xE2\x80\x9CThe End.\xE2\x80\x9D it\xE2\x80\x99s") == "\"The End.\" it's");
}

TEST_CASE("trim and collapse_whitespace") {
  CHECK(trim("  a b \n") == "a b");
  CHECK(trim("") == "");
  CHECK(collapse_whitespace(" a \n\n b\t c ") == "a b c");
}

TEST_CASE("split_sentences breaks after terminal punctuation followed by space") {
  CHECK(split_sentences("One. Two! Three? Four") == V{"One.", "Two!", "Three?", "Four"});
  CHECK(split_sentences("Dr.Who stays. 3.5 too.") == V{"Dr.Who stays.", "3.5 too."});
  CHECK(split_sentences("").empty());
  CHECK(split_sentences("He asked, \"Why?\" She left.") == V{"He asked, \"Why?\"", "She left."});
  CHECK(split_sentences("(It rained.) Then \u201cgo!\u201d") == V{"(It rained.)", "Then \u201cgo!\u201d"});
}

TEST_CASE("is_ascii_clean allows printable ASCII and common whitespace") {
  CHECK(is_ascii_clean("Hello, world!\n\tOk"));
  CHECK_FALSE(is_ascii_clean("caf\xC3\xA9"));
  CHECK_FALSE(is_ascii_clean(std::string("a\x01", 2)));
}

TEST_CASE("is_word_token") {
  CHECK(is_word_token("abc"));
  CHECK(is_word_token("42"));
  CHECK_FALSE(is_word_token(","));
}
