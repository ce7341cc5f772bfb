#pragma once
// UTF-8 text utilities shared by every analysis module.
//
// Character classes are table driven (no locale dependency) so that token
// streams, and therefore every metric built on them, are identical across
// machines.

#include <string>
#include <string_view>
#include <vector>

namespace sstories::text {

std::u32string decode_utf8(std::string_view s);
void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view s);

bool is_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_space(char32_t cp);
// ' and the typographic right single quote.
bool is_apostrophe(char32_t cp);
char32_t to_lower(char32_t cp);
bool is_upper(char32_t cp);

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
// Trim, then replace every whitespace run with a single ASCII space.
std::string collapse_whitespace(std::string_view s);
// Curly single/double quotes become their ASCII forms.
std::string normalize_quotes(std::string_view s);

// Lowercased word tokens: maximal letter runs, with apostrophes kept only
// between two letters ("couldn't"). Everything else is a separator.
std::vector<std::string> word_tokenize(std::string_view text);

// Case-preserving tokens for tagging: words (letters, digits, internal
// apostrophes) plus one token per punctuation character.
std::vector<std::string> tag_tokenize(std::string_view text);

// True when the token contains at least one letter or digit.
bool is_word_token(std::string_view token);

// Sentences end at '.', '!' or '?' followed by whitespace or end of text;
// closing quotes or a bracket right after the mark belong to the sentence.
// Returned sentences are trimmed; empty ones are dropped.
std::vector<std::string> split_sentences(std::string_view text);

// Printable ASCII plus tab, LF and CR.
bool is_ascii_clean(std::string_view text);

}  // namespace sstories::text
