#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "icq/corpus.hpp"

namespace icq {

struct Token {
  std::string surface;  // NFC-normalized text as it appeared
  std::string lower;    // case-folded surface
  bool is_alpha = false;        // letters only, apostrophes allowed (so "n't" counts)
  bool is_capitalized = false;  // first code point is upper or title case

  bool operator==(const Token&) const = default;
};

struct TokenizedInstance {
  std::string id;
  std::vector<Token> premise_tokens;
  std::vector<Token> hypothesis_tokens;

  bool operator==(const TokenizedInstance&) const = default;
};

struct TokenizerConfig {
  /// Split clitics: "isn't" -> is + n't, "John's" -> John + 's, "they're" -> they + 're.
  bool split_contractions = true;
};

/// Whitespace and punctuation tokenization over NFC text. Digits joined by a
/// single '.' or ',' stay one token ("3.5", "1,000"). Apostrophes inside a
/// word stay with it until contraction splitting.
std::vector<Token> tokenize_text(std::string_view text, const TokenizerConfig& config = {});

TokenizedInstance tokenize(const Instance& instance, const TokenizerConfig& config = {});

/// NFC + Unicode case folding, with U+2019 mapped to an ASCII apostrophe.
/// Same transform that produces Token::lower.
std::string case_fold(std::string_view text);

}  // namespace icq
