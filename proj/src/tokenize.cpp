#include "icq/tokenize.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <array>
#include <stdexcept>

namespace icq {
namespace {

constexpr UChar32 kApostrophe = 0x27;
constexpr UChar32 kRightQuote = 0x2019;

bool is_apostrophe(UChar32 c) { return c == kApostrophe || c == kRightQuote; }

bool is_mark(UChar32 c) {
  const auto t = u_charType(c);
  return t == U_NON_SPACING_MARK || t == U_COMBINING_SPACING_MARK || t == U_ENCLOSING_MARK;
}

bool is_word_char(UChar32 c) { return u_isalnum(c) || is_mark(c); }

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) || u_isspace(c) || u_iscntrl(c); }

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const auto* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw std::runtime_error("ICU NFC normalizer unavailable");
  return *n;
}

icu::UnicodeString fold(const icu::UnicodeString& s) {
  icu::UnicodeString out(s);
  out.foldCase(U_FOLD_CASE_DEFAULT);
  out.findAndReplace(icu::UnicodeString(kRightQuote), icu::UnicodeString(kApostrophe));
  return out;
}

Token make_token(const icu::UnicodeString& surface) {
  Token tok;
  surface.toUTF8String(tok.surface);
  fold(surface).toUTF8String(tok.lower);
  bool any_letter = false;
  bool all_letters = true;
  for (int32_t i = 0; i < surface.length();) {
    const UChar32 c = surface.char32At(i);
    if (u_isalpha(c)) {
      any_letter = true;
    } else if (!is_mark(c) && !is_apostrophe(c)) {
      all_letters = false;
    }
    i += U16_LENGTH(c);
  }
  tok.is_alpha = any_letter && all_letters;
  const UChar32 first = surface.char32At(0);
  tok.is_capitalized = u_isupper(first) || u_istitle(first);
  return tok;
}

constexpr std::array<const char16_t*, 6> kClitics{u"s", u"re", u"ll", u"ve", u"d", u"m"};

bool is_clitic(const icu::UnicodeString& folded_suffix) {
  for (const auto* c : kClitics) {
    if (folded_suffix == icu::UnicodeString(c)) return true;
  }
  return false;
}

void emit_word(const icu::UnicodeString& word, const TokenizerConfig& config, std::vector<Token>& out) {
  if (word.isEmpty()) return;
  if (config.split_contractions) {
    const auto folded = fold(word);
    const int32_t n = folded.length();
    if (n > 3 && folded.endsWith(icu::UnicodeString(u"n't"))) {
      out.push_back(make_token(word.tempSubString(0, n - 3)));
      out.push_back(make_token(word.tempSubString(n - 3)));
      return;
    }
    const int32_t p = folded.lastIndexOf(static_cast<char16_t>(kApostrophe));
    if (p > 0 && is_clitic(folded.tempSubString(p + 1))) {
      out.push_back(make_token(word.tempSubString(0, p)));
      out.push_back(make_token(word.tempSubString(p)));
      return;
    }
  }
  out.push_back(make_token(word));
}

}  // namespace

std::vector<Token> tokenize_text(std::string_view text, const TokenizerConfig& config) {
  std::vector<Token> out;
  if (text.empty()) return out;
  UErrorCode status = U_ZERO_ERROR;
  const auto raw = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const auto u = nfc().normalize(raw, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");

  const int32_t len = u.length();
  auto at = [&](int32_t i) -> UChar32 { return i < len ? u.char32At(i) : U_SENTINEL; };

  icu::UnicodeString word;
  UChar32 prev_in_word = U_SENTINEL;
  for (int32_t i = 0; i < len;) {
    const UChar32 c = u.char32At(i);
    const int32_t next = i + U16_LENGTH(c);
    const UChar32 after = at(next);

    if (is_word_char(c)) {
      word.append(c);
      prev_in_word = c;
    } else if (is_apostrophe(c) && after != U_SENTINEL && u_isalpha(after)) {
      if (!word.isEmpty()) {
        word.append(c);
        prev_in_word = c;
      } else {
        // Leading apostrophe: keep it only for a detached clitic like "'s".
        int32_t j = next;
        icu::UnicodeString run;
        while (j < len && u_isalpha(u.char32At(j))) {
          run.append(u.char32At(j));
          j += U16_LENGTH(u.char32At(j));
        }
        if (is_clitic(fold(run))) {
          word.append(c);
          prev_in_word = c;
        } else {
          out.push_back(make_token(icu::UnicodeString(c)));
        }
      }
    } else if ((c == '.' || c == ',') && !word.isEmpty() && u_isdigit(prev_in_word) && after != U_SENTINEL &&
               u_isdigit(after)) {
      word.append(c);
      prev_in_word = c;
    } else {
      emit_word(word, config, out);
      word.remove();
      prev_in_word = U_SENTINEL;
      if (!is_space(c)) out.push_back(make_token(icu::UnicodeString(c)));
    }
    i = next;
  }
  emit_word(word, config, out);
  return out;
}

TokenizedInstance tokenize(const Instance& instance, const TokenizerConfig& config) {
  return TokenizedInstance{instance.id, tokenize_text(instance.premise, config),
                           tokenize_text(instance.hypothesis, config)};
}

std::string case_fold(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const auto raw = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const auto u = nfc().normalize(raw, status);
  if (U_FAILURE(status)) throw std::runtime_error("NFC normalization failed");
  std::string out;
  fold(u).toUTF8String(out);
  return out;
}

}  // namespace icq
