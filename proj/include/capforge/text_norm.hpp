#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace capforge {

/// Normalized caption tokens: lowercase, no whitespace, no boundary
/// punctuation, never empty. Only tokenize() produces instances from
/// raw text; the vector constructor trusts its caller.
class TokenSequence {
 public:
  TokenSequence() = default;
  explicit TokenSequence(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {}
  TokenSequence(std::initializer_list<std::string> tokens) : tokens_(tokens) {}

  const std::vector<std::string>& tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  bool empty() const { return tokens_.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens_[i]; }
  auto begin() const { return tokens_.begin(); }
  auto end() const { return tokens_.end(); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<std::string> tokens_;
};

/// Characters removed when they stand alone or sit at a word boundary.
inline constexpr std::string_view kPunctuation = "!\"#$%&()*+.,-/:;=?@[]^_'{|}~";

bool is_punctuation(char c);

/// Lowercases (ASCII plus the common Latin/Greek/Cyrillic blocks), splits on
/// whitespace and strips boundary punctuation. Interior characters, including
/// apostrophes in contractions, are kept.
TokenSequence tokenize(std::string_view raw);

/// Single-space join. tokenize(detokenize(t)) == t for any tokenize() output.
std::string detokenize(const TokenSequence& tokens);

}  // namespace capforge
