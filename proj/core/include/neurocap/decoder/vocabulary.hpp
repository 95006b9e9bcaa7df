#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace neurocap {

using TokenId = std::size_t;
/// Caption content tokens. Begin/end sentinels are implied by the model and
/// never stored here.
using TokenSequence = std::vector<TokenId>;
using Sentence = std::vector<std::string>;

/// Token <-> index bijection with three reserved entries at fixed indices.
class Vocabulary {
 public:
  static constexpr TokenId kBos = 0;
  static constexpr TokenId kEos = 1;
  static constexpr TokenId kUnk = 2;
  static constexpr std::string_view kBosToken = "<bos>";
  static constexpr std::string_view kEosToken = "<eos>";
  static constexpr std::string_view kUnkToken = "<unk>";

  /// Reserved tokens only.
  Vocabulary();
  /// Full token list, reserved tokens first in BOS, EOS, UNK order.
  /// Throws DataError on duplicates or misplaced reserved tokens.
  static Vocabulary from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  /// Index of `token`, or kUnk.
  TokenId id(std::string_view token) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  TokenSequence encode(std::span<const std::string> words) const;
  Sentence decode(const TokenSequence& ids) const;
  std::string join(const TokenSequence& ids) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  explicit Vocabulary(std::vector<std::string> tokens, bool);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Keeps tokens whose corpus count is strictly greater than `min_count`,
/// ordered by descending count, then lexicographically, after the reserved
/// tokens. Corpus occurrences of reserved spellings are ignored.
Vocabulary build_vocabulary(std::span<const Sentence> corpus, std::size_t min_count);

/// Lower-cases and splits on whitespace; a trailing period is dropped.
Sentence tokenize(std::string_view text);

/// One token per line, line number = index.
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

}  // namespace neurocap
