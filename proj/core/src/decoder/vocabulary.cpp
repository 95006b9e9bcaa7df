#include "neurocap/decoder/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {

Vocabulary::Vocabulary()
    : Vocabulary({std::string(kBosToken), std::string(kEosToken), std::string(kUnkToken)},
                 true) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens, bool) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 3 || tokens_[kBos] != kBosToken || tokens_[kEos] != kEosToken ||
      tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary must start with " + std::string(kBosToken) + ", " +
                    std::string(kEosToken) + ", " + std::string(kUnkToken));
  }
  for (TokenId i = 0; i < tokens_.size(); ++i) {
    const std::string& t = tokens_[i];
    if (t.empty() ||
        std::any_of(t.begin(), t.end(), [](unsigned char c) { return std::isspace(c); })) {
      throw DataError("vocabulary token " + std::to_string(i) +
                      " is empty or contains whitespace");
    }
    if (!index_.emplace(t, i).second) throw DataError("duplicate vocabulary token \"" + t + "\"");
  }
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  return Vocabulary(std::move(tokens), true);
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) throw DataError("token index " + std::to_string(id) + " out of range");
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnk); }

TokenSequence Vocabulary::encode(std::span<const std::string> words) const {
  TokenSequence ids;
  ids.reserve(words.size());
  for (const std::string& w : words) ids.push_back(id(w));
  return ids;
}

Sentence Vocabulary::decode(const TokenSequence& ids) const {
  Sentence words;
  words.reserve(ids.size());
  for (TokenId i : ids) words.push_back(token(i));
  return words;
}

std::string Vocabulary::join(const TokenSequence& ids) const {
  std::string out;
  for (TokenId i : ids) {
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

Vocabulary build_vocabulary(std::span<const Sentence> corpus, std::size_t min_count) {
  if (min_count < 1) throw ConfigError("build_vocabulary: min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const Sentence& s : corpus)
    for (const std::string& w : s) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, count] : counts) {
    if (count > min_count && word != Vocabulary::kBosToken && word != Vocabulary::kEosToken &&
        word != Vocabulary::kUnkToken) {
      kept.emplace_back(word, count);
    }
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{std::string(Vocabulary::kBosToken),
                                  std::string(Vocabulary::kEosToken),
                                  std::string(Vocabulary::kUnkToken)};
  for (auto& [word, count] : kept) tokens.push_back(word);
  return Vocabulary::from_tokens(std::move(tokens));
}

Sentence tokenize(std::string_view text) {
  Sentence words;
  std::string current;
  auto flush = [&] {
    if (!current.empty() && current.back() == '.') current.pop_back();
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  flush();
  return words;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  std::string out;
  for (const std::string& t : vocab.tokens()) {
    out += t;
    out += '\n';
  }
  write_file_atomic(path, out);
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  try {
    return Vocabulary::from_tokens(std::move(tokens));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace neurocap
