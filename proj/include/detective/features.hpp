#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace detective::features {

/// Lowercased maximal runs of Unicode letters/digits; runs shorter than two
/// code points are dropped. "Poirot's" yields "poirot" only.
std::vector<std::string> tokenize(std::string_view text);

/// Per-code-point simple lowercase mapping; invalid UTF-8 bytes pass through.
std::string to_lower(std::string_view text);

/// Immutable token index. Indices are dense and follow lexicographic
/// (byte-wise UTF-8) token order.
class Vocabulary {
 public:
  Vocabulary() = default;

  /// Takes any token list; sorts and deduplicates it.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }
  std::optional<std::uint32_t> find(std::string_view token) const;
  const std::string& token(std::uint32_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  struct Hash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const noexcept { return std::hash<std::string_view>{}(s); }
  };
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::uint32_t, Hash, std::equal_to<>> index_;
};

/// Throws EmptyInput for no documents, EmptyVocabulary when nothing survives tokenization.
Vocabulary build_vocabulary(std::span<const std::string> documents);

struct TermCount {
  std::uint32_t index;
  std::uint32_t count;

  bool operator==(const TermCount&) const = default;
};

/// Compressed sparse rows of raw term counts. Entries in a row are sorted by
/// index and unique.
class DocTermMatrix {
 public:
  DocTermMatrix() = default;
  explicit DocTermMatrix(std::size_t vocab_size) : vocab_size_(vocab_size) {}

  void append_row(std::span<const TermCount> row);

  std::size_t rows() const noexcept { return offsets_.size() - 1; }
  std::size_t cols() const noexcept { return vocab_size_; }
  std::size_t nnz() const noexcept { return entries_.size(); }

  std::span<const TermCount> row(std::size_t r) const {
    return {entries_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
  }

  /// Rows picked by index, in the given order.
  DocTermMatrix select_rows(std::span<const std::size_t> rows) const;

 private:
  std::size_t vocab_size_ = 0;
  std::vector<std::size_t> offsets_{0};
  std::vector<TermCount> entries_;
};

/// Counts of in-vocabulary tokens per document; unknown tokens are dropped.
DocTermMatrix vectorize(std::span<const std::string> documents, const Vocabulary& vocab);
std::vector<TermCount> vectorize_one(std::string_view document, const Vocabulary& vocab);

// Vocabulary file: JSON array of tokens in index order.
void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary load_vocabulary(const std::filesystem::path& path);

/// Debug interchange: one "doc_idx token_idx count" line per nonzero.
void write_coordinate_list(std::ostream& out, const DocTermMatrix& m);
DocTermMatrix read_coordinate_list(std::istream& in, std::size_t n_docs, std::size_t vocab_size);

}  // namespace detective::features
