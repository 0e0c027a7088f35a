#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "detective/excerpt.hpp"

namespace detective::corpus {

struct RawBook {
  std::string book_id;
  std::string title;
  std::string author;
  std::string body;
};

enum class BookRole { Base, Unseen };

struct ManifestEntry {
  std::string book_id;
  std::string title;
  std::string author;
  std::filesystem::path path;  // resolved against the manifest directory
  BookRole role = BookRole::Base;
};

/// Reads a corpus manifest: a JSON array of {book_id, title, author, path, role}.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path);

RawBook load_book(const ManifestEntry& entry);

/// Removes the Project Gutenberg header/footer and heading-like lines, then
/// normalizes whitespace: paragraphs become single lines separated by one
/// blank line.
std::string strip_boilerplate(const RawBook& raw);

/// Splits a cleaned body into full-stop-terminated excerpts of at least
/// `target_words` words. Only '.' ends a sentence. The last chunk may be
/// shorter; an unterminated tail is dropped.
std::vector<Excerpt> chunk_text(std::string_view book_id, std::string_view body,
                                std::size_t target_words = 100);

/// The '.'-terminated sentences of a body, whitespace-collapsed, in order.
std::vector<std::string> split_sentences(std::string_view body);

/// Character-length summary. std_chars is the population deviation.
struct LengthStats {
  std::size_t n = 0;
  double mean_chars = 0.0;
  double std_chars = 0.0;
  std::size_t min_chars = 0;
  std::size_t max_chars = 0;
};

LengthStats length_stats(const std::vector<Excerpt>& excerpts);

struct TruncationRange {
  std::size_t min_chars = 450;
  std::size_t max_chars = 675;
};

struct BalanceOptions {
  /// nullopt disables the truncation step.
  std::optional<TruncationRange> truncation = TruncationRange{};
  double outlier_sigmas = 2.0;
  int max_outlier_passes = 5;
  double max_mean_gap = 10.0;
  double max_std_ratio = 1.5;
};

struct BalanceResult {
  std::vector<Excerpt> human;
  std::vector<Excerpt> ai;
  LengthStats human_before;
  LengthStats ai_before;
  LengthStats human_after;
  LengthStats ai_after;
};

/// Cuts human excerpts at the full stop nearest a random target length,
/// then drops per-class length outliers. Throws BalanceFailed when the
/// resulting classes are still distinguishable by length.
BalanceResult balance_lengths(const std::vector<Excerpt>& human, const std::vector<Excerpt>& ai,
                              std::uint64_t seed, const BalanceOptions& options = {});

/// Truncates `text` after the '.' whose prefix length (in code points) is
/// closest to target_chars. Text without a '.' is returned unchanged.
std::string truncate_at_nearest_stop(std::string_view text, std::size_t target_chars);

/// Equal-count mix of human and ai excerpts, shuffled by seed.
Dataset assemble_dataset(std::string name, const std::vector<Excerpt>& human,
                         const std::vector<Excerpt>& ai, std::uint64_t seed,
                         std::string provenance = {});

}  // namespace detective::corpus
