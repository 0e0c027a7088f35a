#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace detective {

enum class Label : std::uint8_t { Human = 0, Ai = 1 };
enum class Origin : std::uint8_t { NovelChunk, Rewrite, PromptOnly };

std::string_view to_string(Label label) noexcept;
std::string_view to_string(Origin origin) noexcept;
Label parse_label(std::string_view s);
Origin parse_origin(std::string_view s);

/// One labeled chunk of text. char_len counts code points, word_count
/// counts whitespace-delimited tokens; both are kept in sync with text by
/// make_excerpt / with_text.
struct Excerpt {
  std::string excerpt_id;
  std::string text;
  Label label = Label::Human;
  Origin origin = Origin::NovelChunk;
  std::optional<std::string> source_excerpt_id;
  std::size_t char_len = 0;
  std::size_t word_count = 0;

  bool operator==(const Excerpt&) const = default;
};

Excerpt make_excerpt(std::string id, std::string text, Origin origin,
                     std::optional<std::string> source = std::nullopt);

/// Same excerpt with replaced text and refreshed length fields.
Excerpt with_text(const Excerpt& ex, std::string text);

/// Throws Error(Parse) when an excerpt breaks a field invariant.
void validate_excerpt(const Excerpt& ex);

struct Dataset {
  std::string name;
  std::vector<Excerpt> excerpts;
  std::uint64_t seed = 0;
  std::string provenance;

  std::size_t count(Label label) const noexcept;
};

// JSONL interchange: one excerpt per line with exactly the fields
// excerpt_id, text, label, origin, source_excerpt_id, char_len, word_count.
std::string excerpt_to_json_line(const Excerpt& ex);
Excerpt excerpt_from_json_line(std::string_view line);

void write_jsonl(std::ostream& out, const std::vector<Excerpt>& excerpts);
void write_jsonl(const std::filesystem::path& path, const std::vector<Excerpt>& excerpts);
std::vector<Excerpt> read_jsonl(std::istream& in);
std::vector<Excerpt> read_jsonl(const std::filesystem::path& path);

/// Dataset named after the file stem.
Dataset load_dataset(const std::filesystem::path& path);

/// Order-sensitive digest over ids, labels and texts.
std::string dataset_fingerprint(const std::vector<Excerpt>& excerpts);

}  // namespace detective
