#include "detective/excerpt.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/text_util.hpp"

namespace detective {

using nlohmann::json;

std::string_view to_string(Label label) noexcept {
  return label == Label::Ai ? "ai" : "human";
}

std::string_view to_string(Origin origin) noexcept {
  switch (origin) {
    case Origin::NovelChunk: return "novel_chunk";
    case Origin::Rewrite: return "rewrite";
    case Origin::PromptOnly: return "prompt_only";
  }
  return "novel_chunk";
}

Label parse_label(std::string_view s) {
  if (s == "human") return Label::Human;
  if (s == "ai") return Label::Ai;
  throw Error(ErrorCode::Parse, "unknown label '" + std::string(s) + "'");
}

Origin parse_origin(std::string_view s) {
  if (s == "novel_chunk") return Origin::NovelChunk;
  if (s == "rewrite") return Origin::Rewrite;
  if (s == "prompt_only") return Origin::PromptOnly;
  throw Error(ErrorCode::Parse, "unknown origin '" + std::string(s) + "'");
}

Excerpt make_excerpt(std::string id, std::string text, Origin origin,
                     std::optional<std::string> source) {
  Excerpt ex;
  ex.excerpt_id = std::move(id);
  ex.origin = origin;
  ex.label = origin == Origin::NovelChunk ? Label::Human : Label::Ai;
  ex.source_excerpt_id = std::move(source);
  ex.char_len = utf8_length(text);
  ex.word_count = detective::word_count(text);
  ex.text = std::move(text);
  return ex;
}

Excerpt with_text(const Excerpt& ex, std::string text) {
  Excerpt out = ex;
  out.char_len = utf8_length(text);
  out.word_count = detective::word_count(text);
  out.text = std::move(text);
  return out;
}

void validate_excerpt(const Excerpt& ex) {
  auto fail = [&](const std::string& what) {
    throw Error(ErrorCode::Parse, "excerpt '" + ex.excerpt_id + "': " + what);
  };
  if (ex.excerpt_id.empty()) fail("empty excerpt_id");
  if (ex.char_len < 1 || ex.char_len != utf8_length(ex.text)) fail("char_len mismatch");
  if (ex.word_count < 1 || ex.word_count != detective::word_count(ex.text)) fail("word_count mismatch");
  const bool ai_origin = ex.origin != Origin::NovelChunk;
  if ((ex.label == Label::Ai) != ai_origin) fail("label/origin mismatch");
  if (ex.source_excerpt_id.has_value() != (ex.origin == Origin::Rewrite)) {
    fail("source_excerpt_id must be present exactly for rewrites");
  }
  if (ex.origin == Origin::NovelChunk && ex.text.back() != '.') fail("novel chunk must end in '.'");
}

std::size_t Dataset::count(Label label) const noexcept {
  std::size_t n = 0;
  for (const auto& ex : excerpts) n += ex.label == label;
  return n;
}

std::string excerpt_to_json_line(const Excerpt& ex) {
  // Field order is part of the interchange contract, so the object is
  // written by hand rather than through the (sorted) json object type.
  std::string out = "{\"excerpt_id\":" + json(ex.excerpt_id).dump();
  out += ",\"text\":" + json(ex.text).dump();
  out += ",\"label\":" + json(to_string(ex.label)).dump();
  out += ",\"origin\":" + json(to_string(ex.origin)).dump();
  out += ",\"source_excerpt_id\":";
  out += ex.source_excerpt_id ? json(*ex.source_excerpt_id).dump() : "null";
  out += ",\"char_len\":" + std::to_string(ex.char_len);
  out += ",\"word_count\":" + std::to_string(ex.word_count);
  out += "}";
  return out;
}

Excerpt excerpt_from_json_line(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
  try {
    Excerpt ex;
    ex.excerpt_id = j.at("excerpt_id").get<std::string>();
    ex.text = j.at("text").get<std::string>();
    ex.label = parse_label(j.at("label").get<std::string>());
    ex.origin = parse_origin(j.at("origin").get<std::string>());
    const auto& src = j.at("source_excerpt_id");
    if (!src.is_null()) ex.source_excerpt_id = src.get<std::string>();
    ex.char_len = j.at("char_len").get<std::size_t>();
    ex.word_count = j.at("word_count").get<std::size_t>();
    validate_excerpt(ex);
    return ex;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Parse, e.what());
  }
}

void write_jsonl(std::ostream& out, const std::vector<Excerpt>& excerpts) {
  for (const auto& ex : excerpts) out << excerpt_to_json_line(ex) << '\n';
}

void write_jsonl(const std::filesystem::path& path, const std::vector<Excerpt>& excerpts) {
  std::string buf;
  for (const auto& ex : excerpts) {
    buf += excerpt_to_json_line(ex);
    buf += '\n';
  }
  write_file_atomic(path, buf);
}

std::vector<Excerpt> read_jsonl(std::istream& in) {
  std::vector<Excerpt> out;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(excerpt_from_json_line(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!seen.insert(out.back().excerpt_id).second) {
      throw Error(ErrorCode::Parse, "duplicate excerpt_id '" + out.back().excerpt_id + "'");
    }
  }
  return out;
}

std::vector<Excerpt> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_jsonl(in);
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;
  ds.name = path.stem().string();
  ds.excerpts = read_jsonl(path);
  ds.provenance = path.string();
  return ds;
}

std::string dataset_fingerprint(const std::vector<Excerpt>& excerpts) {
  std::string buf;
  for (const auto& ex : excerpts) {
    buf += ex.excerpt_id;
    buf += '\t';
    buf += to_string(ex.label);
    buf += '\t';
    buf += ex.text;
    buf += '\n';
  }
  return sha256_hex(buf);
}

}  // namespace detective
