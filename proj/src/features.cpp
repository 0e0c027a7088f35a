#include "detective/features.hpp"

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/text_util.hpp"

namespace detective::features {

namespace {

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t len = 0;
  U8_APPEND_UNSAFE(buf, len, c);
  out.append(buf, static_cast<std::size_t>(len));
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t current_len = 0;
  auto flush = [&] {
    if (current_len >= 2) tokens.push_back(current);
    current.clear();
    current_len = 0;
  };
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c >= 0 && u_isalnum(c)) {
      append_utf8(current, u_tolower(c));
      ++current_len;
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

std::string to_lower(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  const auto* s = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t i = 0;
  while (i < length) {
    const int32_t start = i;
    UChar32 c;
    U8_NEXT(s, i, length, c);
    if (c < 0) {
      out.append(text.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    } else {
      append_utf8(out, u_tolower(c));
    }
  }
  return out;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  std::sort(tokens_.begin(), tokens_.end());
  tokens_.erase(std::unique(tokens_.begin(), tokens_.end()), tokens_.end());
  index_.reserve(tokens_.size());
  for (std::uint32_t i = 0; i < tokens_.size(); ++i) index_.emplace(tokens_[i], i);
}

std::optional<std::uint32_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Vocabulary build_vocabulary(std::span<const std::string> documents) {
  if (documents.empty()) throw Error(ErrorCode::EmptyInput, "no training documents");
  std::vector<std::string> all;
  for (const auto& doc : documents) {
    auto toks = tokenize(doc);
    all.insert(all.end(), std::make_move_iterator(toks.begin()), std::make_move_iterator(toks.end()));
  }
  Vocabulary vocab(std::move(all));
  if (vocab.empty()) throw Error(ErrorCode::EmptyVocabulary, "no token survived tokenization");
  return vocab;
}

void DocTermMatrix::append_row(std::span<const TermCount> row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (row[i].index >= vocab_size_ || row[i].count == 0 || (i > 0 && row[i - 1].index >= row[i].index)) {
      throw Error(ErrorCode::InvalidArgument, "row entries must be sorted, unique, nonzero and in range");
    }
  }
  entries_.insert(entries_.end(), row.begin(), row.end());
  offsets_.push_back(entries_.size());
}

DocTermMatrix DocTermMatrix::select_rows(std::span<const std::size_t> rows) const {
  DocTermMatrix out(vocab_size_);
  for (auto r : rows) {
    auto src = row(r);
    out.entries_.insert(out.entries_.end(), src.begin(), src.end());
    out.offsets_.push_back(out.entries_.size());
  }
  return out;
}

std::vector<TermCount> vectorize_one(std::string_view document, const Vocabulary& vocab) {
  std::vector<std::uint32_t> ids;
  for (const auto& tok : tokenize(document)) {
    if (auto idx = vocab.find(tok)) ids.push_back(*idx);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<TermCount> row;
  for (auto id : ids) {
    if (!row.empty() && row.back().index == id) {
      ++row.back().count;
    } else {
      row.push_back({id, 1});
    }
  }
  return row;
}

DocTermMatrix vectorize(std::span<const std::string> documents, const Vocabulary& vocab) {
  if (vocab.empty()) throw Error(ErrorCode::EmptyVocabulary, "cannot vectorize against an empty vocabulary");
  DocTermMatrix m(vocab.size());
  for (const auto& doc : documents) {
    auto row = vectorize_one(doc, vocab);
    m.append_row(row);
  }
  return m;
}

void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
  write_file_atomic(path, nlohmann::json(vocab.tokens()).dump());
}

Vocabulary load_vocabulary(const std::filesystem::path& path) {
  auto doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) throw Error(ErrorCode::Parse, path.string() + ": expected a JSON array");
  auto tokens = doc.get<std::vector<std::string>>();
  Vocabulary vocab(tokens);
  if (vocab.tokens() != tokens) {
    throw Error(ErrorCode::Parse, path.string() + ": tokens must be unique and lexicographically ordered");
  }
  return vocab;
}

void write_coordinate_list(std::ostream& out, const DocTermMatrix& m) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (const auto& e : m.row(r)) out << r << ' ' << e.index << ' ' << e.count << '\n';
  }
}

DocTermMatrix read_coordinate_list(std::istream& in, std::size_t n_docs, std::size_t vocab_size) {
  std::vector<std::vector<TermCount>> rows(n_docs);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::istringstream ls(line);
    std::size_t doc = 0;
    std::uint32_t idx = 0;
    std::uint32_t count = 0;
    if (!(ls >> doc >> idx >> count) || doc >= n_docs || idx >= vocab_size) {
      throw Error(ErrorCode::Parse, "bad coordinate line '" + line + "'");
    }
    rows[doc].push_back({idx, count});
  }
  DocTermMatrix m(vocab_size);
  for (auto& row : rows) {
    std::sort(row.begin(), row.end(), [](const TermCount& a, const TermCount& b) { return a.index < b.index; });
    m.append_row(row);
  }
  return m;
}

}  // namespace detective::features
