#include "detective/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "detective/error.hpp"
#include "detective/random.hpp"
#include "detective/text_util.hpp"

namespace detective::corpus {

namespace {

bool contains_ci(std::string_view haystack, std::string_view needle) {
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != haystack.end();
}

bool is_start_marker(std::string_view line) {
  return contains_ci(line, "*** START OF") || contains_ci(line, "***START OF");
}

bool is_end_marker(std::string_view line) {
  return contains_ci(line, "*** END OF") || contains_ci(line, "***END OF");
}

bool is_decimal_number(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool is_roman_numeral(std::string_view s) {
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    switch (c) {
      case 'I': case 'V': case 'X': case 'L': case 'C': case 'D': case 'M':
      case 'i': case 'v': case 'x': case 'l': case 'c': case 'd': case 'm':
        return true;
      default:
        return false;
    }
  });
}

bool is_caps_heading(std::string_view s) {
  bool has_upper = false;
  for (char c : s) {
    if (c >= 'a' && c <= 'z') return false;
    if (c >= 'A' && c <= 'Z') has_upper = true;
  }
  return has_upper && word_count(s) <= 6;
}

bool is_heading_line(std::string_view line) {
  auto t = trim(line);
  return is_decimal_number(t) || is_roman_numeral(t) || is_caps_heading(t);
}

std::string format_ordinal(std::string_view book_id, std::size_t ordinal) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%05zu", ordinal);
  return std::string(book_id) + "-" + buf;
}

double std_ratio(const LengthStats& a, const LengthStats& b) {
  double hi = std::max(a.std_chars, b.std_chars);
  double lo = std::min(a.std_chars, b.std_chars);
  if (lo == 0.0) return hi == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return hi / lo;
}

std::vector<Excerpt> remove_outliers(std::vector<Excerpt> items, const BalanceOptions& opt,
                                     std::string_view class_name) {
  for (int pass = 0; pass < opt.max_outlier_passes; ++pass) {
    auto stats = length_stats(items);
    const double lo = stats.mean_chars - opt.outlier_sigmas * stats.std_chars;
    const double hi = stats.mean_chars + opt.outlier_sigmas * stats.std_chars;
    std::vector<Excerpt> kept;
    kept.reserve(items.size());
    for (auto& ex : items) {
      const auto len = static_cast<double>(ex.char_len);
      if (len >= lo && len <= hi) kept.push_back(std::move(ex));
    }
    if (kept.empty()) {
      throw Error(ErrorCode::EmptyAfterFiltering, std::string(class_name) + " class emptied by outlier removal");
    }
    const bool changed = kept.size() != items.size();
    items = std::move(kept);
    if (!changed) break;
  }
  return items;
}

}  // namespace

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& manifest_path) {
  auto doc = nlohmann::json::parse(read_file(manifest_path), nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    throw Error(ErrorCode::Parse, manifest_path.string() + ": manifest must be a JSON array");
  }
  const auto base_dir = manifest_path.parent_path();
  std::vector<ManifestEntry> entries;
  std::unordered_set<std::string> ids;
  for (const auto& item : doc) {
    try {
      ManifestEntry e;
      e.book_id = item.at("book_id").get<std::string>();
      e.title = item.at("title").get<std::string>();
      e.author = item.at("author").get<std::string>();
      std::filesystem::path p = item.at("path").get<std::string>();
      e.path = p.is_absolute() ? p : base_dir / p;
      const auto role = item.at("role").get<std::string>();
      if (role == "base") {
        e.role = BookRole::Base;
      } else if (role == "unseen") {
        e.role = BookRole::Unseen;
      } else {
        throw Error(ErrorCode::Parse, "unknown role '" + role + "'");
      }
      if (!ids.insert(e.book_id).second) {
        throw Error(ErrorCode::Parse, "duplicate book_id '" + e.book_id + "'");
      }
      entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::Parse, manifest_path.string() + ": " + ex.what());
    }
  }
  return entries;
}

RawBook load_book(const ManifestEntry& entry) {
  RawBook book{entry.book_id, entry.title, entry.author, read_file(entry.path)};
  if (book.body.empty()) throw Error(ErrorCode::EmptyInput, entry.path.string() + " is empty");
  return book;
}

std::string strip_boilerplate(const RawBook& raw) {
  if (raw.body.empty()) throw Error(ErrorCode::EmptyInput, "book '" + raw.book_id + "' has an empty body");
  auto lines = split_lines(raw.body);

  bool has_header = false;
  for (std::size_t i = 0; i < lines.size() && i < 50; ++i) {
    if (contains_ci(lines[i], "Project Gutenberg")) {
      has_header = true;
      break;
    }
  }

  std::size_t begin = 0;
  std::size_t end = lines.size();
  if (has_header) {
    auto start = std::find_if(lines.begin(), lines.end(), is_start_marker);
    if (start == lines.end()) {
      throw Error(ErrorCode::MissingStartMarker,
                  "book '" + raw.book_id + "' has a Project Gutenberg header but no START marker");
    }
    begin = static_cast<std::size_t>(start - lines.begin()) + 1;
    auto stop = std::find_if(lines.begin() + static_cast<std::ptrdiff_t>(begin), lines.end(), is_end_marker);
    end = static_cast<std::size_t>(stop - lines.begin());
  }

  std::string out;
  std::string paragraph;
  auto flush = [&] {
    auto p = collapse_whitespace(paragraph);
    paragraph.clear();
    if (p.empty()) return;
    if (!out.empty()) out += "\n\n";
    out += p;
  };
  for (std::size_t i = begin; i < end; ++i) {
    auto line = lines[i];
    if (trim(line).empty()) {
      flush();
      continue;
    }
    if (is_heading_line(line)) continue;
    paragraph += ' ';
    paragraph += line;
  }
  flush();
  return out;
}

std::vector<std::string> split_sentences(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    auto dot = body.find('.', pos);
    if (dot == std::string_view::npos) break;
    auto s = collapse_whitespace(body.substr(pos, dot + 1 - pos));
    out.push_back(std::move(s));
    pos = dot + 1;
  }
  return out;
}

std::vector<Excerpt> chunk_text(std::string_view book_id, std::string_view body, std::size_t target_words) {
  if (target_words < 1) throw Error(ErrorCode::InvalidArgument, "target_words must be >= 1");
  if (body.find('.') == std::string_view::npos) {
    throw Error(ErrorCode::NoSentences, "book '" + std::string(book_id) + "' contains no full stop");
  }

  std::vector<Excerpt> out;
  std::size_t chunk_start = 0;
  std::size_t pos = 0;
  auto emit = [&](std::size_t end) {
    auto text = collapse_whitespace(body.substr(chunk_start, end - chunk_start));
    if (!text.empty()) {
      out.push_back(make_excerpt(format_ordinal(book_id, out.size() + 1), std::move(text), Origin::NovelChunk));
    }
    chunk_start = end;
  };
  while (true) {
    auto dot = body.find('.', pos);
    if (dot == std::string_view::npos) break;
    pos = dot + 1;
    if (word_count(body.substr(chunk_start, pos - chunk_start)) >= target_words) emit(pos);
  }
  // Remaining full-stop-terminated sentences form a short final chunk; the
  // text after the last '.' is dropped.
  if (chunk_start < pos) emit(pos);
  return out;
}

LengthStats length_stats(const std::vector<Excerpt>& excerpts) {
  if (excerpts.empty()) throw Error(ErrorCode::EmptyInput, "length_stats of an empty list");
  LengthStats s;
  s.n = excerpts.size();
  s.min_chars = std::numeric_limits<std::size_t>::max();
  double sum = 0.0;
  for (const auto& ex : excerpts) {
    sum += static_cast<double>(ex.char_len);
    s.min_chars = std::min(s.min_chars, ex.char_len);
    s.max_chars = std::max(s.max_chars, ex.char_len);
  }
  s.mean_chars = sum / static_cast<double>(s.n);
  double ss = 0.0;
  for (const auto& ex : excerpts) {
    const double d = static_cast<double>(ex.char_len) - s.mean_chars;
    ss += d * d;
  }
  s.std_chars = std::sqrt(ss / static_cast<double>(s.n));
  return s;
}

std::string truncate_at_nearest_stop(std::string_view text, std::size_t target_chars) {
  std::size_t best_end = std::string_view::npos;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  std::size_t chars = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if ((c & 0xC0) != 0x80) ++chars;
    if (c != '.') continue;
    const std::size_t dist = chars > target_chars ? chars - target_chars : target_chars - chars;
    if (dist < best_dist) {
      best_dist = dist;
      best_end = i + 1;
    }
    if (chars >= target_chars) break;
  }
  if (best_end == std::string_view::npos) return std::string(text);
  return std::string(trim(text.substr(0, best_end)));
}

BalanceResult balance_lengths(const std::vector<Excerpt>& human, const std::vector<Excerpt>& ai,
                              std::uint64_t seed, const BalanceOptions& options) {
  if (human.empty() || ai.empty()) throw Error(ErrorCode::EmptyInput, "balance_lengths needs both classes");
  if (options.truncation && options.truncation->min_chars > options.truncation->max_chars) {
    throw Error(ErrorCode::InvalidArgument, "truncation range is inverted");
  }

  BalanceResult r;
  r.human_before = length_stats(human);
  r.ai_before = length_stats(ai);

  std::vector<Excerpt> cut;
  cut.reserve(human.size());
  if (options.truncation) {
    Rng rng(seed);
    const auto [lo, hi] = *options.truncation;
    for (const auto& ex : human) {
      const auto target = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi)));
      auto text = truncate_at_nearest_stop(ex.text, target);
      cut.push_back(text == ex.text ? ex : with_text(ex, std::move(text)));
    }
  } else {
    cut = human;
  }

  r.human = remove_outliers(std::move(cut), options, "human");
  r.ai = remove_outliers(ai, options, "ai");
  r.human_after = length_stats(r.human);
  r.ai_after = length_stats(r.ai);

  const double gap_before = std::abs(r.human_before.mean_chars - r.ai_before.mean_chars);
  const double gap_after = std::abs(r.human_after.mean_chars - r.ai_after.mean_chars);
  const double ratio = std_ratio(r.human_after, r.ai_after);
  if (gap_after > options.max_mean_gap || ratio > options.max_std_ratio) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "mean gap %.2f chars (limit %.2f), std ratio %.3f (limit %.3f)", gap_after,
                  options.max_mean_gap, ratio, options.max_std_ratio);
    throw Error(ErrorCode::BalanceFailed, buf);
  }
  if (gap_after > gap_before) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "balancing widened the mean gap from %.2f to %.2f chars", gap_before, gap_after);
    throw Error(ErrorCode::BalanceFailed, buf);
  }
  return r;
}

Dataset assemble_dataset(std::string name, const std::vector<Excerpt>& human, const std::vector<Excerpt>& ai,
                         std::uint64_t seed, std::string provenance) {
  if (human.empty() || ai.empty()) throw Error(ErrorCode::EmptyInput, "assemble_dataset needs both classes");
  Rng rng(seed);
  const std::size_t k = std::min(human.size(), ai.size());
  auto pick = [&](const std::vector<Excerpt>& from) {
    if (from.size() == k) return from;
    auto idx = rng.sample_indices(from.size(), k);
    std::sort(idx.begin(), idx.end());
    std::vector<Excerpt> out;
    out.reserve(k);
    for (auto i : idx) out.push_back(from[i]);
    return out;
  };

  Dataset ds;
  ds.name = std::move(name);
  ds.seed = seed;
  ds.provenance = std::move(provenance);
  ds.excerpts = pick(human);
  auto ai_part = pick(ai);
  ds.excerpts.insert(ds.excerpts.end(), ai_part.begin(), ai_part.end());

  std::unordered_set<std::string> ids;
  for (const auto& ex : ds.excerpts) {
    if (!ids.insert(ex.excerpt_id).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate excerpt_id '" + ex.excerpt_id + "'");
    }
  }
  rng.shuffle(ds.excerpts);
  return ds;
}

}  // namespace detective::corpus
