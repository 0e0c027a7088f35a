#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace detective {

/// Number of Unicode code points in a UTF-8 string (continuation bytes are not counted).
std::size_t utf8_length(std::string_view text) noexcept;

/// Number of whitespace-delimited tokens.
std::size_t word_count(std::string_view text) noexcept;

std::string_view trim(std::string_view text) noexcept;

/// Collapses every run of ASCII whitespace to one space and trims both ends.
std::string collapse_whitespace(std::string_view text);

std::vector<std::string_view> split_lines(std::string_view text);

std::string sha256_hex(std::string_view data);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view encoded);

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`. Missing
/// parent directories are created.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace detective
