#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace bladerag::text {

/// Number of Unicode scalar values in a UTF-8 string (continuation bytes
/// are not counted). Invalid bytes count as one character each so the
/// function is total.
std::size_t utf8_length(std::string_view s);

/// Byte offset just past the first `n_chars` characters of `s`.
/// Clamps to s.size() when the string is shorter.
std::size_t utf8_byte_offset(std::string_view s, std::size_t n_chars);

/// Byte offset where the trailing `n_chars` characters of `s` start.
std::size_t utf8_suffix_start(std::string_view s, std::size_t n_chars);

/// ASCII-only lowercase copy; bytes outside A-Z are left untouched.
std::string ascii_lower(std::string_view s);

/// True when `c` is an ASCII letter or digit.
bool is_word_byte(unsigned char c);

/// Case-insensitive substring search (ASCII folding).
/// Returns npos when absent.
std::size_t ifind(std::string_view haystack, std::string_view needle,
                  std::size_t from = 0);

std::string base64_encode(std::string_view bytes);

/// Splits into lines on '\n', keeping empty lines, dropping a trailing '\r'.
std::vector<std::string> split_lines(std::string_view s);

std::string trim(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Reads a whole file as bytes. Throws IoError.
std::string read_file(const std::string& path);

/// Writes bytes to a file, creating parent directories. Throws IoError.
void write_file(const std::string& path, std::string_view bytes);

} // namespace bladerag::text
