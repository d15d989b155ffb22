#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cultureval {

// ---------------------------------------------------------------------------
// Errors

/// Bad or missing configuration / input file. CLI maps this to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed data in an input file; message carries the 1-based line number.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A precondition violation on an operation's arguments.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Transient network/IO failure; safe to retry.
struct FetchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Credential rejection; aborts a run instead of retrying.
struct AuthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hashing

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

constexpr std::uint64_t fnv1a64(std::string_view text, std::uint64_t seed = kFnvOffset) {
  std::uint64_t h = seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= kFnvPrime;
  }
  return h;
}

/// 16-hex-digit stable content hash, used for prompt ids and cache keys.
std::string hash_hex(std::string_view text);

// ---------------------------------------------------------------------------
// Strings

std::string_view trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);
bool starts_with_fold(std::string_view text, std::string_view prefix);
std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Replaces every occurrence of `from` in `text`.
std::string replace_all(std::string text, std::string_view from, std::string_view to);

/// Decodes one UTF-8 codepoint starting at `i`; advances `i` past it.
/// Invalid bytes decode as U+FFFD and advance one byte.
char32_t utf8_next(std::string_view s, std::size_t& i);

/// Lowercases via a simple fold: ASCII plus Latin-1/Latin-Extended-A ranges.
std::string casefold(std::string_view s);

/// Case-folded, whitespace-collapsed, diacritic-preserving form used for
/// label/alias comparison and cache keys.
std::string normalize_surface(std::string_view s);

/// Conservative file-name form of an arbitrary id (model ids contain '/').
std::string sanitize_filename(std::string_view s);

/// Deterministic decimal rendering for report files ("%.12g").
std::string format_double(double v);

// ---------------------------------------------------------------------------
// Filesystem

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);
/// Writes to `<path>.tmp` then renames, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Current wall-clock time as an ISO-8601 UTC string.
std::string iso8601_now();

}  // namespace cultureval
