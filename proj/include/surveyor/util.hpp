#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace surveyor::util {

// --- string helpers ---

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_ws(std::string_view s);
bool iequals(std::string_view a, std::string_view b);

/// Whitespace-delimited token count.
std::size_t word_count(std::string_view text);

/// First n Unicode scalar values of a UTF-8 string; never splits a
/// multi-byte sequence.
std::string truncate_chars(std::string_view text, std::size_t n);

/// Lowercase-alnum slug with '-' separators ("Graph Neural Nets" -> "graph-neural-nets").
std::string slugify(std::string_view text);

// --- deterministic hashing / expansion (mock encoder, fixtures) ---

std::uint64_t fnv1a64(std::string_view data);
std::uint64_t splitmix64(std::uint64_t& state);

/// Uniform double in [0, 1) from the next splitmix64 output.
double unit_double(std::uint64_t& state);

// --- URLs ---

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // leading '/', possibly empty
};

/// Split an http(s) URL into origin and path. Throws ConfigError on
/// anything that does not look like scheme://host.
UrlParts parse_url(const std::string& url);

// --- time ---

/// UTC "YYYY-MM-DDTHH:MM:SSZ".
std::string iso_timestamp_utc();

/// UTC "YYYYMMDD-HHMMSS-mmm", used in state filenames.
std::string filename_timestamp_utc();

}  // namespace surveyor::util
