#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spurlab::text {

// Tokenization rules shared by every verifier and detector. The instruction
// checkers depend on these being bit-exact, so they are fixed here once:
//   - a sentence is a segment ending at '.', '!' or '?' followed by
//     whitespace or end of text (so "20.0" does not split);
//   - a word is a whitespace-delimited token with leading/trailing
//     punctuation stripped.

std::vector<std::string> split_sentences(std::string_view s);
std::vector<std::string> words(std::string_view s);

// Lines separated by '\n', trimmed, empties dropped.
std::vector<std::string> lines(std::string_view s);

std::string strip_punct(std::string_view token);
std::string lower(std::string_view s);

// Casefold, replace punctuation with spaces, collapse whitespace, trim.
// Idempotent.
std::string normalize(std::string_view s);

bool contains_word(std::string_view haystack, std::string_view needle);

// Whole-word match for a single- or multi-token phrase, case-insensitive.
// Boundaries follow regex \b semantics (word chars = alnum + '_').
bool contains_phrase(std::string_view haystack, std::string_view phrase);

// Last number token in the text: optional sign, digits with optional commas,
// optional decimal part. Returns nullopt when no number is present.
std::optional<double> last_number(std::string_view s);

// True when the text contains "D Month YYYY" (e.g. "13 April 2008") or a
// bare year 1000-2999 delimited by word boundaries.
bool contains_date(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

std::string trim(std::string_view s);

}  // namespace spurlab::text
