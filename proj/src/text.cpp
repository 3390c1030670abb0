#include "spurlab/text.hpp"

#include <cctype>
#include <cstdlib>

namespace spurlab::text {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_word_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

char to_lower(char c) {
  return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.' || c == '!' || c == '?') {
      const bool boundary = (i + 1 == s.size()) || is_space(s[i + 1]);
      if (boundary) {
        std::string seg = trim(s.substr(start, i + 1 - start));
        if (!seg.empty()) out.push_back(std::move(seg));
        start = i + 1;
      }
    }
  }
  std::string tail = trim(s.substr(start));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

std::string strip_punct(std::string_view token) {
  std::size_t b = 0;
  std::size_t e = token.size();
  while (b < e && !is_word_char(token[b])) ++b;
  while (e > b && !is_word_char(token[e - 1])) --e;
  return std::string(token.substr(b, e - b));
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) {
      std::string w = strip_punct(s.substr(i, j - i));
      if (!w.empty()) out.push_back(std::move(w));
    }
    i = j;
  }
  return out;
}

std::vector<std::string> lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string line = trim(s.substr(start, nl - start));
    if (!line.empty()) out.push_back(std::move(line));
    if (nl == s.size()) break;
    start = nl + 1;
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = to_lower(c);
  return out;
}

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_word_char(c)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(to_lower(c));
    } else {
      pending_space = true;
    }
  }
  return out;
}

bool contains_phrase(std::string_view haystack, std::string_view phrase) {
  if (phrase.empty()) return false;
  const std::string h = lower(haystack);
  const std::string p = lower(phrase);
  std::size_t pos = 0;
  while ((pos = h.find(p, pos)) != std::string::npos) {
    const bool left_ok = pos == 0 || !is_word_char(h[pos - 1]);
    const std::size_t end = pos + p.size();
    const bool right_ok = end == h.size() || !is_word_char(h[end]);
    if (left_ok && right_ok) return true;
    ++pos;
  }
  return false;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
  return contains_phrase(haystack, needle);
}

std::optional<double> last_number(std::string_view s) {
  // Scan for the last token of the form [+-]?digits[,digits]*[.digits].
  std::optional<double> best;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_digit(s[i])) {
      ++i;
      continue;
    }
    std::size_t start = i;
    bool negative = false;
    if (start > 0 && (s[start - 1] == '-' || s[start - 1] == '+')) {
      negative = s[start - 1] == '-';
    }
    std::string digits;
    while (i < s.size() && (is_digit(s[i]) || s[i] == ',')) {
      if (s[i] != ',') digits.push_back(s[i]);
      ++i;
    }
    if (i + 1 < s.size() && s[i] == '.' && is_digit(s[i + 1])) {
      digits.push_back('.');
      ++i;
      while (i < s.size() && is_digit(s[i])) {
        digits.push_back(s[i]);
        ++i;
      }
    }
    double value = std::strtod(digits.c_str(), nullptr);
    if (negative) value = -value;
    best = value;
  }
  return best;
}

bool contains_date(std::string_view s) {
  // Bare year: \b[12][0-9]{3}\b. The "D Month YYYY" form always carries a
  // year token, so this rule subsumes it.
  for (std::size_t i = 0; i + 3 < s.size(); ++i) {
    if ((s[i] == '1' || s[i] == '2') && is_digit(s[i + 1]) &&
        is_digit(s[i + 2]) && is_digit(s[i + 3])) {
      const bool left_ok = i == 0 || !is_word_char(s[i - 1]);
      const bool right_ok = i + 4 == s.size() || !is_word_char(s[i + 4]);
      if (left_ok && right_ok) return true;
    }
  }
  return false;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out.append(sep);
    out.append(parts[i]);
  }
  return out;
}

}  // namespace spurlab::text
