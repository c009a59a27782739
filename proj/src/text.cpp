#include "cliniq/text.hpp"

#include <cctype>

namespace cliniq {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_punct(char c) { return std::ispunct(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    size_t start = i;
    while (i < n && !is_space(text[i])) ++i;
    size_t end = i;  // [start, end) is one whitespace-delimited word

    // Peel leading punctuation characters as their own tokens.
    size_t core_begin = start;
    while (core_begin < end && is_punct(text[core_begin])) {
      out.push_back(std::string(1, text[core_begin]));
      ++core_begin;
    }
    // Find where trailing punctuation starts; the core keeps interior
    // punctuation (hyphens, apostrophes, decimal points) intact.
    size_t core_end = end;
    while (core_end > core_begin && is_punct(text[core_end - 1])) --core_end;
    if (core_end > core_begin) {
      out.push_back(text.substr(core_begin, core_end - core_begin));
    }
    for (size_t p = core_end; p < end; ++p) {
      out.push_back(std::string(1, text[p]));
    }
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens, size_t begin,
                        size_t end) {
  std::string out;
  for (size_t i = begin; i < end && i < tokens.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  return join_tokens(tokens, 0, tokens.size());
}

std::string to_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string fnv1a64_hex(const std::string& s) {
  static const char* digits = "0123456789abcdef";
  uint64_t h = fnv1a64(s);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<size_t>(i)] = digits[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace cliniq
