#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cliniq {

// Splits on ASCII whitespace, then peels leading/trailing ASCII punctuation
// off each word into single-character tokens ("sedated." -> "sedated", ".").
// Idempotent on its own space-joined output, which makes a single-space join
// the canonical detokenization for chunk text.
std::vector<std::string> tokenize(const std::string& text);

// Canonical inverse of tokenize for reconstructed chunk/segment text.
std::string join_tokens(const std::vector<std::string>& tokens, size_t begin,
                        size_t end);
std::string join_tokens(const std::vector<std::string>& tokens);

// ASCII-only case fold; non-ASCII bytes pass through untouched.
std::string to_lower(std::string s);

// FNV-1a 64-bit; the stable hash used for feature hashing and stub matching.
uint64_t fnv1a64(const std::string& s);

// fnv1a64 rendered as 16 lowercase hex digits (stub script "hash" keys).
std::string fnv1a64_hex(const std::string& s);

}  // namespace cliniq
