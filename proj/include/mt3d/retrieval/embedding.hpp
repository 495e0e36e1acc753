#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mt3d {

inline constexpr int kEmbeddingDim = 1024;

/// Lowercases and splits on every non-alphanumeric character; empty pieces are dropped.
std::vector<std::string> tokenize(std::string_view text);

/// 64-bit FNV-1a hash of the token bytes.
std::uint64_t fnv1a64(std::string_view token);

/// Bucket of a token in the hashed bag-of-words embedding.
int token_bucket(std::string_view token);

/// Hashed bag-of-words embedding: token counts per bucket, L2-normalized.
/// A text without any alphanumeric token yields the zero vector.
/// Throws InvalidInput for empty text.
std::vector<double> embed(std::string_view text);

/// Scales v to unit L2 norm; the zero vector is returned unchanged.
std::vector<double> l2_normalized(std::vector<double> v);

double dot(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace mt3d
