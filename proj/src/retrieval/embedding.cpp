#include "mt3d/retrieval/embedding.hpp"

#include <cctype>
#include <cmath>

#include "mt3d/core/errors.hpp"

namespace mt3d {

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char ch : text) {
        const auto u = static_cast<unsigned char>(ch);
        if (std::isalnum(u)) {
            current.push_back(static_cast<char>(std::tolower(u)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::uint64_t fnv1a64(std::string_view token) {
    std::uint64_t h = 14695981039346656037ull;
    for (char ch : token) {
        h ^= static_cast<unsigned char>(ch);
        h *= 1099511628211ull;
    }
    return h;
}

int token_bucket(std::string_view token) {
    return static_cast<int>(fnv1a64(token) % static_cast<std::uint64_t>(kEmbeddingDim));
}

std::vector<double> embed(std::string_view text) {
    if (text.empty()) throw InvalidInput("embed: empty text");
    std::vector<double> v(kEmbeddingDim, 0.0);
    for (const auto& tok : tokenize(text)) v[token_bucket(tok)] += 1.0;
    return l2_normalized(std::move(v));
}

std::vector<double> l2_normalized(std::vector<double> v) {
    double n2 = 0.0;
    for (double x : v) n2 += x * x;
    if (n2 > 0.0) {
        const double inv = 1.0 / std::sqrt(n2);
        for (double& x : v) x *= inv;
    }
    return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ContractError("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace mt3d
