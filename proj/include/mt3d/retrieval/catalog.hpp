#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mt3d {

/// One captioned asset of the retrieval catalog.
struct CatalogEntry {
    std::filesystem::path asset;
    std::string caption;
    /// L2-normalized unless it is the zero vector.
    std::vector<double> embedding;
};

enum class EmbeddingBackend {
    /// Hashed bag-of-words embedding computed from the captions.
    kHashedWords,
    /// Vectors supplied with every catalog record.
    kExternal,
};

struct Catalog {
    std::vector<CatalogEntry> entries;
    EmbeddingBackend backend = EmbeddingBackend::kHashedWords;

    std::size_t size() const { return entries.size(); }
    std::size_t dimension() const { return entries.empty() ? 0 : entries.front().embedding.size(); }
    /// Throws ConfigError when empty, InvalidInput for an empty caption or
    /// mismatched embedding dimensions.
    void validate() const;
};

/// Builds a catalog with the built-in embedding from (asset, caption) pairs.
Catalog make_catalog(const std::vector<std::pair<std::filesystem::path, std::string>>& items);

/// Reads line-delimited JSON records {"asset", "caption", "embedding"?}, where
/// the optional embedding is base64 of little-endian float32 values. Relative
/// asset paths are resolved against the catalog's directory. The catalog uses
/// external vectors iff every record carries one; a mix is a ConfigError, as
/// is a missing file.
Catalog load_catalog(const std::filesystem::path& path);
void save_catalog(const std::filesystem::path& path, const Catalog& catalog);

std::string base64_encode_floats(const std::vector<double>& values);
std::vector<double> base64_decode_floats(std::string_view text);

struct RankedEntry {
    std::size_t index = 0;
    double similarity = 0.0;
};

struct RetrievalResult {
    std::size_t index = 0;
    const CatalogEntry* entry = nullptr;
    /// Every entry, by decreasing similarity and then increasing index.
    std::vector<RankedEntry> ranking;
};

/// Cosine ranking of the catalog against an already normalized query vector.
RetrievalResult retrieve(const std::vector<double>& query, const Catalog& catalog);

/// Embeds the prompt verbatim with the built-in embedding and ranks the
/// catalog. An external-vector catalog needs a query vector instead (ConfigError).
RetrievalResult retrieve(std::string_view prompt, const Catalog& catalog);

}  // namespace mt3d
