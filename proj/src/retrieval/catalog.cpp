#include "mt3d/retrieval/catalog.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include "json.hpp"

#include "mt3d/core/errors.hpp"
#include "mt3d/retrieval/embedding.hpp"

namespace mt3d {

void Catalog::validate() const {
    if (entries.empty()) throw ConfigError("catalog: no entries");
    const std::size_t dim = dimension();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].caption.empty())
            throw InvalidInput("catalog entry " + std::to_string(i) + ": empty caption");
        if (entries[i].embedding.size() != dim)
            throw InvalidInput("catalog entry " + std::to_string(i) + ": embedding dimension " +
                               std::to_string(entries[i].embedding.size()) + ", expected " +
                               std::to_string(dim));
    }
}

Catalog make_catalog(const std::vector<std::pair<std::filesystem::path, std::string>>& items) {
    Catalog catalog;
    for (const auto& [asset, caption] : items) {
        if (caption.empty()) throw InvalidInput("catalog: empty caption for " + asset.string());
        catalog.entries.push_back({asset, caption, embed(caption)});
    }
    return catalog;
}

std::string base64_encode_floats(const std::vector<double>& values) {
    std::vector<unsigned char> bytes(values.size() * 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(values[i]));
        for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<unsigned char>(bits >> (8 * b));
    }
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

std::vector<double> base64_decode_floats(std::string_view text) {
    if (text.size() % 4 != 0) throw InvalidInput("base64: length is not a multiple of 4");
    std::vector<unsigned char> bytes(text.size() / 4 * 3 + 1);
    const int n = EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) throw InvalidInput("base64: invalid character");
    std::size_t len = static_cast<std::size_t>(n);
    // EVP_DecodeBlock keeps the zero bytes that stand in for '=' padding.
    for (std::size_t i = text.size(); i > 0 && text[i - 1] == '='; --i) --len;
    if (len % 4 != 0) throw InvalidInput("base64: payload is not a float32 array");
    std::vector<double> values(len / 4);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
        values[i] = std::bit_cast<float>(bits);
    }
    return values;
}

Catalog load_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("catalog: cannot open " + path.string());
    const auto base = path.parent_path();
    Catalog catalog;
    std::size_t with_embedding = 0;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw InvalidInput(where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("asset") || !rec.contains("caption") ||
            !rec["asset"].is_string() || !rec["caption"].is_string())
            throw InvalidInput(where + ": record needs string fields asset and caption");
        CatalogEntry entry;
        entry.asset = rec["asset"].get<std::string>();
        if (entry.asset.is_relative()) entry.asset = base / entry.asset;
        entry.caption = rec["caption"].get<std::string>();
        if (entry.caption.empty()) throw InvalidInput(where + ": empty caption");
        if (rec.contains("embedding")) {
            if (!rec["embedding"].is_string()) throw InvalidInput(where + ": embedding must be base64");
            entry.embedding = l2_normalized(base64_decode_floats(rec["embedding"].get<std::string>()));
            ++with_embedding;
        }
        catalog.entries.push_back(std::move(entry));
    }
    if (catalog.entries.empty()) throw ConfigError("catalog: no entries in " + path.string());
    if (with_embedding == catalog.size()) {
        catalog.backend = EmbeddingBackend::kExternal;
    } else if (with_embedding == 0) {
        for (auto& e : catalog.entries) e.embedding = embed(e.caption);
    } else {
        throw ConfigError("catalog: " + path.string() + " mixes records with and without embeddings");
    }
    catalog.validate();
    return catalog;
}

void save_catalog(const std::filesystem::path& path, const Catalog& catalog) {
    std::ofstream out(path);
    if (!out) throw ConfigError("catalog: cannot write " + path.string());
    for (const auto& e : catalog.entries) {
        nlohmann::json rec;
        rec["asset"] = e.asset.string();
        rec["caption"] = e.caption;
        if (catalog.backend == EmbeddingBackend::kExternal)
            rec["embedding"] = base64_encode_floats(e.embedding);
        out << rec.dump() << '\n';
    }
}

RetrievalResult retrieve(const std::vector<double>& query, const Catalog& catalog) {
    catalog.validate();
    if (query.size() != catalog.dimension())
        throw ConfigError("retrieve: query dimension " + std::to_string(query.size()) +
                          " does not match catalog dimension " + std::to_string(catalog.dimension()));
    RetrievalResult result;
    result.ranking.reserve(catalog.size());
    for (std::size_t i = 0; i < catalog.size(); ++i)
        result.ranking.push_back({i, dot(query, catalog.entries[i].embedding)});
    std::stable_sort(result.ranking.begin(), result.ranking.end(),
                     [](const RankedEntry& a, const RankedEntry& b) { return a.similarity > b.similarity; });
    result.index = result.ranking.front().index;
    result.entry = &catalog.entries[result.index];
    return result;
}

RetrievalResult retrieve(std::string_view prompt, const Catalog& catalog) {
    if (catalog.backend == EmbeddingBackend::kExternal)
        throw ConfigError("retrieve: catalog carries external embeddings; a query vector is required");
    return retrieve(embed(prompt), catalog);
}

}  // namespace mt3d
