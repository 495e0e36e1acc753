#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "mt3d/core/errors.hpp"
#include "mt3d/retrieval/catalog.hpp"
#include "mt3d/retrieval/embedding.hpp"

using namespace mt3d;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
}

/// Bucket counts computed with a separate FNV-1a loop over the raw words.
std::map<int, double> hand_counts(const std::vector<std::string>& words) {
    std::map<int, double> counts;
    for (const auto& w : words) {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : w) h = (h ^ c) * 0x100000001b3ull;
        counts[static_cast<int>(h % 1024)] += 1.0;
    }
    return counts;
}

double hand_cosine(const std::map<int, double>& a, const std::map<int, double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (const auto& [k, v] : a) {
        aa += v * v;
        if (auto it = b.find(k); it != b.end()) ab += v * it->second;
    }
    for (const auto& [k, v] : b) bb += v * v;
    return ab / std::sqrt(aa * bb);
}

std::vector<double> random_unit(int dim, std::mt19937_64& gen) {
    std::normal_distribution<double> n;
    std::vector<double> v(dim);
    for (auto& x : v) x = n(gen);
    return l2_normalized(v);
}

}  // namespace

TEST(Embedding, SelfSimilarityIsOne) {
    for (const char* s : {"a", "ceramic lion", "A DSLR photo of a red car!", "x y z x y z"})
        EXPECT_NEAR(dot(embed(s), embed(s)), 1.0, 1e-12) << s;
}

TEST(Embedding, TokenizationLowercasesAndSplits) {
    EXPECT_EQ(tokenize("A ceramic-Lion, 2 times"),
              (std::vector<std::string>{"a", "ceramic", "lion", "2", "times"}));
    EXPECT_THROW(embed(""), InvalidInput);
}

TEST(Embedding, KnownBuckets) {
    // Reference values from an independent FNV-1a 64 implementation.
    EXPECT_EQ(token_bucket("a"), 140);
    EXPECT_EQ(token_bucket("ceramic"), 279);
    EXPECT_EQ(token_bucket("lion"), 1023);
    EXPECT_EQ(token_bucket("statue"), 409);
}

TEST(Embedding, CeramicLionMatchesHandOracle) {
    const double expected = hand_cosine(hand_counts({"a", "ceramic", "lion"}),
                                        hand_counts({"ceramic", "lion", "statue"}));
    EXPECT_NEAR(expected, 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(dot(embed("a ceramic lion"), embed("ceramic lion statue")), expected, 1e-12);
}

TEST(Embedding, DisjointTokensAreOrthogonal) {
    EXPECT_EQ(dot(embed("red car"), embed("wooden chair")), 0.0);
}

TEST(Retrieval, SingleEntryAlwaysWins) {
    const Catalog c = make_catalog({{"only.ply", "a blue teapot"}});
    for (const char* p : {"a red car", "teapot", "zzz"}) EXPECT_EQ(retrieve(p, c).index, 0u);
}

TEST(Retrieval, IdenticalCaptionWins) {
    const Catalog c = make_catalog({{"a.ply", "a wooden chair"}, {"b.ply", "a ceramic lion"},
                                    {"c.ply", "a red sports car"}});
    const auto r = retrieve("a ceramic lion", c);
    EXPECT_EQ(r.index, 1u);
    EXPECT_NEAR(r.ranking.front().similarity, 1.0, 1e-12);
    EXPECT_EQ(r.entry, &c.entries[1]);
}

TEST(Retrieval, TiesGoToLowestIndex) {
    const Catalog c = make_catalog({{"a.ply", "red car"}, {"b.ply", "blue car"}, {"c.ply", "car red"}});
    const auto r = retrieve("red car", c);
    EXPECT_EQ(r.index, 0u);
    ASSERT_EQ(r.ranking.size(), 3u);
    EXPECT_EQ(r.ranking[0].index, 0u);
    EXPECT_EQ(r.ranking[1].index, 2u);
    EXPECT_EQ(r.ranking[2].index, 1u);
}

TEST(Retrieval, MatchesExhaustiveScanOnRandomCatalog) {
    std::mt19937_64 gen(7);
    Catalog c;
    c.backend = EmbeddingBackend::kExternal;
    for (int i = 0; i < 10; ++i) c.entries.push_back({"x.ply", "entry " + std::to_string(i), random_unit(16, gen)});
    for (int trial = 0; trial < 20; ++trial) {
        const auto q = random_unit(16, gen);
        std::size_t best = 0;
        double best_sim = -2.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            double s = 0.0;
            for (int k = 0; k < 16; ++k) s += q[k] * c.entries[i].embedding[k];
            if (s > best_sim) best_sim = s, best = i;
        }
        const auto r = retrieve(q, c);
        EXPECT_EQ(r.index, best);
        EXPECT_NEAR(r.ranking.front().similarity, best_sim, 1e-12);
        for (std::size_t i = 1; i < r.ranking.size(); ++i)
            EXPECT_GE(r.ranking[i - 1].similarity, r.ranking[i].similarity);
    }
}

TEST(Retrieval, PositiveScalingLeavesArgmaxUnchanged) {
    std::mt19937_64 gen(11);
    std::vector<std::vector<double>> raw;
    for (int i = 0; i < 10; ++i) raw.push_back(random_unit(8, gen));
    const auto q = random_unit(8, gen);
    Catalog a, b;
    a.backend = b.backend = EmbeddingBackend::kExternal;
    std::uniform_real_distribution<double> s(0.1, 10.0);
    for (const auto& v : raw) {
        a.entries.push_back({"x.ply", "c", l2_normalized(v)});
        auto scaled = v;
        const double factor = s(gen);
        for (double& x : scaled) x *= factor;
        b.entries.push_back({"x.ply", "c", l2_normalized(scaled)});
    }
    EXPECT_EQ(retrieve(q, a).index, retrieve(q, b).index);
}

TEST(Retrieval, EmptyCatalogIsConfigError) {
    EXPECT_THROW(retrieve("anything", Catalog{}), ConfigError);
}

TEST(Retrieval, Deterministic) {
    const Catalog c = make_catalog({{"a.ply", "a wooden chair"}, {"b.ply", "a ceramic lion"}});
    const auto r1 = retrieve("ceramic chair", c);
    const auto r2 = retrieve("ceramic chair", c);
    EXPECT_EQ(r1.index, r2.index);
    for (std::size_t i = 0; i < r1.ranking.size(); ++i) {
        EXPECT_EQ(r1.ranking[i].index, r2.ranking[i].index);
        EXPECT_EQ(r1.ranking[i].similarity, r2.ranking[i].similarity);
    }
}

TEST(CatalogFile, LoadsCaptionsAndResolvesPaths) {
    const auto path = temp_file("mt3d_catalog_words.jsonl");
    write_lines(path, {R"({"asset": "sphere.ply", "caption": "a smooth sphere"})", "",
                       R"({"asset": "/abs/cube.ply", "caption": "a wooden cube"})"});
    const Catalog c = load_catalog(path);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.backend, EmbeddingBackend::kHashedWords);
    EXPECT_EQ(c.entries[0].asset, path.parent_path() / "sphere.ply");
    EXPECT_EQ(c.entries[1].asset, std::filesystem::path("/abs/cube.ply"));
    EXPECT_EQ(c.entries[1].embedding, embed("a wooden cube"));
}

TEST(CatalogFile, ExternalEmbeddingsRoundTrip) {
    const std::vector<double> v = {0.6, 0.0, -0.8};
    const std::string b64 = base64_encode_floats(v);
    const auto back = base64_decode_floats(b64);
    ASSERT_EQ(back.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(v[i])));

    // 1.0f little-endian is 00 00 80 3f.
    EXPECT_EQ(base64_encode_floats({1.0}), "AACAPw==");

    const auto path = temp_file("mt3d_catalog_vectors.jsonl");
    write_lines(path, {R"({"asset": "a.ply", "caption": "first", "embedding": ")" + b64 + "\"}",
                       R"({"asset": "b.ply", "caption": "second", "embedding": ")" +
                           base64_encode_floats({0.0, 2.0, 0.0}) + "\"}"});
    const Catalog c = load_catalog(path);
    EXPECT_EQ(c.backend, EmbeddingBackend::kExternal);
    EXPECT_NEAR(c.entries[1].embedding[1], 1.0, 1e-15);
    EXPECT_EQ(retrieve(std::vector<double>{0.0, 1.0, 0.0}, c).index, 1u);
    EXPECT_THROW(retrieve("first", c), ConfigError);

    const auto saved = temp_file("mt3d_catalog_saved.jsonl");
    save_catalog(saved, c);
    const Catalog again = load_catalog(saved);
    for (std::size_t i = 0; i < c.size(); ++i) EXPECT_EQ(again.entries[i].embedding, c.entries[i].embedding);
}

TEST(CatalogFile, Errors) {
    EXPECT_THROW(load_catalog(temp_file("mt3d_no_such_catalog.jsonl")), ConfigError);
    const auto mixed = temp_file("mt3d_catalog_mixed.jsonl");
    write_lines(mixed, {R"({"asset": "a.ply", "caption": "first", "embedding": "AACAPw=="})",
                        R"({"asset": "b.ply", "caption": "second"})"});
    EXPECT_THROW(load_catalog(mixed), ConfigError);
    const auto bad = temp_file("mt3d_catalog_bad.jsonl");
    write_lines(bad, {R"({"asset": "a.ply"})"});
    EXPECT_THROW(load_catalog(bad), InvalidInput);
    const auto dims = temp_file("mt3d_catalog_dims.jsonl");
    write_lines(dims, {R"({"asset": "a.ply", "caption": "first", "embedding": "AACAPw=="})",
                       R"({"asset": "b.ply", "caption": "second", "embedding": ")" +
                           base64_encode_floats({1.0, 0.0}) + "\"}"});
    EXPECT_THROW(load_catalog(dims), InvalidInput);
    EXPECT_THROW(base64_decode_floats("abc"), InvalidInput);
}
