#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>

namespace mt3d {

/// Seeded random source shared by every stochastic operation.
///
/// Only the engine carries state; distributions are constructed per call so
/// that serializing the engine is enough for bit-identical resume.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform in [lo, hi); returns lo when lo == hi.
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi);
    double normal();
    void fill_normal(std::span<double> out);

    std::string serialize() const;
    void deserialize(const std::string& state);

    std::mt19937_64& engine() { return engine_; }

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

}  // namespace mt3d
