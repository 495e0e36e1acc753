#include "mt3d/core/rng.hpp"

#include <sstream>

#include "mt3d/core/errors.hpp"

namespace mt3d {

double Rng::uniform() {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
}

double Rng::uniform(double lo, double hi) {
    if (lo == hi) {
        // keep the stream position independent of the range width
        (void)uniform();
        return lo;
    }
    return lo + (hi - lo) * uniform();
}

int Rng::uniform_int(int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return dist(engine_);
}

double Rng::normal() {
    std::normal_distribution<double> dist(0.0, 1.0);
    return dist(engine_);
}

void Rng::fill_normal(std::span<double> out) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : out) v = dist(engine_);
}

std::string Rng::serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
}

void Rng::deserialize(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
    if (!is) throw InvalidInput("corrupt rng state");
}

}  // namespace mt3d
