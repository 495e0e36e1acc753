#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace mt3d {

struct AdamHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First and second moment buffers for one parameter group.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t step = 0;

    void resize(std::size_t n) {
        m.assign(n, 0.0);
        v.assign(n, 0.0);
        step = 0;
    }
    bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update of params in place.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const AdamHyper& hyper);

void write_adam_state(std::ostream& out, const AdamState& state);
AdamState read_adam_state(std::istream& in);

}  // namespace mt3d
