#include "mt3d/optim/adam.hpp"

#include <cmath>

#include "mt3d/core/binary_io.hpp"
#include "mt3d/core/errors.hpp"

namespace mt3d {

void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 const AdamHyper& hyper) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size())
        throw ContractError("adam_update: parameter, gradient and state sizes differ");
    ++state.step;
    const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
        params[i] -= hyper.lr * (state.m[i] / c1) / (std::sqrt(state.v[i] / c2) + hyper.epsilon);
    }
}

void write_adam_state(std::ostream& out, const AdamState& state) {
    binary::put_u64(out, static_cast<std::uint64_t>(state.step));
    binary::put_f64s(out, state.m);
    binary::put_f64s(out, state.v);
}

AdamState read_adam_state(std::istream& in) {
    AdamState s;
    s.step = static_cast<std::int64_t>(binary::get_u64(in));
    s.m = binary::get_f64s(in);
    s.v = binary::get_f64s(in);
    if (s.m.size() != s.v.size()) throw InvalidInput("adam state: buffer sizes differ");
    return s;
}

}  // namespace mt3d
