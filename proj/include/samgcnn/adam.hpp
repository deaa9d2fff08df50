#pragma once

#include <cmath>

#include "samgcnn/params.hpp"

namespace samgcnn {

// Per-parameter Adam moment accumulators.
template <typename Scalar>
struct AdamState {
    ParamSet<Scalar> first_moment;
    ParamSet<Scalar> second_moment;
    long step = 0;
    Scalar beta1 = Scalar(0.9);
    Scalar beta2 = Scalar(0.999);
    Scalar epsilon = Scalar(1e-8);

    static AdamState for_params(const ParamSet<Scalar>& params, Scalar beta1 = Scalar(0.9),
                                Scalar beta2 = Scalar(0.999), Scalar epsilon = Scalar(1e-8)) {
        AdamState s;
        s.beta1 = beta1;
        s.beta2 = beta2;
        s.epsilon = epsilon;
        params.for_each([&](const std::string& name, const Tensor<Scalar>& value,
                            const Tensor<Scalar>&) {
            s.first_moment.add(name, zeros_like(value));
            s.second_moment.add(name, zeros_like(value));
        });
        return s;
    }
};

// One Adam update with bias correction, applied in place. Gradients are
// read from the params' grad accumulators. Aborts on non-finite gradients.
template <typename Scalar>
void adam_step(ParamSet<Scalar>& params, AdamState<Scalar>& state, Scalar lr) {
    ++state.step;
    const Scalar bc1 = Scalar(1) - std::pow(state.beta1, Scalar(state.step));
    const Scalar bc2 = Scalar(1) - std::pow(state.beta2, Scalar(state.step));
    params.for_each([&](const std::string& name, Tensor<Scalar>& value, Tensor<Scalar>& grad) {
        if (!grad.values.isFinite().all())
            throw NumericError("non-finite gradient in parameter " + name);
        auto& m = state.first_moment.value(name).values;
        auto& v = state.second_moment.value(name).values;
        m = state.beta1 * m + (Scalar(1) - state.beta1) * grad.values;
        v = state.beta2 * v + (Scalar(1) - state.beta2) * grad.values.square();
        value.values -= lr * (m / bc1) / ((v / bc2).sqrt() + state.epsilon);
    });
}

}  // namespace samgcnn
