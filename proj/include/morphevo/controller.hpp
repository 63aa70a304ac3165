#pragma once

// Elman network: one tanh hidden layer of 6 units fed back through 6 context
// units. Weight vector layout:
//   [input->hidden (hidden-major) | context->hidden | hidden bias |
//    hidden->output (output-major) | output bias]

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "common.hpp"

namespace morphevo {

struct ElmanSpec {
    static constexpr int kHidden = 6;
    static constexpr int kContext = 6;
    int n_in = 1;
    int n_out = 1;
    friend bool operator==(const ElmanSpec &, const ElmanSpec &) = default;
};

inline std::size_t weights_dim(const ElmanSpec &s) {
    if (s.n_in < 1 || s.n_out < 1) throw InterfaceError("Elman spec needs n_in >= 1 and n_out >= 1");
    constexpr int h = ElmanSpec::kHidden;
    return static_cast<std::size_t>(s.n_in * h + h * ElmanSpec::kContext + h + h * s.n_out + s.n_out);
}

class ElmanController {
public:
    using Context = std::array<double, ElmanSpec::kContext>;

    ElmanController(ElmanSpec spec, std::vector<double> weights) : spec_(spec), weights_(std::move(weights)) {
        if (weights_.size() != weights_dim(spec_)) throw InterfaceError("weight vector length does not match spec");
    }

    const ElmanSpec &spec() const { return spec_; }
    std::span<const double> weights() const { return weights_; }
    const Context &context() const { return context_; }
    void reset() { context_.fill(0.0); }

    /// One forward pass; writes tanh outputs and replaces the context with the
    /// hidden activations.
    void step(std::span<const double> inputs, std::span<double> outputs) {
        if (inputs.size() != static_cast<std::size_t>(spec_.n_in) ||
            outputs.size() != static_cast<std::size_t>(spec_.n_out))
            throw InterfaceError("controller input/output length mismatch");
        constexpr int h = ElmanSpec::kHidden;
        const double *w = weights_.data();
        const double *w_ih = w;
        const double *w_ch = w_ih + spec_.n_in * h;
        const double *b_h = w_ch + h * ElmanSpec::kContext;
        const double *w_ho = b_h + h;
        const double *b_o = w_ho + h * spec_.n_out;

        Context hidden{};
        for (int j = 0; j < h; ++j) {
            double sum = b_h[j];
            for (int i = 0; i < spec_.n_in; ++i) sum += w_ih[j * spec_.n_in + i] * inputs[i];
            for (int c = 0; c < ElmanSpec::kContext; ++c) sum += w_ch[j * ElmanSpec::kContext + c] * context_[c];
            hidden[j] = std::tanh(sum);
        }
        for (int o = 0; o < spec_.n_out; ++o) {
            double sum = b_o[o];
            for (int j = 0; j < h; ++j) sum += w_ho[o * h + j] * hidden[j];
            outputs[o] = std::tanh(sum);
        }
        context_ = hidden;
    }

    std::vector<double> step(std::span<const double> inputs) {
        std::vector<double> out(static_cast<std::size_t>(spec_.n_out));
        step(inputs, out);
        return out;
    }

private:
    ElmanSpec spec_;
    std::vector<double> weights_;
    Context context_{};
};

} // namespace morphevo
