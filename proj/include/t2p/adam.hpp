#pragma once

#include <cstdint>
#include <vector>

#include "t2p/tensor.hpp"

namespace t2p::nn {

struct AdamConfig {
    double lr = 0.05;  // published training rate; trainers pass their own
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam over every parameter of a store. Moments are zero-initialized and
// sized lazily against the store at construction.
class Adam {
public:
    Adam(ParameterStore& store, AdamConfig cfg = {});

    // One update from the gradients currently in the store; zeroes them
    // afterwards so the next step starts clean.
    void step();

    std::int64_t step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

    // Checkpoint access.
    std::vector<Tensor>& first_moments() { return m_; }
    std::vector<Tensor>& second_moments() { return v_; }
    void set_step_count(std::int64_t t) { t_ = t; }

private:
    ParameterStore* store_;
    AdamConfig cfg_;
    std::int64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

}  // namespace t2p::nn
