#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "t2p/tape.hpp"

namespace t2p::nn {

// Gate packing order inside the [4H] pre-activation vector: i, f, g, o.
struct LstmDirParams {
    Parameter* w_ih = nullptr;  // [4H, in]
    Parameter* w_hh = nullptr;  // [4H, H]
    Parameter* b = nullptr;     // [4H]
};

struct BiLstmParams {
    int input_dim = 0;
    int hidden = 0;
    int layers = 0;
    std::vector<std::array<LstmDirParams, 2>> dirs;  // [layer][0=fwd,1=bwd]

    static BiLstmParams create(ParameterStore& store, const std::string& prefix, int input_dim,
                               int hidden, int layers, std::uint64_t seed);
};

// Builds the stacked bidirectional pass on an existing tape; one output per
// step, each [2*hidden] (forward state then backward state for that
// position).
std::vector<Tape::Id> bilstm_build(Tape& tape, const std::vector<Tape::Id>& xs, const BiLstmParams& p);

// Value-level form: runs on a private tape.
std::vector<Tensor> bilstm_forward(const std::vector<Tensor>& sequence, const BiLstmParams& p);

}  // namespace t2p::nn
