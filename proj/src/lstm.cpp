#include "t2p/lstm.hpp"

#include "t2p/rng.hpp"

namespace t2p::nn {

namespace {

struct CellState {
    Tape::Id h;
    Tape::Id c;
};

CellState lstm_step(Tape& t, const LstmDirParams& p, Tape::Id x, CellState prev, int hidden) {
    auto w_ih = t.param(*p.w_ih);
    auto w_hh = t.param(*p.w_hh);
    auto b = t.param(*p.b);
    auto gates = t.add(t.matvec(w_ih, x, b, "lstm.w_ih"), t.matvec(w_hh, prev.h, -1, "lstm.w_hh"));
    auto i = t.sigmoid(t.slice(gates, 0, hidden));
    auto f = t.sigmoid(t.slice(gates, hidden, hidden));
    auto g = t.tanh_op(t.slice(gates, 2 * hidden, hidden));
    auto o = t.sigmoid(t.slice(gates, 3 * hidden, hidden));
    auto c = t.add(t.mul(f, prev.c), t.mul(i, g));
    auto h = t.mul(o, t.tanh_op(c));
    return {h, c};
}

// Runs one direction over xs (already ordered for that direction); returns
// hidden states in processing order.
std::vector<Tape::Id> run_direction(Tape& t, const LstmDirParams& p, const std::vector<Tape::Id>& xs,
                                    int hidden) {
    CellState s{t.input(Tensor({hidden})), t.input(Tensor({hidden}))};
    std::vector<Tape::Id> hs;
    hs.reserve(xs.size());
    for (Tape::Id x : xs) {
        s = lstm_step(t, p, x, s, hidden);
        hs.push_back(s.h);
    }
    return hs;
}

}  // namespace

BiLstmParams BiLstmParams::create(ParameterStore& store, const std::string& prefix, int input_dim,
                                  int hidden, int layers, std::uint64_t seed) {
    if (input_dim < 1 || hidden < 1 || layers < 1) throw ConfigError("bilstm: invalid dimensions");
    BiLstmParams p;
    p.input_dim = input_dim;
    p.hidden = hidden;
    p.layers = layers;
    Rng rng(seed);
    const char* dir_name[2] = {"fwd", "bwd"};
    for (int l = 0; l < layers; ++l) {
        const int in = l == 0 ? input_dim : 2 * hidden;
        std::array<LstmDirParams, 2> layer{};
        for (int d = 0; d < 2; ++d) {
            const std::string base = prefix + ".l" + std::to_string(l) + "." + dir_name[d];
            layer[d].w_ih = &store.add(base + ".w_ih", init_uniform_fanin({4 * hidden, in}, in, rng.next_u64()));
            layer[d].w_hh =
                &store.add(base + ".w_hh", init_uniform_fanin({4 * hidden, hidden}, hidden, rng.next_u64()));
            layer[d].b = &store.add(base + ".b", Tensor({4 * hidden}));
        }
        p.dirs.push_back(layer);
    }
    return p;
}

std::vector<Tape::Id> bilstm_build(Tape& t, const std::vector<Tape::Id>& xs, const BiLstmParams& p) {
    if (xs.empty()) throw InvalidInputError("bilstm: empty sequence");
    for (Tape::Id x : xs) {
        if (t.value(x).size() != t.value(xs[0]).size()) {
            throw InvalidInputError("bilstm: non-uniform step dims");
        }
    }
    if (t.value(xs[0]).size() != p.input_dim) throw ConfigError("bilstm: step dim != input_dim");
    std::vector<Tape::Id> cur = xs;
    const size_t n = xs.size();
    for (int l = 0; l < p.layers; ++l) {
        auto fwd = run_direction(t, p.dirs[static_cast<size_t>(l)][0], cur, p.hidden);
        std::vector<Tape::Id> rev(cur.rbegin(), cur.rend());
        auto bwd_rev = run_direction(t, p.dirs[static_cast<size_t>(l)][1], rev, p.hidden);
        std::vector<Tape::Id> out(n);
        for (size_t i = 0; i < n; ++i) {
            out[i] = t.concat({fwd[i], bwd_rev[n - 1 - i]});
        }
        cur = std::move(out);
    }
    return cur;
}

std::vector<Tensor> bilstm_forward(const std::vector<Tensor>& sequence, const BiLstmParams& p) {
    Tape t;
    std::vector<Tape::Id> xs;
    xs.reserve(sequence.size());
    for (const auto& step : sequence) xs.push_back(t.input(step));
    auto out = bilstm_build(t, xs, p);
    std::vector<Tensor> res;
    res.reserve(out.size());
    for (auto id : out) res.push_back(t.value(id));
    return res;
}

}  // namespace t2p::nn
