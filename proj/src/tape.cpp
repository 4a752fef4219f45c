#include "t2p/tape.hpp"

#include <cmath>

#include "t2p/rng.hpp"

namespace t2p::nn {

Tape::Id Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<Id>(nodes_.size() - 1);
}

const Tensor& Tape::val_of(Id id) const { return nodes_[static_cast<size_t>(id)].value; }

void Tape::check_id(Id id, const char* who) const {
    if (id < 0 || id >= static_cast<Id>(nodes_.size())) {
        throw StateError(std::string(who) + ": invalid tape id");
    }
}

Tape::Id Tape::input(Tensor t) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(t);
    return push(std::move(n));
}

Tape::Id Tape::param(Parameter& p) {
    Node n;
    n.op = Op::Param;
    n.value = p.value;
    n.p = &p;
    return push(std::move(n));
}

Tape::Id Tape::conv2d(Id x, Id w, Id bias, int stride, int pad, const std::string& name) {
    check_id(x, name.c_str());
    check_id(w, name.c_str());
    const auto& xd = val_of(x).dims();
    const auto& wd = val_of(w).dims();
    if (xd.size() != 3 || wd.size() != 4) throw ConfigError(name + ": conv expects x[ci,h,w], w[co,ci,kh,kw]");
    if (wd[1] != xd[0]) throw ConfigError(name + ": input channels mismatch");
    auto s = kernels::make_conv_shape(xd[0], xd[1], xd[2], wd[0], wd[2], wd[3], stride, pad, name.c_str());
    if (bias >= 0 && val_of(bias).size() != s.co) throw ConfigError(name + ": bias size mismatch");
    Node n;
    n.op = Op::Conv2d;
    n.in0 = x;
    n.in1 = w;
    n.in2 = bias;
    n.conv = s;
    n.value = Tensor({s.co, s.ho, s.wo});
    kernels::conv2d_forward(s, val_of(x).data(), val_of(w).data(),
                            bias >= 0 ? val_of(bias).data() : nullptr, n.value.data());
    return push(std::move(n));
}

Tape::Id Tape::tconv2d(Id x, Id w, Id bias, int stride, int pad, int out_h, int out_w,
                       const std::string& name) {
    check_id(x, name.c_str());
    check_id(w, name.c_str());
    const auto& xd = val_of(x).dims();
    const auto& wd = val_of(w).dims();
    if (xd.size() != 3 || wd.size() != 4) throw ConfigError(name + ": tconv expects x[co,ho,wo], w[co,ci,kh,kw]");
    if (wd[0] != xd[0]) throw ConfigError(name + ": input channels mismatch");
    auto s = kernels::make_conv_shape(wd[1], out_h, out_w, wd[0], wd[2], wd[3], stride, pad, name.c_str());
    if (s.ho != xd[1] || s.wo != xd[2]) {
        throw ConfigError(name + ": output dims do not invert the conv arithmetic");
    }
    if (bias >= 0 && val_of(bias).size() != s.ci) throw ConfigError(name + ": bias size mismatch");
    Node n;
    n.op = Op::TConv2d;
    n.in0 = x;
    n.in1 = w;
    n.in2 = bias;
    n.conv = s;
    n.value = Tensor({s.ci, s.hi, s.wi});
    kernels::conv2d_grad_input(s, val_of(x).data(), val_of(w).data(), n.value.data());
    if (bias >= 0) {
        const double* b = val_of(bias).data();
        double* y = n.value.data();
        for (int c = 0; c < s.ci; ++c) {
            for (int i = 0; i < s.hi * s.wi; ++i) y[static_cast<size_t>(c) * s.hi * s.wi + i] += b[c];
        }
    }
    return push(std::move(n));
}

Tape::Id Tape::relu(Id x) {
    check_id(x, "relu");
    Node n;
    n.op = Op::Relu;
    n.in0 = x;
    n.value = val_of(x);
    for (auto& v : n.value.vec()) v = v > 0.0 ? v : 0.0;
    return push(std::move(n));
}

Tape::Id Tape::sigmoid(Id x) {
    check_id(x, "sigmoid");
    Node n;
    n.op = Op::Sigmoid;
    n.in0 = x;
    n.value = val_of(x);
    for (auto& v : n.value.vec()) v = 1.0 / (1.0 + std::exp(-v));
    return push(std::move(n));
}

Tape::Id Tape::tanh_op(Id x) {
    check_id(x, "tanh");
    Node n;
    n.op = Op::Tanh;
    n.in0 = x;
    n.value = val_of(x);
    for (auto& v : n.value.vec()) v = std::tanh(v);
    return push(std::move(n));
}

Tape::Id Tape::matvec(Id a, Id x, Id bias, const std::string& name) {
    check_id(a, name.c_str());
    check_id(x, name.c_str());
    const auto& ad = val_of(a).dims();
    if (ad.size() != 2) throw ConfigError(name + ": matrix must be 2-D");
    const int m = ad[0], k = ad[1];
    if (val_of(x).size() != k) throw ConfigError(name + ": vector length mismatch");
    if (bias >= 0 && val_of(bias).size() != m) throw ConfigError(name + ": bias size mismatch");
    Node n;
    n.op = Op::MatVec;
    n.in0 = a;
    n.in1 = x;
    n.in2 = bias;
    n.value = Tensor({m});
    kernels::matvec(val_of(a).data(), val_of(x).data(), bias >= 0 ? val_of(bias).data() : nullptr,
                    n.value.data(), m, k);
    return push(std::move(n));
}

Tape::Id Tape::add(Id a, Id b) {
    check_id(a, "add");
    check_id(b, "add");
    if (!val_of(a).same_dims(val_of(b))) throw ConfigError("add: dims mismatch");
    Node n;
    n.op = Op::Add;
    n.in0 = a;
    n.in1 = b;
    n.value = val_of(a);
    const auto& bv = val_of(b);
    for (int i = 0; i < n.value.size(); ++i) n.value[i] += bv[i];
    return push(std::move(n));
}

Tape::Id Tape::sub(Id a, Id b) {
    check_id(a, "sub");
    check_id(b, "sub");
    if (!val_of(a).same_dims(val_of(b))) throw ConfigError("sub: dims mismatch");
    Node n;
    n.op = Op::Sub;
    n.in0 = a;
    n.in1 = b;
    n.value = val_of(a);
    const auto& bv = val_of(b);
    for (int i = 0; i < n.value.size(); ++i) n.value[i] -= bv[i];
    return push(std::move(n));
}

Tape::Id Tape::mul(Id a, Id b) {
    check_id(a, "mul");
    check_id(b, "mul");
    if (!val_of(a).same_dims(val_of(b))) throw ConfigError("mul: dims mismatch");
    Node n;
    n.op = Op::Mul;
    n.in0 = a;
    n.in1 = b;
    n.value = val_of(a);
    const auto& bv = val_of(b);
    for (int i = 0; i < n.value.size(); ++i) n.value[i] *= bv[i];
    return push(std::move(n));
}

Tape::Id Tape::scale(Id a, double c) {
    check_id(a, "scale");
    Node n;
    n.op = Op::Scale;
    n.in0 = a;
    n.c = c;
    n.value = val_of(a);
    for (auto& v : n.value.vec()) v *= c;
    return push(std::move(n));
}

Tape::Id Tape::concat(const std::vector<Id>& parts) {
    if (parts.empty()) throw InvalidInputError("concat: empty part list");
    int total = 0;
    for (Id id : parts) {
        check_id(id, "concat");
        total += val_of(id).size();
    }
    Node n;
    n.op = Op::Concat;
    n.extra = parts;
    n.value = Tensor({total});
    int off = 0;
    for (Id id : parts) {
        const auto& v = val_of(id);
        for (int i = 0; i < v.size(); ++i) n.value[off + i] = v[i];
        off += v.size();
    }
    return push(std::move(n));
}

Tape::Id Tape::slice(Id x, int offset, int len) {
    check_id(x, "slice");
    if (offset < 0 || len < 1 || offset + len > val_of(x).size()) throw ConfigError("slice: out of range");
    Node n;
    n.op = Op::Slice;
    n.in0 = x;
    n.i0 = offset;
    n.i1 = len;
    n.value = Tensor({len});
    const auto& v = val_of(x);
    for (int i = 0; i < len; ++i) n.value[i] = v[offset + i];
    return push(std::move(n));
}

Tape::Id Tape::concat_channels(const std::vector<Id>& parts) {
    if (parts.empty()) throw InvalidInputError("concat_channels: empty part list");
    int h = -1, w = -1, ch = 0;
    for (Id id : parts) {
        check_id(id, "concat_channels");
        const auto& d = val_of(id).dims();
        if (d.size() != 3) throw ConfigError("concat_channels: parts must be [c,h,w]");
        if (h < 0) {
            h = d[1];
            w = d[2];
        } else if (d[1] != h || d[2] != w) {
            throw ConfigError("concat_channels: spatial dims mismatch");
        }
        ch += d[0];
    }
    Node n;
    n.op = Op::ConcatCh;
    n.extra = parts;
    n.value = Tensor({ch, h, w});
    int off = 0;
    for (Id id : parts) {
        const auto& v = val_of(id);
        for (int i = 0; i < v.size(); ++i) n.value[off + i] = v[i];
        off += v.size();
    }
    return push(std::move(n));
}

Tape::Id Tape::broadcast_grid(Id v, int h, int w) {
    check_id(v, "broadcast_grid");
    if (val_of(v).dims().size() != 1) throw ConfigError("broadcast_grid: expects a vector");
    const int c = val_of(v).size();
    Node n;
    n.op = Op::Broadcast;
    n.in0 = v;
    n.i0 = h;
    n.i1 = w;
    n.value = Tensor({c, h, w});
    const auto& src = val_of(v);
    for (int ci = 0; ci < c; ++ci) {
        for (int i = 0; i < h * w; ++i) n.value[ci * h * w + i] = src[ci];
    }
    return push(std::move(n));
}

Tape::Id Tape::reshape(Id x, std::vector<int> dims) {
    check_id(x, "reshape");
    if (static_cast<int>(Tensor::checked_size(dims)) != val_of(x).size()) {
        throw ConfigError("reshape: element count mismatch");
    }
    Node n;
    n.op = Op::Reshape;
    n.in0 = x;
    n.value = Tensor::from_data(std::move(dims), val_of(x).vec());
    return push(std::move(n));
}

Tape::Id Tape::sum(Id x) {
    check_id(x, "sum");
    double acc = 0.0;
    for (double v : val_of(x).vec()) acc += v;
    Node n;
    n.op = Op::Sum;
    n.in0 = x;
    n.value = Tensor::scalar(acc);
    return push(std::move(n));
}

Tape::Id Tape::mse(Id a, Id b) {
    check_id(a, "mse");
    check_id(b, "mse");
    if (!val_of(a).same_dims(val_of(b))) throw ConfigError("mse: dims mismatch");
    const auto& av = val_of(a);
    const auto& bv = val_of(b);
    double acc = 0.0;
    for (int i = 0; i < av.size(); ++i) {
        const double d = av[i] - bv[i];
        acc += d * d;
    }
    Node n;
    n.op = Op::Mse;
    n.in0 = a;
    n.in1 = b;
    n.value = Tensor::scalar(acc / static_cast<double>(av.size()));
    return push(std::move(n));
}

const Tensor& Tape::value(Id id) const {
    check_id(id, "value");
    return nodes_[static_cast<size_t>(id)].value;
}

const Tensor& Tape::grad(Id id) const {
    check_id(id, "grad");
    if (!backward_ran_) throw StateError("grad: backward has not run");
    return nodes_[static_cast<size_t>(id)].grad;
}

void Tape::backward(Id loss) {
    if (nodes_.empty()) throw StateError("backward: no forward pass recorded");
    check_id(loss, "backward");
    if (nodes_[static_cast<size_t>(loss)].value.size() != 1) {
        throw StateError("backward: loss must be scalar");
    }
    for (auto& n : nodes_) {
        n.grad = Tensor(n.value.dims());
    }
    nodes_[static_cast<size_t>(loss)].grad[0] = 1.0;
    for (size_t i = nodes_.size(); i-- > 0;) {
        backstep(nodes_[i]);
    }
    backward_ran_ = true;
}

void Tape::backstep(Node& n) {
    auto g_in = [&](Id id) -> Tensor& { return nodes_[static_cast<size_t>(id)].grad; };
    auto v_in = [&](Id id) -> const Tensor& { return nodes_[static_cast<size_t>(id)].value; };
    const Tensor& g = n.grad;
    switch (n.op) {
        case Op::Input:
        case Op::Param:
            break;
        case Op::Conv2d: {
            kernels::conv2d_grad_input(n.conv, g.data(), v_in(n.in1).data(), g_in(n.in0).data());
            kernels::conv2d_grad_weights(n.conv, v_in(n.in0).data(), g.data(), g_in(n.in1).data(),
                                         n.in2 >= 0 ? g_in(n.in2).data() : nullptr);
            break;
        }
        case Op::TConv2d: {
            // value = A^T x, so gx += A g and gw correlates (g, x) with conv
            // roles swapped. conv2d_forward overwrites, so stage then add.
            Tensor scratch(v_in(n.in0).dims());
            kernels::conv2d_forward(n.conv, g.data(), v_in(n.in1).data(), nullptr, scratch.data());
            Tensor& gx = g_in(n.in0);
            for (int i = 0; i < gx.size(); ++i) gx[i] += scratch[i];
            kernels::conv2d_grad_weights(n.conv, g.data(), v_in(n.in0).data(), g_in(n.in1).data(), nullptr);
            if (n.in2 >= 0) {
                double* gb = g_in(n.in2).data();
                const auto& s = n.conv;
                for (int c = 0; c < s.ci; ++c) {
                    double acc = 0.0;
                    for (int i = 0; i < s.hi * s.wi; ++i) acc += g[static_cast<size_t>(c) * s.hi * s.wi + i];
                    gb[c] += acc;
                }
            }
            break;
        }
        case Op::Relu: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < g.size(); ++i) gi[i] += n.value[i] > 0.0 ? g[i] : 0.0;
            break;
        }
        case Op::Sigmoid: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < g.size(); ++i) gi[i] += g[i] * n.value[i] * (1.0 - n.value[i]);
            break;
        }
        case Op::Tanh: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < g.size(); ++i) gi[i] += g[i] * (1.0 - n.value[i] * n.value[i]);
            break;
        }
        case Op::MatVec: {
            const auto& ad = v_in(n.in0).dims();
            kernels::matvec_grad(v_in(n.in0).data(), v_in(n.in1).data(), g.data(), g_in(n.in0).data(),
                                 g_in(n.in1).data(), n.in2 >= 0 ? g_in(n.in2).data() : nullptr, ad[0], ad[1]);
            break;
        }
        case Op::Add: {
            Tensor& ga = g_in(n.in0);
            Tensor& gb = g_in(n.in1);
            for (int i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] += g[i];
            }
            break;
        }
        case Op::Sub: {
            Tensor& ga = g_in(n.in0);
            Tensor& gb = g_in(n.in1);
            for (int i = 0; i < g.size(); ++i) {
                ga[i] += g[i];
                gb[i] -= g[i];
            }
            break;
        }
        case Op::Mul: {
            Tensor& ga = g_in(n.in0);
            Tensor& gb = g_in(n.in1);
            const Tensor& av = v_in(n.in0);
            const Tensor& bv = v_in(n.in1);
            for (int i = 0; i < g.size(); ++i) {
                ga[i] += g[i] * bv[i];
                gb[i] += g[i] * av[i];
            }
            break;
        }
        case Op::Scale: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < g.size(); ++i) gi[i] += g[i] * n.c;
            break;
        }
        case Op::Concat:
        case Op::ConcatCh: {
            int off = 0;
            for (Id id : n.extra) {
                Tensor& gi = g_in(id);
                for (int i = 0; i < gi.size(); ++i) gi[i] += g[off + i];
                off += gi.size();
            }
            break;
        }
        case Op::Slice: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < n.i1; ++i) gi[n.i0 + i] += g[i];
            break;
        }
        case Op::Broadcast: {
            Tensor& gi = g_in(n.in0);
            const int hw = n.i0 * n.i1;
            for (int c = 0; c < gi.size(); ++c) {
                double acc = 0.0;
                for (int i = 0; i < hw; ++i) acc += g[c * hw + i];
                gi[c] += acc;
            }
            break;
        }
        case Op::Reshape: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < g.size(); ++i) gi[i] += g[i];
            break;
        }
        case Op::Sum: {
            Tensor& gi = g_in(n.in0);
            for (int i = 0; i < gi.size(); ++i) gi[i] += g[0];
            break;
        }
        case Op::Mse: {
            Tensor& ga = g_in(n.in0);
            Tensor& gb = g_in(n.in1);
            const Tensor& av = v_in(n.in0);
            const Tensor& bv = v_in(n.in1);
            const double k = 2.0 * g[0] / static_cast<double>(av.size());
            for (int i = 0; i < ga.size(); ++i) {
                const double d = k * (av[i] - bv[i]);
                ga[i] += d;
                gb[i] -= d;
            }
            break;
        }
    }
}

void Tape::flush_param_grads() {
    if (!backward_ran_) throw StateError("flush_param_grads: backward has not run");
    for (auto& n : nodes_) {
        if (n.op == Op::Param) {
            for (int i = 0; i < n.grad.size(); ++i) n.p->grad[i] += n.grad[i];
        }
    }
}

bool Tape::values_finite() const {
    for (const auto& n : nodes_) {
        if (!n.value.all_finite()) return false;
    }
    return true;
}

void Tape::reset() {
    nodes_.clear();
    backward_ran_ = false;
}

Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias, int stride,
                      int padding) {
    const auto& xd = input.dims();
    const auto& wd = weights.dims();
    if (xd.size() != 3 || wd.size() != 4 || wd[1] != xd[0]) {
        throw ConfigError("conv2d_forward: expects x[ci,h,w], w[co,ci,kh,kw] with matching channels");
    }
    auto s = kernels::make_conv_shape(xd[0], xd[1], xd[2], wd[0], wd[2], wd[3], stride, padding,
                                      "conv2d_forward");
    if (bias && bias->size() != s.co) throw ConfigError("conv2d_forward: bias size mismatch");
    Tensor y({s.co, s.ho, s.wo});
    kernels::conv2d_forward(s, input.data(), weights.data(), bias ? bias->data() : nullptr, y.data());
    return y;
}

Tensor transposed_conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias,
                                 int stride, int padding, int out_pad_h, int out_pad_w) {
    const auto& xd = input.dims();
    const auto& wd = weights.dims();
    if (xd.size() != 3 || wd.size() != 4 || wd[0] != xd[0]) {
        throw ConfigError("transposed_conv2d_forward: expects x[co,ho,wo], w[co,ci,kh,kw]");
    }
    const int out_h = (xd[1] - 1) * stride - 2 * padding + wd[2] + out_pad_h;
    const int out_w = (xd[2] - 1) * stride - 2 * padding + wd[3] + out_pad_w;
    Tape t;
    auto x = t.input(input);
    auto w = t.input(weights);
    auto b = bias ? t.input(*bias) : -1;
    auto y = t.tconv2d(x, w, b, stride, padding, out_h, out_w, "transposed_conv2d_forward");
    return t.value(y);
}

Tensor init_uniform_fanin(std::vector<int> dims, int fan_in, std::uint64_t seed) {
    Tensor t(std::move(dims));
    Rng rng(seed);
    const double bound = fan_in > 0 ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 0.05;
    for (auto& v : t.vec()) v = rng.uniform(-bound, bound);
    return t;
}

}  // namespace t2p::nn
