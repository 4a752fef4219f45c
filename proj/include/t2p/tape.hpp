#pragma once

#include <string>
#include <vector>

#include "t2p/kernels.hpp"
#include "t2p/tensor.hpp"

namespace t2p::nn {

// Reverse-mode tape over a small fixed op set. A forward pass appends nodes;
// backward() walks them in reverse and fills per-node gradients;
// flush_param_grads() adds leaf gradients into their Parameters in
// registration order (fixed-order reduction, so batch loops stay
// deterministic).
//
// Tapes are cheap to reset and are not thread-safe; use one per thread.
class Tape {
public:
    using Id = int;

    // Leaves.
    Id input(Tensor t);
    Id param(Parameter& p);

    // x:[ci,h,w], w:[co,ci,kh,kw], bias:[co] or -1.
    Id conv2d(Id x, Id w, Id bias, int stride, int pad, const std::string& name = "conv2d");
    // Adjoint of conv2d. x:[co,ho,wo], w:[co,ci,kh,kw] (conv layout), bias:[ci]
    // or -1; output dims are given explicitly and validated against the conv
    // arithmetic they invert.
    Id tconv2d(Id x, Id w, Id bias, int stride, int pad, int out_h, int out_w,
               const std::string& name = "tconv2d");

    Id relu(Id x);
    Id sigmoid(Id x);
    Id tanh_op(Id x);

    // a:[m,n], x:[n], bias:[m] or -1 -> [m]
    Id matvec(Id a, Id x, Id bias, const std::string& name = "matvec");

    Id add(Id a, Id b);
    Id sub(Id a, Id b);
    Id mul(Id a, Id b);
    Id scale(Id a, double c);

    // 1-D concat of flattened inputs.
    Id concat(const std::vector<Id>& parts);
    // 1-D slice [offset, offset+len).
    Id slice(Id x, int offset, int len);
    // Stack [c_i,h,w] inputs along the channel axis.
    Id concat_channels(const std::vector<Id>& parts);
    // [c] -> [c,h,w] (value repeated across the grid).
    Id broadcast_grid(Id v, int h, int w);
    Id reshape(Id x, std::vector<int> dims);

    Id sum(Id x);
    // mean((a-b)^2) over all elements -> scalar.
    Id mse(Id a, Id b);

    const Tensor& value(Id id) const;
    const Tensor& grad(Id id) const;

    // Populates all node gradients from a scalar loss. Throws StateError if
    // the tape is empty / id invalid / loss non-scalar.
    void backward(Id loss);
    // Adds leaf grads into Parameter::grad, registration order.
    void flush_param_grads();

    bool values_finite() const;
    size_t node_count() const { return nodes_.size(); }
    void reset();

private:
    enum class Op {
        Input, Param, Conv2d, TConv2d, Relu, Sigmoid, Tanh, MatVec, Add, Sub, Mul,
        Scale, Concat, Slice, ConcatCh, Broadcast, Reshape, Sum, Mse
    };

    struct Node {
        Op op;
        Tensor value;
        Tensor grad;
        int in0 = -1, in1 = -1, in2 = -1;
        std::vector<Id> extra;  // Concat/ConcatCh arity
        kernels::ConvShape conv{};
        int i0 = 0, i1 = 0;     // slice offset/len, broadcast h/w
        double c = 0.0;
        Parameter* p = nullptr;
    };

    Id push(Node n);
    const Tensor& val_of(Id id) const;
    void check_id(Id id, const char* who) const;
    void backstep(Node& n);

    std::vector<Node> nodes_;
    bool backward_ran_ = false;
};

// Op-level conveniences (the forms the module contract names); each runs on a
// private tape.
Tensor conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias, int stride,
                      int padding);
Tensor transposed_conv2d_forward(const Tensor& input, const Tensor& weights, const Tensor* bias,
                                 int stride, int padding, int out_pad_h = 0, int out_pad_w = 0);

// Seeded uniform fan-in initialization: U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
Tensor init_uniform_fanin(std::vector<int> dims, int fan_in, std::uint64_t seed);

}  // namespace t2p::nn
