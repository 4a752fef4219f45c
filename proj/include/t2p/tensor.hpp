#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "t2p/errors.hpp"

namespace t2p::nn {

// Dense row-major tensor of doubles. Carrier for all maps, features and
// model activations.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<int> dims, double fill = 0.0)
        : dims_(std::move(dims)), data_(checked_size(dims_), fill) {}

    static Tensor from_data(std::vector<int> dims, std::vector<double> data) {
        Tensor t;
        t.dims_ = std::move(dims);
        if (checked_size(t.dims_) != data.size()) {
            throw ConfigError("Tensor: dims inconsistent with data length");
        }
        t.data_ = std::move(data);
        return t;
    }

    static Tensor scalar(double v) { return from_data({1}, {v}); }

    const std::vector<int>& dims() const { return dims_; }
    int size() const { return static_cast<int>(data_.size()); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& vec() { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](int i) { return data_[static_cast<size_t>(i)]; }
    double operator[](int i) const { return data_[static_cast<size_t>(i)]; }

    bool same_dims(const Tensor& o) const { return dims_ == o.dims_; }

    void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

    bool all_finite() const {
        for (double v : data_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

    static size_t checked_size(const std::vector<int>& dims) {
        size_t n = 1;
        for (int d : dims) {
            if (d < 0) throw ConfigError("Tensor: negative extent");
            n *= static_cast<size_t>(d);
        }
        return n;
    }

private:
    std::vector<int> dims_;
    std::vector<double> data_;
};

// A named learnable tensor with its gradient buffer.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)), grad(value.dims()) {}

    void zero_grad() { grad.fill(0.0); }
};

// Owns a model's parameters; pointers stay stable across adds.
class ParameterStore {
public:
    Parameter& add(std::string name, Tensor init) {
        params_.push_back(std::make_unique<Parameter>(std::move(name), std::move(init)));
        return *params_.back();
    }

    Parameter* find(const std::string& name) {
        for (auto& p : params_) {
            if (p->name == name) return p.get();
        }
        return nullptr;
    }

    std::span<const std::unique_ptr<Parameter>> params() const { return params_; }
    size_t count() const { return params_.size(); }

    size_t total_size() const {
        size_t n = 0;
        for (auto& p : params_) n += static_cast<size_t>(p->value.size());
        return n;
    }

    void zero_grads() {
        for (auto& p : params_) p->zero_grad();
    }

    bool grads_finite() const {
        for (auto& p : params_) {
            if (!p->grad.all_finite()) return false;
        }
        return true;
    }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace t2p::nn
