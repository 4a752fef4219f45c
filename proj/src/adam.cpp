#include "t2p/adam.hpp"

#include <cmath>

#include "t2p/errors.hpp"

namespace t2p::nn {

Adam::Adam(ParameterStore& store, AdamConfig cfg) : store_(&store), cfg_(cfg) {
    if (cfg_.lr <= 0.0 || cfg_.beta1 <= 0.0 || cfg_.beta1 >= 1.0 || cfg_.beta2 <= 0.0 ||
        cfg_.beta2 >= 1.0 || cfg_.eps <= 0.0) {
        throw ConfigError("adam: hyperparameters out of range");
    }
    for (const auto& p : store.params()) {
        m_.emplace_back(p->value.dims());
        v_.emplace_back(p->value.dims());
    }
}

void Adam::step() {
    if (m_.size() != store_->count()) throw StateError("adam: store changed since construction");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    size_t pi = 0;
    for (const auto& p : store_->params()) {
        Tensor& m = m_[pi];
        Tensor& v = v_[pi];
        ++pi;
        double* val = p->value.data();
        double* g = p->grad.data();
        for (int i = 0; i < p->value.size(); ++i) {
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g[i];
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            g[i] = 0.0;
        }
    }
}

}  // namespace t2p::nn
