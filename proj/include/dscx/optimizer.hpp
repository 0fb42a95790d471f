#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "dscx/errors.hpp"
#include "dscx/tensor.hpp"

namespace dscx {

// Adam with bias correction. Moment buffers are keyed by Parameter::pid and
// sized on first use; the update walks parameters in their registration
// order so repeated runs replay the same arithmetic.
class Adam {
public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Parameter*>& params) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        for (Parameter* p : params) {
            if (p->pid < 0) throw GraphNotRecorded("parameter has no pid slot");
            const size_t slot = static_cast<size_t>(p->pid);
            if (slot >= m_.size()) {
                m_.resize(slot + 1);
                v_.resize(slot + 1);
            }
            if (m_[slot].numel() == 0) {
                m_[slot] = Tensor(p->value.shape);
                v_[slot] = Tensor(p->value.shape);
            }
            Tensor& m = m_[slot];
            Tensor& v = v_[slot];
            for (int64_t i = 0; i < p->value.numel(); ++i) {
                const double g = p->grad.v[i];
                m.v[i] = beta1_ * m.v[i] + (1.0 - beta1_) * g;
                v.v[i] = beta2_ * v.v[i] + (1.0 - beta2_) * g * g;
                const double mhat = m.v[i] / bc1;
                const double vhat = v.v[i] / bc2;
                p->value.v[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

    double learning_rate() const { return lr_; }
    int64_t steps_taken() const { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    int64_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

} // namespace dscx
