#pragma once

#include <cmath>
#include <vector>

#include "dgr/nn.hpp"
#include "dgr/types.hpp"

namespace dgr {

// Adam with bias correction; one moment pair per registered parameter.
template <typename S>
class Adam {
 public:
  Adam() = default;
  Adam(ParamRefs<S> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double eps = 1e-8)
      : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto* p : params_) {
      m_.push_back(Matrix<S>::Zero(p->v.rows(), p->v.cols()));
      v_.push_back(Matrix<S>::Zero(p->v.rows(), p->v.cols()));
    }
  }

  void step() {
    ++t_;
    const S c1 = S(1.0 - std::pow(beta1_, double(t_)));
    const S c2 = S(1.0 - std::pow(beta2_, double(t_)));
    const S b1 = S(beta1_), b2 = S(beta2_);
    const S lr = S(lr_), eps = S(eps_);
    for (size_t i = 0; i < params_.size(); ++i) {
      auto& p = *params_[i];
      m_[i] = b1 * m_[i] + (S(1) - b1) * p.g;
      v_[i].array() = b2 * v_[i].array() + (S(1) - b2) * p.g.array().square();
      p.v.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
    }
  }

  long step_count() const { return t_; }
  double lr() const { return lr_; }

 private:
  ParamRefs<S> params_;
  std::vector<Matrix<S>> m_, v_;
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
};

}  // namespace dgr
