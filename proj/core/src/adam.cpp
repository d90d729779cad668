#include "dparse/adam.hpp"

#include <cmath>
#include <string>

namespace dparse {

double AdamHyper::rate_at(std::int64_t t) const {
  return learning_rate * std::pow(anneal_base, static_cast<double>(t) / anneal_denom);
}

void AdamState::attach(std::vector<ParamTensor>& params) {
  m_.clear();
  v_.clear();
  for (const auto& p : params) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
  t_ = 0;
}

void AdamState::update(std::vector<ParamTensor>& params, const AdamHyper& hyper) {
  if (m_.size() != params.size())
    throw std::invalid_argument("AdamState not attached to this parameter set");
  const double lr = hyper.rate_at(t_);
  ++t_;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = params[i];
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    for (std::int64_t j = 0; j < p.value.size(); ++j) {
      const double grad = p.grad[j];
      if (!std::isfinite(grad))
        throw TrainingError("non-finite gradient in '" + p.name + "' at step " +
                            std::to_string(t_ - 1));
      m[j] = hyper.beta1 * m[j] + (1.0 - hyper.beta1) * grad;
      v[j] = hyper.beta2 * v[j] + (1.0 - hyper.beta2) * grad * grad;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + hyper.epsilon);
    }
  }
}

}  // namespace dparse
