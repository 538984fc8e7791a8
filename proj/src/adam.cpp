#include "lws/adam.hpp"

#include <cmath>

#include "lws/errors.hpp"

namespace lws {

AdamState::AdamState(const std::vector<Parameter*>& params, AdamConfig cfg)
    : cfg_(cfg) {
  for (const Parameter* p : params) {
    m_.emplace(p->id, Tensor(p->value.shape()));
    v_.emplace(p->id, Tensor(p->value.shape()));
  }
}

const Tensor& AdamState::first_moment(std::uint64_t id) const {
  auto it = m_.find(id);
  if (it == m_.end())
    throw StateError("no moments for parameter id " + std::to_string(id));
  return it->second;
}

const Tensor& AdamState::second_moment(std::uint64_t id) const {
  auto it = v_.find(id);
  if (it == v_.end())
    throw StateError("no moments for parameter id " + std::to_string(id));
  return it->second;
}

void AdamState::step(const std::vector<Parameter*>& params,
                     double learning_rate) {
  t_ += 1;
  const double corr1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double corr2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Parameter* p : params) {
    auto mit = m_.find(p->id);
    auto vit = v_.find(p->id);
    if (mit == m_.end() || vit == v_.end()) {
      throw StateError("adam step: no moments for parameter id " +
                       std::to_string(p->id));
    }
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p->value.numel(); ++i) {
      const double g = p->grad[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[i] / corr1;
      const double vhat = v[i] / corr2;
      p->value[i] -= learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
    }
  }
}

void AdamState::restore(std::uint64_t t, AdamConfig cfg,
                        std::unordered_map<std::uint64_t, Tensor> m,
                        std::unordered_map<std::uint64_t, Tensor> v) {
  t_ = t;
  cfg_ = cfg;
  m_ = std::move(m);
  v_ = std::move(v);
}

}  // namespace lws
