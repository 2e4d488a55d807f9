#include "dialogen/neural/optimizer.hpp"

#include <cmath>

#include "dialogen/core/error.hpp"

namespace dialogen::nn {

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw ValidationError("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ValidationError("adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ValidationError("adam eps must be positive");
}

void to_json(nlohmann::json& j, const AdamConfig& c) {
  j = {{"lr", c.lr}, {"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.eps}, {"clip_norm", c.clip_norm}};
}

void from_json(const nlohmann::json& j, AdamConfig& c) {
  if (!j.is_object()) throw ValidationError("optimizer config must be an object");
  for (const auto& [key, value] : j.items()) {
    double* field = nullptr;
    if (key == "lr") field = &c.lr;
    else if (key == "beta1") field = &c.beta1;
    else if (key == "beta2") field = &c.beta2;
    else if (key == "eps") field = &c.eps;
    else if (key == "clip_norm") field = &c.clip_norm;
    else throw ValidationError("unknown optimizer key '" + key + "'");
    if (!value.is_number()) throw ValidationError("optimizer '" + key + "' must be a number");
    *field = value.get<double>();
  }
  c.validate();
}

Adam::Adam(ParamStore& params, AdamConfig config) : params_(&params), config_(config) {
  config_.validate();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Mat& v = params[i].value;
    m_.push_back(Mat::Zero(v.rows(), v.cols()));
    v_.push_back(Mat::Zero(v.rows(), v.cols()));
    if (params[i].grad.size() == 0) params[i].zero_grad();
  }
}

double Adam::step() {
  ParamStore& ps = *params_;
  if (ps.size() != m_.size()) throw UsageError("parameter store changed after optimizer creation");
  ps.check_finite_grads();
  const double norm = ps.grad_norm();
  const double scale = (config_.clip_norm > 0.0 && norm > config_.clip_norm) ? config_.clip_norm / norm : 1.0;
  ++t_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Param& p = ps[i];
    if (p.grad.size() == 0) continue;
    const Mat g = p.grad * scale;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    p.value.array() -= config_.lr * (m_[i].array() / bc1) / ((v_[i].array() / bc2).sqrt() + config_.eps);
  }
  return norm;
}

}  // namespace dialogen::nn
