#pragma once

#include <vector>

#include <nlohmann/json.hpp>

#include "dialogen/neural/autodiff.hpp"

namespace dialogen::nn {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // <= 0 disables clipping

  void validate() const;
};

void to_json(nlohmann::json& j, const AdamConfig& c);
void from_json(const nlohmann::json& j, AdamConfig& c);

// Adam over every parameter of one store, with global gradient-norm clipping.
class Adam {
 public:
  Adam(ParamStore& params, AdamConfig config);

  // Clips, applies one update and returns the pre-clip gradient norm.
  // Non-finite gradients raise DivergenceError before anything changes.
  double step();
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  ParamStore* params_;
  AdamConfig config_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  long t_ = 0;
};

}  // namespace dialogen::nn
