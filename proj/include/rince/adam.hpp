#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rince/common.hpp"

namespace rince {

struct AdamConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-6;  // decoupled: applied to weights, not gradients
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw invalid_parameter("Adam: learning rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw invalid_parameter("Adam: weight decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
      throw invalid_parameter("Adam: betas must be in [0,1)");
  }
};

// Flat view of one parameter block and its gradient.
struct ParamView {
  double* value;
  const double* grad;
  long size;
};

// Adam with bias-corrected moments and decoupled weight decay, over an
// arbitrary list of flat parameter blocks. Block shapes must not change
// between steps.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const AdamConfig& cfg) : cfg_(cfg) { cfg.validate(); }

  void step(const std::vector<ParamView>& params) {
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.push_back(Eigen::ArrayXd::Zero(p.size));
        v_.push_back(Eigen::ArrayXd::Zero(p.size));
      }
    }
    if (params.size() != m_.size()) throw invalid_input("Adam.step: block count changed");
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].size != m_[i].size()) throw invalid_input("Adam.step: block size changed");
      Eigen::Map<Eigen::ArrayXd> p(params[i].value, params[i].size);
      Eigen::Map<const Eigen::ArrayXd> g(params[i].grad, params[i].size);
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g * g;
      p -= cfg_.learning_rate * ((m_[i] / bc1) / ((v_[i] / bc2).sqrt() + cfg_.eps));
      if (cfg_.weight_decay > 0.0) p -= cfg_.learning_rate * cfg_.weight_decay * p;
    }
  }

 private:
  AdamConfig cfg_;
  int t_ = 0;
  std::vector<Eigen::ArrayXd> m_;
  std::vector<Eigen::ArrayXd> v_;
};

}  // namespace rince
