#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "rince/common.hpp"

namespace rince {

// One positive score and K >= 1 negative scores, already divided by the
// temperature at construction time. Every loss in this module consumes this.
struct ScoreBatch {
  double s_plus = 0.0;
  std::vector<double> s_minus;

  int k() const { return static_cast<int>(s_minus.size()); }

  void validate() const {
    if (s_minus.empty()) throw invalid_input("ScoreBatch: K must be >= 1");
    require_finite(s_plus, "ScoreBatch.s_plus");
    for (double s : s_minus) require_finite(s, "ScoreBatch.s_minus");
  }
};

struct RinceParams {
  double q = 0.5;
  double lambda = 0.01;
  double q_start = 0.01;
  double q_end = 0.4;

  void validate() const {
    if (!(q > 0.0) || q > 1.0) throw invalid_parameter("RinceParams: q must be in (0,1]");
    if (!(lambda > 0.0) || lambda > 1.0)
      throw invalid_parameter("RinceParams: lambda must be in (0,1]");
    if (!(q_start > 0.0) || q_start > 1.0 || !(q_end > 0.0) || q_end > 1.0)
      throw invalid_parameter("RinceParams: warmup endpoints must be in (0,1]");
    if (q_start > q_end) throw invalid_parameter("RinceParams: q_start must be <= q_end");
  }
};

struct LossResult {
  double value = 0.0;
  double grad_s_plus = 0.0;
  std::vector<double> grad_s_minus;
};

// A binary classification loss l(s, y) with y in {-1,+1} and its derivative
// in s. Used by the symmetry checker and by the risk-theory module.
struct BinaryLoss {
  std::string name;
  std::function<double(double, int)> value;
  std::function<double(double, int)> deriv;
};

namespace detail {

// log(sum_i exp(x_i)) over {s_plus} + s_minus, shifted by the max term.
inline double log_sum_exp(const ScoreBatch& b) {
  double m = b.s_plus;
  for (double s : b.s_minus) m = std::max(m, s);
  double acc = std::exp(b.s_plus - m);
  for (double s : b.s_minus) acc += std::exp(s - m);
  return m + std::log(acc);
}

}  // namespace detail

// InfoNCE loss -log(exp(s+) / (exp(s+) + sum_i exp(s-_i))) with analytic
// gradients. The softmax probabilities give grad(s+) = p+ - 1 and
// grad(s-_i) = p_i, so the gradient entries always sum to zero.
inline LossResult info_nce_with_grad(const ScoreBatch& batch) {
  batch.validate();
  double lse = detail::log_sum_exp(batch);
  LossResult r;
  r.value = lse - batch.s_plus;
  double p_plus = std::exp(batch.s_plus - lse);
  r.grad_s_plus = p_plus - 1.0;
  r.grad_s_minus.resize(batch.s_minus.size());
  for (std::size_t i = 0; i < batch.s_minus.size(); ++i) {
    r.grad_s_minus[i] = std::exp(batch.s_minus[i] - lse);
  }
  return r;
}

// RINCE loss -exp(q*s+)/q + (lambda * (exp(s+) + sum_i exp(s-_i)))^q / q.
//
// The power term is evaluated as exp(q * (log(lambda) + logsumexp(scores)))
// so large score sums never leave log space; expm1 keeps the q -> 0 limit
// (InfoNCE + log lambda, Lemma-style) accurate to roundoff in q itself.
inline LossResult rince_with_grad(const ScoreBatch& batch, const RinceParams& params) {
  batch.validate();
  params.validate();
  const double q = params.q;
  double lse = detail::log_sum_exp(batch);
  double log_pow = std::log(params.lambda) + lse;  // log(lambda * S)

  LossResult r;
  // value = (exp(q*log_pow) - exp(q*s+)) / q, written with expm1 so the two
  // near-1 exponentials cancel before dividing by a tiny q.
  r.value = (std::expm1(q * log_pow) - std::expm1(q * batch.s_plus)) / q;

  double pow_q = std::exp(q * log_pow);  // (lambda*S)^q
  double p_plus = std::exp(batch.s_plus - lse);
  // grad(s+) = -exp(q*s+) + (lambda*S)^q * p+; regrouped around the q->0
  // limit p+ - 1 for the same cancellation reason as the value.
  r.grad_s_plus = (p_plus - 1.0) + std::expm1(q * log_pow) * p_plus - std::expm1(q * batch.s_plus);
  r.grad_s_minus.resize(batch.s_minus.size());
  for (std::size_t i = 0; i < batch.s_minus.size(); ++i) {
    r.grad_s_minus[i] = pow_q * std::exp(batch.s_minus[i] - lse);
  }
  return r;
}

// Exponential loss l(s, y) = -y * exp(s); symmetric with constant c = 0.
inline std::pair<double, double> exp_loss(double s, int y) {
  require_finite(s, "exp_loss.s");
  if (y != 1 && y != -1) throw invalid_input("exp_loss: label must be -1 or +1");
  double v = -static_cast<double>(y) * std::exp(s);
  return {v, v};
}

// Generic symmetric objective l(s+, 1) + lambda * sum_i l(s-_i, -1).
// lambda = 0 is allowed and drops the negative terms entirely.
inline double symmetric_objective(const ScoreBatch& batch, double lambda,
                                  const BinaryLoss& loss) {
  batch.validate();
  if (!(lambda >= 0.0)) throw invalid_parameter("symmetric_objective: lambda must be >= 0");
  double acc = loss.value(batch.s_plus, 1);
  if (lambda > 0.0) {
    double neg = 0.0;
    for (double s : batch.s_minus) neg += loss.value(s, -1);
    acc += lambda * neg;
  }
  return acc;
}

// Linear schedule from q_start to q_end over progress in [0, 1].
inline double q_warmup(double progress, const RinceParams& params) {
  params.validate();
  if (!(progress >= 0.0 && progress <= 1.0))
    throw invalid_parameter("q_warmup: progress must be in [0,1]");
  return params.q_start + progress * (params.q_end - params.q_start);
}

struct SymmetryResidual {
  double value_residual = 0.0;
  double grad_residual = 0.0;
};

// Measures how far a binary loss is from the symmetry condition
// l(s,1) + l(s,-1) = c. The value residual is the max deviation of the sum
// from its median across the sample points; the gradient residual is the max
// of |dl(s,1)/ds + dl(s,-1)/ds|, which must vanish for a symmetric loss.
inline SymmetryResidual symmetry_residual(const BinaryLoss& loss,
                                          const std::vector<double>& sample_points) {
  if (sample_points.size() < 2)
    throw invalid_input("symmetry_residual: need at least 2 sample points");
  std::vector<double> sums;
  sums.reserve(sample_points.size());
  SymmetryResidual r;
  for (double s : sample_points) {
    require_finite(s, "symmetry_residual.point");
    sums.push_back(loss.value(s, 1) + loss.value(s, -1));
    r.grad_residual = std::max(r.grad_residual, std::abs(loss.deriv(s, 1) + loss.deriv(s, -1)));
  }
  std::vector<double> sorted = sums;
  std::sort(sorted.begin(), sorted.end());
  std::size_t n = sorted.size();
  double median = (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (double s : sums) r.value_residual = std::max(r.value_residual, std::abs(s - median));
  return r;
}

inline BinaryLoss exponential_binary_loss() {
  return BinaryLoss{
      "exponential",
      [](double s, int y) { return -static_cast<double>(y) * std::exp(s); },
      [](double s, int y) { return -static_cast<double>(y) * std::exp(s); },
  };
}

inline BinaryLoss logistic_binary_loss() {
  return BinaryLoss{
      "logistic",
      [](double s, int y) { return std::log1p(std::exp(-static_cast<double>(y) * s)); },
      [](double s, int y) {
        double ys = static_cast<double>(y) * s;
        return -static_cast<double>(y) / (1.0 + std::exp(ys));
      },
  };
}

// Per-pair binary marginal induced by InfoNCE when the rest of the partition
// function is frozen at z0: the positive-pair term is the softmax slice
// -log(exp(s)/(exp(s)+z0)) and the negative-pair term is its complement.
// The derivative sums do not cancel, which is the asymmetry the residual
// checker is meant to expose.
inline BinaryLoss infonce_induced_binary_loss(double frozen_partition = 1.0) {
  if (!(frozen_partition > 0.0))
    throw invalid_parameter("infonce_induced_binary_loss: frozen partition must be > 0");
  double z0 = frozen_partition;
  return BinaryLoss{
      "infonce-induced",
      [z0](double s, int y) {
        return y == 1 ? std::log1p(z0 * std::exp(-s)) : std::log1p(std::exp(s) / z0);
      },
      [z0](double s, int y) {
        double es = std::exp(s);
        return y == 1 ? -z0 / (es + z0) : es / (es + z0);
      },
  };
}

}  // namespace rince
