#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rince/common.hpp"
#include "rince/rng.hpp"

namespace rince {

struct ProbeConfig {
  int max_iterations = 500;
  double grad_tolerance = 1e-5;
  double train_fraction = 0.8;
  std::uint64_t split_seed = 0;
};

struct ProbeResult {
  double accuracy = 0.0;               // held-out top-1
  std::vector<double> per_class;       // held-out accuracy per class
  Eigen::MatrixXd weights;             // (d+1) x C, bias in the last row
  std::vector<double> loss_trace;      // training loss per accepted iterate
};

namespace detail {

inline double probe_loss_and_grad(const Eigen::MatrixXd& feats, const std::vector<int>& labels,
                                  const std::vector<int>& idx, const Eigen::MatrixXd& w,
                                  Eigen::MatrixXd* grad) {
  const int classes = static_cast<int>(w.cols());
  const int d = static_cast<int>(w.rows()) - 1;
  if (grad) grad->setZero(w.rows(), w.cols());
  double loss = 0.0;
  Eigen::VectorXd logits(classes);
  for (int i : idx) {
    logits = w.topRows(d).transpose() * feats.row(i).transpose() + w.row(d).transpose();
    double m = logits.maxCoeff();
    Eigen::VectorXd p = (logits.array() - m).exp();
    double z = p.sum();
    p /= z;
    int y = labels[static_cast<std::size_t>(i)];
    loss += m + std::log(z) - logits(y);
    if (grad) {
      p(y) -= 1.0;
      grad->topRows(d) += feats.row(i).transpose() * p.transpose();
      grad->row(d) += p.transpose();
    }
  }
  double inv = 1.0 / static_cast<double>(idx.size());
  if (grad) *grad *= inv;
  return loss * inv;
}

}  // namespace detail

// Multinomial logistic regression on frozen features, trained by full-batch
// gradient descent with Armijo backtracking; the loss trace is therefore
// non-increasing. Evaluation uses a seeded 80/20 split.
inline ProbeResult linear_probe(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                                const ProbeConfig& cfg) {
  if (features.rows() != static_cast<int>(labels.size()))
    throw invalid_input("linear_probe: feature/label count mismatch");
  if (labels.empty()) throw invalid_input("linear_probe: empty input");
  int classes = 0;
  for (int y : labels) {
    if (y < 0) throw invalid_input("linear_probe: negative label");
    classes = std::max(classes, y + 1);
  }
  if (classes < 2) throw invalid_input("linear_probe: need at least 2 classes");

  const int n = static_cast<int>(features.rows());
  const int d = static_cast<int>(features.cols());
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(cfg.split_seed);
  rng.shuffle(order);
  int n_train = std::max(1, static_cast<int>(cfg.train_fraction * n));
  if (n_train >= n) n_train = n - 1;
  std::vector<int> train(order.begin(), order.begin() + n_train);
  std::vector<int> test(order.begin() + n_train, order.end());

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(d + 1, classes);
  Eigen::MatrixXd grad(d + 1, classes);
  ProbeResult out;
  double loss = detail::probe_loss_and_grad(features, labels, train, w, &grad);
  out.loss_trace.push_back(loss);
  double step = 1.0;
  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    double gnorm = grad.cwiseAbs().maxCoeff();
    if (gnorm <= cfg.grad_tolerance) break;
    double g2 = grad.squaredNorm();
    step = std::min(step * 2.0, 64.0);
    // Armijo backtracking on the full-batch objective.
    while (true) {
      Eigen::MatrixXd trial = w - step * grad;
      double trial_loss = detail::probe_loss_and_grad(features, labels, train, trial, nullptr);
      if (trial_loss <= loss - 1e-4 * step * g2) {
        w = trial;
        loss = trial_loss;
        break;
      }
      step *= 0.5;
      if (step < 1e-12) break;
    }
    if (step < 1e-12) break;
    loss = detail::probe_loss_and_grad(features, labels, train, w, &grad);
    out.loss_trace.push_back(loss);
  }

  out.weights = w;
  std::vector<int> correct(static_cast<std::size_t>(classes), 0);
  std::vector<int> total(static_cast<std::size_t>(classes), 0);
  int hits = 0;
  for (int i : test) {
    Eigen::VectorXd logits =
        w.topRows(d).transpose() * features.row(i).transpose() + w.row(d).transpose();
    int pred = 0;
    logits.maxCoeff(&pred);
    int y = labels[static_cast<std::size_t>(i)];
    ++total[static_cast<std::size_t>(y)];
    if (pred == y) {
      ++hits;
      ++correct[static_cast<std::size_t>(y)];
    }
  }
  out.accuracy = test.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(test.size());
  out.per_class.resize(static_cast<std::size_t>(classes), 0.0);
  for (int c = 0; c < classes; ++c)
    out.per_class[static_cast<std::size_t>(c)] =
        total[static_cast<std::size_t>(c)] > 0
            ? static_cast<double>(correct[static_cast<std::size_t>(c)]) / total[static_cast<std::size_t>(c)]
            : 0.0;
  return out;
}

}  // namespace rince
