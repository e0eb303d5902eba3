#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rince/common.hpp"
#include "rince/encoder.hpp"
#include "rince/loss.hpp"

namespace rince {

// Entry (i, j) = <emb_a[i], emb_b[j]> / t.
inline Eigen::MatrixXd pair_score_matrix(const EmbeddingBatch& emb_a,
                                         const EmbeddingBatch& emb_b, double t) {
  if (!(t > 0.0)) throw invalid_parameter("pair_score_matrix: temperature must be > 0");
  if (emb_a.rows.cols() != emb_b.rows.cols())
    throw invalid_input("pair_score_matrix: embedding dims differ");
  return emb_a.rows * emb_b.rows.transpose() / t;
}

// Positive-partner map for the SimCLR two-view layout [A; B]: row i pairs
// with row i + N (mod 2N).
inline std::vector<int> two_view_pairing(int n_pairs) {
  std::vector<int> pairing(static_cast<std::size_t>(2 * n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    pairing[static_cast<std::size_t>(i)] = i + n_pairs;
    pairing[static_cast<std::size_t>(i + n_pairs)] = i;
  }
  return pairing;
}

// In-batch score assembly over 2N views. For each anchor the positive is the
// partner score and the negatives are the 2N-2 remaining scores selected by
// index; self-pair scores never enter, no constant-subtraction shortcut.
inline std::vector<ScoreBatch> assemble_score_batches(const Eigen::MatrixXd& scores,
                                                      const std::vector<int>& pairing) {
  const int n = static_cast<int>(scores.rows());
  if (scores.cols() != n) throw invalid_input("assemble_score_batches: matrix must be square");
  if (static_cast<int>(pairing.size()) != n)
    throw invalid_input("assemble_score_batches: pairing size mismatch");
  if (n < 4) throw batch_too_small("assemble_score_batches: need at least 2 pairs (4 views)");
  for (int i = 0; i < n; ++i) {
    int p = pairing[static_cast<std::size_t>(i)];
    if (p < 0 || p >= n || p == i || pairing[static_cast<std::size_t>(p)] != i)
      throw invalid_input("assemble_score_batches: pairing must be an involution");
  }
  std::vector<ScoreBatch> batches(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScoreBatch& b = batches[static_cast<std::size_t>(i)];
    b.s_plus = scores(i, pairing[static_cast<std::size_t>(i)]);
    b.s_minus.reserve(static_cast<std::size_t>(n - 2));
    for (int j = 0; j < n; ++j) {
      if (j == i || j == pairing[static_cast<std::size_t>(i)]) continue;
      b.s_minus.push_back(scores(i, j));
    }
  }
  return batches;
}

// One-sided variant: anchors are the rows of A only, the positive is the
// matching row of B and the negatives are the other N-1 rows of B (K = N-1).
inline std::vector<ScoreBatch> assemble_one_sided(const Eigen::MatrixXd& cross_scores) {
  const int n = static_cast<int>(cross_scores.rows());
  if (cross_scores.cols() != n) throw invalid_input("assemble_one_sided: matrix must be square");
  if (n < 2) throw batch_too_small("assemble_one_sided: need at least 2 pairs");
  std::vector<ScoreBatch> batches(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ScoreBatch& b = batches[static_cast<std::size_t>(i)];
    b.s_plus = cross_scores(i, i);
    b.s_minus.reserve(static_cast<std::size_t>(n - 1));
    for (int j = 0; j < n; ++j) {
      if (j != i) b.s_minus.push_back(cross_scores(i, j));
    }
  }
  return batches;
}

enum class LossKind { kInfoNce, kRince };

// Mean loss over assembled anchors plus its gradient pushed back onto the
// score matrix (diagonal stays zero: self pairs are masked out upstream).
struct BatchLoss {
  double value = 0.0;
  Eigen::MatrixXd grad_scores;
};

inline BatchLoss batch_mean_loss(const Eigen::MatrixXd& scores, const std::vector<int>& pairing,
                                 LossKind kind, const RinceParams& params) {
  auto batches = assemble_score_batches(scores, pairing);
  const int n = static_cast<int>(scores.rows());
  BatchLoss out;
  out.grad_scores = Eigen::MatrixXd::Zero(n, n);
  const double w = 1.0 / static_cast<double>(n);
  for (int i = 0; i < n; ++i) {
    LossResult r = kind == LossKind::kInfoNce ? info_nce_with_grad(batches[static_cast<std::size_t>(i)])
                                              : rince_with_grad(batches[static_cast<std::size_t>(i)], params);
    out.value += w * r.value;
    out.grad_scores(i, pairing[static_cast<std::size_t>(i)]) += w * r.grad_s_plus;
    int k = 0;
    for (int j = 0; j < n; ++j) {
      if (j == i || j == pairing[static_cast<std::size_t>(i)]) continue;
      out.grad_scores(i, j) += w * r.grad_s_minus[static_cast<std::size_t>(k++)];
    }
  }
  return out;
}

// With M = E E^T / t, dL/dE = (G + G^T) E / t.
inline Eigen::MatrixXd score_grad_to_embeddings(const Eigen::MatrixXd& grad_scores,
                                                const Eigen::MatrixXd& embeddings, double t) {
  return (grad_scores + grad_scores.transpose()) * embeddings / t;
}

}  // namespace rince
