#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "rince/common.hpp"
#include "rince/encoder.hpp"
#include "rince/loss.hpp"
#include "rince/rng.hpp"
#include "rince/wasserstein.hpp"

namespace rince {

// Variational MI lower bound: -mean(InfoNCE) + log K. All batches must share
// the same number of negatives.
inline double mi_lower_bound(const std::vector<ScoreBatch>& batches) {
  if (batches.empty()) throw invalid_input("mi_lower_bound: no batches");
  const int k = batches.front().k();
  double mean = 0.0;
  for (const ScoreBatch& b : batches) {
    if (b.k() != k) throw invalid_input("mi_lower_bound: mixed K across batches");
    mean += info_nce_with_grad(b).value;
  }
  mean /= static_cast<double>(batches.size());
  return std::log(static_cast<double>(k)) - mean;
}

// Largest singular value by power iteration on W^T W. Deterministic start,
// tolerance well below the 1e-6 the tests compare against an SVD oracle.
inline double spectral_norm(const Eigen::MatrixXd& w) {
  if (w.size() == 0) return 0.0;
  Rng rng(0x5eed5eedULL);
  Eigen::VectorXd v(w.cols());
  for (int i = 0; i < v.size(); ++i) v(i) = rng.normal();
  v.normalize();
  double sigma = 0.0;
  for (int iter = 0; iter < 2000; ++iter) {
    Eigen::VectorXd wv = w * v;
    double s = wv.norm();
    if (s == 0.0) return 0.0;
    Eigen::VectorXd next = w.transpose() * wv;
    double nn = next.norm();
    if (nn == 0.0) return s;
    v = next / nn;
    if (std::abs(s - sigma) <= 1e-14 * std::max(1.0, s) && iter > 4) return s;
    sigma = s;
  }
  return sigma;
}

// Upper bound on the Lipschitz constant of the (projection head of the)
// encoder: product of layer operator norms, activations counted 1-Lipschitz,
// times the unit-normalization factor 1/r for the smallest pre-normalization
// norm r observed on the data of interest (callers that have not measured a
// radius pass the default 1).
inline double lipschitz_upper_bound(const MlpEncoder& enc, bool head_layers_only,
                                    double min_pre_norm = 1.0) {
  if (!(min_pre_norm > 0.0))
    throw invalid_parameter("lipschitz_upper_bound: min_pre_norm must be > 0");
  double lip = 1.0;
  int first = head_layers_only ? enc.layer_count() - enc.head_layers() : 0;
  for (int l = first; l < enc.layer_count(); ++l)
    lip *= spectral_norm(enc.weights()[static_cast<std::size_t>(l)]);
  return lip / min_pre_norm;
}

// Aligned rows of anchor/view embeddings; row i of x pairs with row i of v.
struct EmbeddingPairs {
  Eigen::MatrixXd x;
  Eigen::MatrixXd v;

  int size() const { return static_cast<int>(x.rows()); }
};

inline DiscreteDistribution pairs_to_distribution(const EmbeddingPairs& p) {
  return DiscreteDistribution::uniform(p.x, p.v);
}

// Builds the empirical product-of-marginals sample by index-shuffling the
// view column of the joint sample with a derangement.
inline EmbeddingPairs shuffle_views(const EmbeddingPairs& joint, Rng& rng) {
  EmbeddingPairs prod;
  prod.x = joint.x;
  prod.v.resizeLike(joint.v);
  std::vector<int> perm = rng.derangement(joint.size());
  for (int i = 0; i < joint.size(); ++i) prod.v.row(i) = joint.v.row(perm[static_cast<std::size_t>(i)]);
  return prod;
}

struct WdmReport {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  int k = 0;
  double t = 0.0;
  double eta = 0.0;
  double lip = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;
  bool condition_ok = false;
  double w1 = 0.0;
  double eps_stat = 0.0;  // bootstrap 99% half-width; 0 when not bootstrapped
};

// Lambda precondition of the WDM bound: lambda*K > 1-lambda in the clean
// case, lambda >= (eta*K - eta + 1) / (eta*K - eta + 1 + K) under mixture
// noise.
inline bool wdm_condition(double lambda, int k, double eta) {
  if (eta <= 0.0) return lambda * k > 1.0 - lambda;
  double a = eta * k - eta + 1.0;
  return lambda >= a / (a + static_cast<double>(k));
}

namespace detail {

// Per-anchor RINCE(q=1) values: s+ from the aligned pair, K negatives scored
// against views drawn from the marginal pool.
inline std::vector<double> rince_q1_row_values(const EmbeddingPairs& pairs,
                                               const Eigen::MatrixXd& view_pool,
                                               const RinceParams& params, int k, double t,
                                               Rng& rng) {
  std::vector<double> values(static_cast<std::size_t>(pairs.size()));
  const int pool = static_cast<int>(view_pool.rows());
  ScoreBatch b;
  b.s_minus.resize(static_cast<std::size_t>(k));
  for (int i = 0; i < pairs.size(); ++i) {
    b.s_plus = pairs.x.row(i).dot(pairs.v.row(i)) / t;
    for (int kk = 0; kk < k; ++kk)
      b.s_minus[static_cast<std::size_t>(kk)] =
          pairs.x.row(i).dot(view_pool.row(rng.uniform_int(0, pool - 1))) / t;
    values[static_cast<std::size_t>(i)] = rince_with_grad(b, params).value;
  }
  return values;
}

inline double mean_of(const std::vector<double>& v, const std::vector<int>& idx) {
  double acc = 0.0;
  for (int i : idx) acc += v[static_cast<std::size_t>(i)];
  return acc / static_cast<double>(idx.size());
}

// W1 between re-weighted sub-supports of a fixed cost matrix. Used by the
// bootstrap so the ground costs are computed once.
inline double w1_from_cost(const Eigen::MatrixXd& cost, const std::vector<int>& rows,
                           const std::vector<double>& wa, const std::vector<int>& cols,
                           const std::vector<double>& wb) {
  Eigen::MatrixXd sub(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      sub(static_cast<int>(i), static_cast<int>(j)) = cost(rows[i], cols[j]);
  Eigen::VectorXd va = Eigen::Map<const Eigen::VectorXd>(wa.data(), static_cast<int>(wa.size()));
  Eigen::VectorXd vb = Eigen::Map<const Eigen::VectorXd>(wb.data(), static_cast<int>(wb.size()));
  TransportSolver solver(sub, va, vb);
  solver.solve();
  return solver.total_cost();
}

inline void counts_to_support(const std::vector<int>& counts, int total, std::vector<int>& idx,
                              std::vector<double>& w) {
  idx.clear();
  w.clear();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      idx.push_back(static_cast<int>(i));
      w.push_back(static_cast<double>(counts[i]) / static_cast<double>(total));
    }
  }
}

}  // namespace detail

// Machine check of the WDM lower bound at q = 1. `joint` holds clean joint
// pairs, `product` the index-shuffled product pairs; the noisy lhs is the
// exact eta-mixture of the two empirical means. rhs applies the (1-eta)
// reweighting to the Lipschitz-scaled W1 between the two pushforwards.
inline WdmReport wdm_bound_check(const EmbeddingPairs& joint, const EmbeddingPairs& product,
                                 const RinceParams& params, int k, double t, double eta,
                                 Rng& rng, double lip = 1.0, int bootstrap = 0) {
  params.validate();
  if (params.q != 1.0)
    throw theorem_inapplicable("wdm_bound_check: the bound requires q = 1");
  if (joint.size() != product.size() || joint.size() < 2)
    throw invalid_input("wdm_bound_check: need equal-sized samples (>= 2)");
  if (k < 1) throw invalid_parameter("wdm_bound_check: K must be >= 1");
  if (!(t > 0.0)) throw invalid_parameter("wdm_bound_check: temperature must be > 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw invalid_parameter("wdm_bound_check: eta in [0,1]");

  const int n = joint.size();
  std::vector<double> joint_vals =
      detail::rince_q1_row_values(joint, product.v, params, k, t, rng);
  std::vector<double> prod_vals =
      detail::rince_q1_row_values(product, product.v, params, k, t, rng);

  auto lhs_of = [&](const std::vector<int>& ji, const std::vector<int>& pi) {
    return -((1.0 - eta) * detail::mean_of(joint_vals, ji) + eta * detail::mean_of(prod_vals, pi));
  };
  const double scale = lip * (1.0 - params.lambda) * std::exp(1.0 / t) / t;

  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;

  WdmReport r;
  r.lambda = params.lambda;
  r.k = k;
  r.t = t;
  r.eta = eta;
  r.lip = lip;
  r.condition_ok = wdm_condition(params.lambda, k, eta);
  Wasserstein1Result w1 =
      wasserstein1_exact(pairs_to_distribution(joint), pairs_to_distribution(product));
  r.w1 = w1.value;
  r.lhs = lhs_of(all, all);
  r.rhs = (1.0 - eta) * scale * r.w1;
  r.slack = r.rhs - r.lhs;

  if (bootstrap > 0) {
    Eigen::MatrixXd cost = pair_ground_cost(pairs_to_distribution(joint),
                                            pairs_to_distribution(product));
    std::vector<double> slacks(static_cast<std::size_t>(bootstrap));
    std::vector<int> jc(static_cast<std::size_t>(n)), pc(static_cast<std::size_t>(n));
    std::vector<int> ji, pi, jidx, pidx;
    std::vector<double> jw, pw;
    for (int b = 0; b < bootstrap; ++b) {
      std::fill(jc.begin(), jc.end(), 0);
      std::fill(pc.begin(), pc.end(), 0);
      ji.clear();
      pi.clear();
      for (int i = 0; i < n; ++i) {
        int a = rng.uniform_int(0, n - 1);
        int c = rng.uniform_int(0, n - 1);
        ++jc[static_cast<std::size_t>(a)];
        ++pc[static_cast<std::size_t>(c)];
        ji.push_back(a);
        pi.push_back(c);
      }
      detail::counts_to_support(jc, n, jidx, jw);
      detail::counts_to_support(pc, n, pidx, pw);
      double w1b = detail::w1_from_cost(cost, jidx, jw, pidx, pw);
      slacks[static_cast<std::size_t>(b)] = (1.0 - eta) * scale * w1b - lhs_of(ji, pi);
    }
    std::sort(slacks.begin(), slacks.end());
    auto quantile = [&](double p) {
      double pos = p * static_cast<double>(bootstrap - 1);
      int lo = static_cast<int>(pos);
      int hi = std::min(lo + 1, bootstrap - 1);
      double frac = pos - lo;
      return (1.0 - frac) * slacks[static_cast<std::size_t>(lo)] +
             frac * slacks[static_cast<std::size_t>(hi)];
    };
    r.eps_stat = 0.5 * (quantile(0.995) - quantile(0.005));
  }
  return r;
}

inline std::string wdm_csv_header() {
  return "seed,lambda,K,t,eta,lip,lhs,rhs,slack,condition_ok";
}

inline std::string wdm_csv_row(const WdmReport& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d",
                static_cast<unsigned long long>(r.seed), r.lambda, r.k, r.t, r.eta, r.lip, r.lhs,
                r.rhs, r.slack, r.condition_ok ? 1 : 0);
  return buf;
}

}  // namespace rince
