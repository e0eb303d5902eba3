#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "rince/common.hpp"
#include "rince/loss.hpp"
#include "rince/rng.hpp"

namespace rince {

struct LabeledPoint1D {
  double x = 0.0;
  int y = 1;          // in {-1, +1}
  double eta_x = 0.0;  // per-point flip probability, < 0.5
};

// Step classifier with scores in {-s_max, +s_max}.
struct ThresholdHypothesis {
  double threshold = 0.0;
  int polarity = 1;  // in {-1, +1}
  double s_max = 1.0;

  double score(double x) const {
    return static_cast<double>(polarity) * s_max * (x >= threshold ? 1.0 : -1.0);
  }
};

inline double risk_exact(const ThresholdHypothesis& f, const std::vector<LabeledPoint1D>& data,
                         const BinaryLoss& loss) {
  if (data.empty()) throw invalid_input("risk_exact: empty data");
  double acc = 0.0;
  for (const auto& p : data) acc += loss.value(f.score(p.x), p.y);
  return acc / static_cast<double>(data.size());
}

// Noisy risk with the flip expectation taken in closed form per point:
// (1 - eta_x) l(f(x), y) + eta_x l(f(x), -y). No sampling involved.
inline double noisy_risk_exact(const ThresholdHypothesis& f,
                               const std::vector<LabeledPoint1D>& data, const BinaryLoss& loss) {
  if (data.empty()) throw invalid_input("noisy_risk_exact: empty data");
  double acc = 0.0;
  for (const auto& p : data) {
    if (!(p.eta_x >= 0.0 && p.eta_x < 0.5))
      throw assumption_violation("noisy_risk_exact: eta_x must be in [0, 0.5)");
    double s = f.score(p.x);
    acc += (1.0 - p.eta_x) * loss.value(s, p.y) + p.eta_x * loss.value(s, -p.y);
  }
  return acc / static_cast<double>(data.size());
}

// All thresholds the data can distinguish: below the minimum, between every
// adjacent pair of distinct points, above the maximum; each with both
// polarities.
inline std::vector<ThresholdHypothesis> induced_threshold_grid(
    const std::vector<LabeledPoint1D>& data, double s_max) {
  if (data.empty()) throw invalid_input("induced_threshold_grid: empty data");
  std::vector<double> xs;
  xs.reserve(data.size());
  for (const auto& p : data) xs.push_back(p.x);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::vector<double> cuts;
  cuts.push_back(xs.front() - 1.0);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) cuts.push_back(0.5 * (xs[i] + xs[i + 1]));
  cuts.push_back(xs.back() + 1.0);
  std::vector<ThresholdHypothesis> grid;
  for (double c : cuts)
    for (int pol : {1, -1}) grid.push_back(ThresholdHypothesis{c, pol, s_max});
  return grid;
}

namespace detail {

// Subset of points at or above a threshold, as a bitmask signature.
inline std::vector<bool> cut_signature(const std::vector<LabeledPoint1D>& data, double threshold) {
  std::vector<bool> sig(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) sig[i] = data[i].x >= threshold;
  return sig;
}

}  // namespace detail

struct CorollaryReport {
  double epsilon = 0.0;                 // optimal clean risk over the grid
  double clean_risk_of_noisy_min = 0.0;  // R(f*_eta)
  double bound = 0.0;                   // (eps + 2 eta_max e^{s_max}) / (1 - 2 eta_max)
  double eta_max = 0.0;
  bool holds = false;
};

// Exhaustive check of the noisy-risk guarantee for the exponential loss on a
// finite threshold class. The grid must realize every dichotomy the data
// induces, which is validated before minimizing.
inline CorollaryReport corollary_bound_check(const std::vector<LabeledPoint1D>& data,
                                             const std::vector<ThresholdHypothesis>& grid,
                                             double s_max) {
  if (data.empty()) throw invalid_input("corollary_bound_check: empty data");
  if (grid.empty()) throw invalid_spec("corollary_bound_check: empty hypothesis grid");
  for (const auto& h : grid) {
    if (h.s_max != s_max) throw invalid_spec("corollary_bound_check: grid s_max mismatch");
    if (h.polarity != 1 && h.polarity != -1)
      throw invalid_spec("corollary_bound_check: bad polarity");
  }
  // Coverage: every data-induced cut must appear in the grid.
  {
    std::vector<std::vector<bool>> grid_sigs;
    for (const auto& h : grid) grid_sigs.push_back(detail::cut_signature(data, h.threshold));
    auto covered = [&](const std::vector<bool>& sig) {
      return std::find(grid_sigs.begin(), grid_sigs.end(), sig) != grid_sigs.end();
    };
    for (const auto& h : induced_threshold_grid(data, s_max)) {
      if (!covered(detail::cut_signature(data, h.threshold)))
        throw invalid_spec("corollary_bound_check: grid does not cover the induced thresholds");
    }
    bool has_pos = false, has_neg = false;
    for (const auto& h : grid) (h.polarity == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg)
      throw invalid_spec("corollary_bound_check: grid must include both polarities");
  }

  BinaryLoss loss = exponential_binary_loss();
  CorollaryReport r;
  double best_clean = 0.0, best_noisy = 0.0;
  const ThresholdHypothesis* clean_min = nullptr;
  const ThresholdHypothesis* noisy_min = nullptr;
  for (const auto& h : grid) {
    double rc = risk_exact(h, data, loss);
    double rn = noisy_risk_exact(h, data, loss);
    if (!clean_min || rc < best_clean) {
      best_clean = rc;
      clean_min = &h;
    }
    if (!noisy_min || rn < best_noisy) {
      best_noisy = rn;
      noisy_min = &h;
    }
  }
  for (const auto& p : data) r.eta_max = std::max(r.eta_max, p.eta_x);
  r.epsilon = best_clean;
  r.clean_risk_of_noisy_min = risk_exact(*noisy_min, data, loss);
  r.bound = (r.epsilon + 2.0 * r.eta_max * std::exp(s_max)) / (1.0 - 2.0 * r.eta_max);
  r.holds = r.clean_risk_of_noisy_min <= r.bound + 1e-12;
  return r;
}

struct RiskSuiteRow {
  std::uint64_t seed = 0;
  int n = 0;
  double eta_max = 0.0;
  double epsilon = 0.0;
  double noisy_min_clean_risk = 0.0;
  double bound = 0.0;
  bool holds = false;
};

// Randomized corollary suite: datasets of up to max_n points with per-point
// noise rates uniform in [0, eta_cap], exhaustively minimized over the
// induced grid.
inline std::vector<RiskSuiteRow> run_risk_suite(int instances, int max_n, double eta_cap,
                                                double s_max, std::uint64_t seed) {
  if (instances < 1) throw invalid_parameter("run_risk_suite: need instances >= 1");
  if (!(eta_cap >= 0.0 && eta_cap < 0.5))
    throw invalid_parameter("run_risk_suite: eta_cap must be in [0, 0.5)");
  std::vector<RiskSuiteRow> rows;
  for (int inst = 0; inst < instances; ++inst) {
    Rng rng = substream(seed, "risk", static_cast<std::uint64_t>(inst));
    int n = rng.uniform_int(4, max_n);
    std::vector<LabeledPoint1D> data(static_cast<std::size_t>(n));
    for (auto& p : data) {
      p.x = rng.uniform(-2.0, 2.0);
      // Mix of threshold-consistent labels and contamination so the optimal
      // clean risk is usually nonzero.
      double split = rng.uniform(-1.0, 1.0);
      p.y = (p.x >= split) == (rng.uniform() < 0.85) ? 1 : -1;
      p.eta_x = rng.uniform(0.0, eta_cap);
    }
    auto grid = induced_threshold_grid(data, s_max);
    CorollaryReport rep = corollary_bound_check(data, grid, s_max);
    RiskSuiteRow row;
    row.seed = substream_seed(seed, "risk", static_cast<std::uint64_t>(inst));
    row.n = n;
    row.eta_max = rep.eta_max;
    row.epsilon = rep.epsilon;
    row.noisy_min_clean_risk = rep.clean_risk_of_noisy_min;
    row.bound = rep.bound;
    row.holds = rep.holds;
    rows.push_back(row);
  }
  return rows;
}

inline std::string risk_csv_header() {
  return "seed,n,eta_max,epsilon,noisy_min_clean_risk,bound,holds";
}

inline std::string risk_csv_row(const RiskSuiteRow& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%llu,%d,%.17g,%.17g,%.17g,%.17g,%d",
                static_cast<unsigned long long>(r.seed), r.n, r.eta_max, r.epsilon,
                r.noisy_min_clean_risk, r.bound, r.holds ? 1 : 0);
  return buf;
}

}  // namespace rince
