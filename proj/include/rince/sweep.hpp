#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rince/probe.hpp"
#include "rince/trainer.hpp"

namespace rince {

// One loss level of the sweep grid: InfoNCE or RINCE at a fixed q.
struct LossLevel {
  bool infonce = false;
  double q = 0.5;

  std::string label() const { return infonce ? "infonce" : "rince"; }
};

struct SweepSpec {
  std::vector<LossLevel> loss_levels;
  std::vector<double> eta_values;
  std::vector<std::uint64_t> seeds;
  TrainConfig base;
  int audit_size = 512;

  void validate() const {
    if (loss_levels.empty() || eta_values.empty() || seeds.empty())
      throw invalid_parameter("SweepSpec: grid must be nonempty");
    base.validate();
  }
};

struct SweepRow {
  std::string loss;
  double q = 0.0;
  double lambda = 0.0;
  double eta = 0.0;
  std::string noise_kind;
  std::uint64_t seed = 0;
  double probe_acc = 0.0;
  double auroc = 0.0;
  double final_loss = 0.0;
  std::string status = "ok";
  // In-memory extras (not serialized): end-of-training audit score means.
  double audit_mean_clean = 0.0;
  double audit_mean_noisy = 0.0;
};

namespace detail {

inline SweepRow run_sweep_cell(const SweepSpec& spec, const LossLevel& level, double eta,
                               std::uint64_t seed) {
  TrainConfig cfg = spec.base;
  cfg.loss = level.infonce ? LossKind::kInfoNce : LossKind::kRince;
  if (!level.infonce) cfg.rince.q = level.q;
  cfg.noise.eta = eta;
  cfg.seed = seed;

  SweepRow row;
  row.loss = level.label();
  row.q = level.infonce ? 0.0 : level.q;
  row.lambda = cfg.rince.lambda;
  row.eta = eta;
  row.noise_kind = to_string(cfg.noise.kind);
  row.seed = seed;
  row.auroc = std::nan("");
  row.audit_mean_clean = std::nan("");
  row.audit_mean_noisy = std::nan("");
  try {
    TrainOutput out = train_contrastive(cfg);
    row.final_loss = out.history.epochs.back().mean_loss;

    EmbeddingBatch emb = out.encoder.forward(out.dataset.samples);
    ProbeConfig pc;
    pc.split_seed = substream_seed(seed, "probe");
    ProbeResult probe = linear_probe(emb.rows, out.dataset.labels, pc);
    row.probe_acc = probe.accuracy;

    // Audit the pairs the run actually trained on (mixture: the persistent
    // pair table); other noise kinds draw a fresh flagged batch.
    Rng audit_rng = substream(seed, "audit");
    PairBatch audit_batch;
    if (cfg.noise.kind == NoiseKind::kMixture) {
      audit_batch = realize_pair_batch(out.dataset, out.pair_table, audit_rng);
    } else if (cfg.noise.kind == NoiseKind::kLabelFlip) {
      audit_batch = sample_label_noise_batch(out.dataset, spec.audit_size, out.noisy_labels,
                                             audit_rng);
    } else {
      PairBatch clean = sample_pair_batch(out.dataset, spec.audit_size, 0.0, audit_rng);
      audit_batch = corrupt_views(clean, cfg.noise.eta, audit_rng);
    }
    try {
      AuditResult audit = positive_score_audit(out.encoder, audit_batch);
      row.auroc = audit.auroc;
      row.audit_mean_clean = audit.mean_clean;
      row.audit_mean_noisy = audit.mean_noisy;
    } catch (const insufficient_classes&) {
      // eta = 0 cells have no noisy pairs; the audit stays nan.
    }
  } catch (const training_diverged& e) {
    row.status = std::string("diverged@") + std::to_string(e.epoch);
    row.probe_acc = std::nan("");
    row.final_loss = std::nan("");
  }
  return row;
}

}  // namespace detail

// Runs the q x eta x seed grid. Cells are independent; `jobs` threads pick
// cells off a shared counter and write into a preallocated slot, so the
// result table is identical for any thread count.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, int jobs = 1) {
  spec.validate();
  struct Cell {
    LossLevel level;
    double eta;
    std::uint64_t seed;
  };
  std::vector<Cell> cells;
  for (const LossLevel& level : spec.loss_levels)
    for (double eta : spec.eta_values)
      for (std::uint64_t seed : spec.seeds) cells.push_back({level, eta, seed});

  std::vector<SweepRow> rows(cells.size());
  if (jobs < 1) jobs = 1;
  jobs = std::min<int>(jobs, static_cast<int>(cells.size()));
  if (jobs == 1) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      rows[i] = detail::run_sweep_cell(spec, cells[i].level, cells[i].eta, cells[i].seed);
  } else {
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
      while (true) {
        std::size_t i = next.fetch_add(1);
        if (i >= cells.size()) return;
        rows[i] = detail::run_sweep_cell(spec, cells[i].level, cells[i].eta, cells[i].seed);
      }
    };
    std::vector<std::thread> pool;
    for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

inline std::string sweep_csv_header() {
  return "loss,q,lambda,eta,noise_kind,seed,probe_acc,auroc,final_loss,status";
}

inline std::string sweep_csv_row(const SweepRow& r) {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%s,%llu,%.17g,%.17g,%.17g,%s",
                r.loss.c_str(), r.q, r.lambda, r.eta, r.noise_kind.c_str(),
                static_cast<unsigned long long>(r.seed), r.probe_acc, r.auroc, r.final_loss,
                r.status.c_str());
  return buf;
}

inline void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open results CSV for writing: " + path);
  out << sweep_csv_header() << "\n";
  for (const auto& r : rows) out << sweep_csv_row(r) << "\n";
}

inline std::vector<SweepRow> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty results CSV: " + path);
  if (line != sweep_csv_header())
    throw std::runtime_error("unexpected results CSV header in " + path);
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    SweepRow r;
    auto next = [&]() {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short row in " + path);
      return tok;
    };
    r.loss = next();
    r.q = std::stod(next());
    r.lambda = std::stod(next());
    r.eta = std::stod(next());
    r.noise_kind = next();
    r.seed = std::stoull(next());
    r.probe_acc = std::stod(next());
    r.auroc = std::stod(next());
    r.final_loss = std::stod(next());
    r.status = next();
    rows.push_back(r);
  }
  return rows;
}

struct ReportRow {
  std::string loss;
  double q = 0.0;
  double eta = 0.0;
  int runs = 0;
  double acc_mean = 0.0;
  double acc_std = 0.0;
  double auroc_mean = 0.0;
  double auroc_std = 0.0;
  double final_loss_mean = 0.0;
};

namespace detail {

struct MeanStd {
  double mean = std::nan("");
  double sd = std::nan("");
  int n = 0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd m;
  std::vector<double> v;
  for (double x : xs)
    if (std::isfinite(x)) v.push_back(x);
  m.n = static_cast<int>(v.size());
  if (v.empty()) return m;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  m.mean = mean;
  m.sd = v.size() > 1 ? std::sqrt(var / (v.size() - 1)) : 0.0;
  return m;
}

}  // namespace detail

// Mean +/- sample std per (loss level, eta) cell, in grid order.
inline std::vector<ReportRow> aggregate_sweep(const std::vector<SweepRow>& rows) {
  std::vector<ReportRow> report;
  auto key_of = [](const SweepRow& r) { return r.loss + "/" + std::to_string(r.q); };
  std::vector<std::pair<std::string, double>> seen;  // (loss key, eta) in order
  for (const auto& r : rows) {
    std::pair<std::string, double> key{key_of(r), r.eta};
    if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
    seen.push_back(key);
    std::vector<double> accs, aurocs, losses;
    int runs = 0;
    for (const auto& s : rows) {
      if (key_of(s) != key.first || s.eta != key.second) continue;
      ++runs;
      accs.push_back(s.probe_acc);
      aurocs.push_back(s.auroc);
      losses.push_back(s.final_loss);
    }
    ReportRow out;
    out.loss = r.loss;
    out.q = r.q;
    out.eta = r.eta;
    out.runs = runs;
    auto a = detail::mean_std(accs);
    auto u = detail::mean_std(aurocs);
    auto l = detail::mean_std(losses);
    out.acc_mean = a.mean;
    out.acc_std = a.sd;
    out.auroc_mean = u.mean;
    out.auroc_std = u.sd;
    out.final_loss_mean = l.mean;
    report.push_back(out);
  }
  return report;
}

inline void write_report_csv(const std::vector<ReportRow>& rows, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report CSV for writing: " + path);
  out << "loss,q,eta,runs,acc_mean,acc_std,auroc_mean,auroc_std,final_loss_mean\n";
  char buf[320];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%.17g",
                  r.loss.c_str(), r.q, r.eta, r.runs, r.acc_mean, r.acc_std, r.auroc_mean,
                  r.auroc_std, r.final_loss_mean);
    out << buf << "\n";
  }
}

// Gnuplot-friendly columns: one row per eta, one accuracy-mean column per
// loss level, in first-appearance order.
inline void write_report_dat(const std::vector<ReportRow>& rows, const std::string& path) {
  std::vector<std::string> levels;
  std::vector<double> etas;
  auto label_of = [](const ReportRow& r) {
    char buf[64];
    if (r.loss == "infonce") return std::string("infonce");
    std::snprintf(buf, sizeof(buf), "q=%g", r.q);
    return std::string(buf);
  };
  for (const auto& r : rows) {
    std::string lab = label_of(r);
    if (std::find(levels.begin(), levels.end(), lab) == levels.end()) levels.push_back(lab);
    if (std::find(etas.begin(), etas.end(), r.eta) == etas.end()) etas.push_back(r.eta);
  }
  std::sort(etas.begin(), etas.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open report dat for writing: " + path);
  out << "# eta";
  for (const auto& lab : levels) out << " " << lab;
  out << "\n";
  char buf[64];
  for (double eta : etas) {
    std::snprintf(buf, sizeof(buf), "%g", eta);
    out << buf;
    for (const auto& lab : levels) {
      double val = std::nan("");
      for (const auto& r : rows)
        if (label_of(r) == lab && r.eta == eta) val = r.acc_mean;
      std::snprintf(buf, sizeof(buf), " %.6f", val);
      out << buf;
    }
    out << "\n";
  }
}

}  // namespace rince
