#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <string>
#include <vector>

#include "rince/adam.hpp"
#include "rince/common.hpp"
#include "rince/encoder.hpp"
#include "rince/loss.hpp"
#include "rince/probe.hpp"
#include "rince/rng.hpp"
#include "rince/scoring.hpp"
#include "rince/synth.hpp"

namespace rince {

struct EncoderConfig {
  std::vector<int> hidden = {32};
  int embed_dim = 8;
  Activation activation = Activation::kRelu;
  double temperature = 0.5;
  int head_layers = 0;

  std::vector<int> dims(int d_in) const {
    std::vector<int> d;
    d.push_back(d_in);
    d.insert(d.end(), hidden.begin(), hidden.end());
    d.push_back(embed_dim);
    return d;
  }
};

enum class WarmupGranularity { kEpoch, kStep };

struct TrainConfig {
  LossKind loss = LossKind::kRince;
  RinceParams rince;
  bool warmup = false;
  WarmupGranularity warmup_granularity = WarmupGranularity::kEpoch;
  int epochs = 100;
  int batch_size = 64;
  AdamConfig adam;
  std::uint64_t seed = 1;
  EncoderConfig encoder;
  NoiseSpec noise;
  LatentSpec data;

  void validate() const {
    if (epochs < 1) throw invalid_parameter("TrainConfig: epochs must be >= 1");
    if (batch_size < 2) throw invalid_parameter("TrainConfig: batch size must be >= 2");
    rince.validate();
    adam.validate();
    data.validate();
    noise.validate(data.classes);
    if (!(encoder.temperature > 0.0)) throw invalid_parameter("TrainConfig: temperature > 0");
  }
};

struct EpochStats {
  double mean_loss = 0.0;
  double mean_spos_clean = 0.0;  // nan when the epoch saw no clean pair
  double mean_spos_noisy = 0.0;  // nan when the epoch saw no noisy pair
  double q = 0.0;                // 0 for InfoNCE runs
};

struct RunHistory {
  std::vector<EpochStats> epochs;
};

struct TrainOutput {
  MlpEncoder encoder;
  RunHistory history;
  Dataset dataset;
  std::vector<int> noisy_labels;          // label_flip runs only; else empty
  std::vector<PairAssignment> pair_table;  // mixture runs only; else empty
};

namespace detail {

// Training batch for one step. Mixture noise uses the run's fixed pair
// table (chunk of the epoch's shuffled order) so false positives persist
// across epochs, the way a noisily-paired dataset does; views are
// re-perturbed on every visit. The other noise kinds draw fresh batches.
inline PairBatch draw_train_batch(const Dataset& ds, const TrainConfig& cfg,
                                  const TrainOutput& run, const std::vector<int>& order,
                                  int batch_index, Rng& rng) {
  switch (cfg.noise.kind) {
    case NoiseKind::kMixture: {
      std::vector<PairAssignment> chunk(static_cast<std::size_t>(cfg.batch_size));
      for (int i = 0; i < cfg.batch_size; ++i)
        chunk[static_cast<std::size_t>(i)] =
            run.pair_table[static_cast<std::size_t>(order[static_cast<std::size_t>(
                batch_index * cfg.batch_size + i)])];
      return realize_pair_batch(ds, chunk, rng);
    }
    case NoiseKind::kLabelFlip:
      return sample_label_noise_batch(ds, cfg.batch_size, run.noisy_labels, rng);
    default: {
      PairBatch clean = sample_pair_batch(ds, cfg.batch_size, 0.0, rng);
      return corrupt_views(clean, cfg.noise.eta, rng);
    }
  }
}

inline std::vector<ParamView> encoder_param_views(MlpEncoder& enc, EncoderGradients& grads) {
  std::vector<ParamView> views;
  for (int l = 0; l < enc.layer_count(); ++l) {
    auto idx = static_cast<std::size_t>(l);
    views.push_back({enc.mutable_weights()[idx].data(), grads.weights[idx].data(),
                     static_cast<long>(grads.weights[idx].size())});
    views.push_back({enc.mutable_biases()[idx].data(), grads.biases[idx].data(),
                     static_cast<long>(grads.biases[idx].size())});
  }
  return views;
}

}  // namespace detail

// Deterministic contrastive training: Adam on the batch-mean loss over
// SimCLR-style 2N-view score batches. All randomness is drawn from named
// substreams of the config seed, so a (config, seed) pair fixes the run
// bit-for-bit.
inline TrainOutput train_contrastive(const TrainConfig& cfg) {
  cfg.validate();
  TrainOutput out;
  out.dataset = generate_dataset(cfg.data, cfg.seed);
  if (cfg.noise.kind == NoiseKind::kLabelFlip) {
    Rng flip_rng = substream(cfg.seed, "noise/flip");
    std::vector<int> confusion =
        cfg.noise.confusion.empty() ? adjacent_confusion(cfg.data.classes) : cfg.noise.confusion;
    out.noisy_labels = flip_labels(out.dataset.labels, cfg.noise.eta, confusion, flip_rng).labels;
  }

  if (cfg.noise.kind == NoiseKind::kMixture) {
    Rng pairing_rng = substream(cfg.seed, "noise/pairing");
    out.pair_table =
        sample_pair_assignments(out.dataset, out.dataset.size(), cfg.noise.eta, pairing_rng);
  }

  Rng init_rng = substream(cfg.seed, "init");
  MlpEncoder enc(cfg.encoder.dims(cfg.data.dim), cfg.encoder.activation,
                 cfg.encoder.temperature, init_rng, cfg.encoder.head_layers);
  AdamOptimizer opt(cfg.adam);

  const int n = cfg.batch_size;
  const double t = cfg.encoder.temperature;
  const std::vector<int> pairing = two_view_pairing(n);
  const int batches_per_epoch = std::max(1, out.dataset.size() / cfg.batch_size);
  if (out.dataset.size() < cfg.batch_size)
    throw invalid_parameter("train_contrastive: dataset smaller than one batch");
  const long total_steps = static_cast<long>(cfg.epochs) * batches_per_epoch;
  long step = 0;
  RinceParams params = cfg.rince;

  std::vector<int> order(static_cast<std::size_t>(out.dataset.size()));
  for (int i = 0; i < out.dataset.size(); ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double epoch_progress = cfg.epochs > 1 ? static_cast<double>(epoch) / (cfg.epochs - 1) : 1.0;
    double loss_acc = 0.0;
    double clean_acc = 0.0, noisy_acc = 0.0;
    long clean_n = 0, noisy_n = 0;
    double q_used = cfg.loss == LossKind::kRince ? params.q : 0.0;

    Rng order_rng = substream(cfg.seed, "noise/order", static_cast<std::uint64_t>(epoch));
    order_rng.shuffle(order);

    for (int b = 0; b < batches_per_epoch; ++b, ++step) {
      if (cfg.loss == LossKind::kRince && cfg.warmup) {
        double progress = cfg.warmup_granularity == WarmupGranularity::kEpoch
                              ? epoch_progress
                              : (total_steps > 1 ? static_cast<double>(step) / (total_steps - 1)
                                                 : 1.0);
        params.q = q_warmup(progress, cfg.rince);
        q_used = params.q;
      }
      Rng batch_rng = substream(cfg.seed, "noise/batch", static_cast<std::uint64_t>(step));
      PairBatch pb = detail::draw_train_batch(out.dataset, cfg, out, order, b, batch_rng);

      ForwardCache cache_a, cache_b;
      EmbeddingBatch emb_a = enc.forward(pb.anchors, &cache_a);
      EmbeddingBatch emb_b = enc.forward(pb.views, &cache_b);
      Eigen::MatrixXd all(2 * n, cfg.encoder.embed_dim);
      all.topRows(n) = emb_a.rows;
      all.bottomRows(n) = emb_b.rows;
      Eigen::MatrixXd scores = all * all.transpose() / t;

      BatchLoss bl = batch_mean_loss(scores, pairing, cfg.loss, params);
      if (!std::isfinite(bl.value))
        throw training_diverged("train_contrastive: non-finite loss", epoch);
      loss_acc += bl.value;

      for (int i = 0; i < n; ++i) {
        double s_pos = scores(i, n + i);
        if (pb.noise_flag[static_cast<std::size_t>(i)]) {
          noisy_acc += s_pos;
          ++noisy_n;
        } else {
          clean_acc += s_pos;
          ++clean_n;
        }
      }

      Eigen::MatrixXd grad_emb = score_grad_to_embeddings(bl.grad_scores, all, t);
      EncoderGradients ga = enc.backward(cache_a, grad_emb.topRows(n));
      EncoderGradients gb = enc.backward(cache_b, grad_emb.bottomRows(n));
      for (int l = 0; l < enc.layer_count(); ++l) {
        auto idx = static_cast<std::size_t>(l);
        ga.weights[idx] += gb.weights[idx];
        ga.biases[idx] += gb.biases[idx];
      }
      opt.step(detail::encoder_param_views(enc, ga));
    }

    EpochStats st;
    st.mean_loss = loss_acc / batches_per_epoch;
    st.mean_spos_clean = clean_n > 0 ? clean_acc / clean_n : std::nan("");
    st.mean_spos_noisy = noisy_n > 0 ? noisy_acc / noisy_n : std::nan("");
    st.q = q_used;
    out.history.epochs.push_back(st);
  }
  out.encoder = std::move(enc);
  return out;
}

inline void write_history_csv(const RunHistory& history, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw std::runtime_error("cannot open history CSV for writing: " + path);
  std::fprintf(f, "epoch,mean_loss,mean_spos_clean,mean_spos_noisy,q\n");
  for (std::size_t e = 0; e < history.epochs.size(); ++e) {
    const EpochStats& s = history.epochs[e];
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g,%.17g\n", e, s.mean_loss, s.mean_spos_clean,
                 s.mean_spos_noisy, s.q);
  }
  std::fclose(f);
}

struct AuditResult {
  double mean_clean = 0.0;
  double mean_noisy = 0.0;
  double auroc = 0.0;  // of -s+ as a detector of the noise flag
};

// Positive-score noise audit: embeds the flagged pairs and computes the
// exact rank-statistic AUROC of -s+ against the noise flag (midranks for
// ties).
inline AuditResult positive_score_audit(const MlpEncoder& enc, const PairBatch& batch) {
  const int n = batch.size();
  if (n < 2) throw invalid_input("positive_score_audit: need at least 2 pairs");
  EmbeddingBatch ea = enc.forward(batch.anchors);
  EmbeddingBatch eb = enc.forward(batch.views);
  std::vector<std::pair<double, bool>> detector(static_cast<std::size_t>(n));
  double mean_clean = 0.0, mean_noisy = 0.0;
  long n_clean = 0, n_noisy = 0;
  for (int i = 0; i < n; ++i) {
    double s_pos = ea.rows.row(i).dot(eb.rows.row(i)) / enc.temperature();
    bool flag = batch.noise_flag[static_cast<std::size_t>(i)];
    detector[static_cast<std::size_t>(i)] = {-s_pos, flag};
    if (flag) {
      mean_noisy += s_pos;
      ++n_noisy;
    } else {
      mean_clean += s_pos;
      ++n_clean;
    }
  }
  if (n_clean == 0 || n_noisy == 0)
    throw insufficient_classes("positive_score_audit: both flag values must be present");
  std::sort(detector.begin(), detector.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Midrank sum over the positive (noisy) class.
  double rank_sum = 0.0;
  std::size_t i = 0;
  while (i < detector.size()) {
    std::size_t j = i;
    while (j < detector.size() && detector[j].first == detector[i].first) ++j;
    double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (std::size_t k = i; k < j; ++k)
      if (detector[k].second) rank_sum += midrank;
    i = j;
  }
  AuditResult r;
  r.mean_clean = mean_clean / n_clean;
  r.mean_noisy = mean_noisy / n_noisy;
  double u = rank_sum - 0.5 * static_cast<double>(n_noisy) * (n_noisy + 1);
  r.auroc = u / (static_cast<double>(n_noisy) * static_cast<double>(n_clean));
  return r;
}

}  // namespace rince
