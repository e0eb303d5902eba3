#pragma once

#include <Eigen/Dense>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rince/common.hpp"
#include "rince/rng.hpp"

namespace rince {

// Synthetic class-clustered latent distribution on the unit sphere.
struct LatentSpec {
  int classes = 4;
  int dim = 16;
  double separation = 1.5707963267948966;  // radians; pi/2 = simplex spread
  double sigma = 0.4;                      // per-view perturbation scale
  int per_class = 100;

  void validate() const {
    if (classes < 2) throw invalid_spec("LatentSpec: need at least 2 classes");
    if (dim < 2) throw invalid_spec("LatentSpec: need dim >= 2");
    if (!(sigma >= 0.0)) throw invalid_spec("LatentSpec: sigma must be >= 0");
    if (per_class < 1) throw invalid_spec("LatentSpec: need per_class >= 1");
  }
};

enum class NoiseKind { kMixture, kLabelFlip, kCorruption };

inline NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "mixture") return NoiseKind::kMixture;
  if (s == "label_flip") return NoiseKind::kLabelFlip;
  if (s == "corruption") return NoiseKind::kCorruption;
  throw invalid_spec("unknown noise kind: " + s);
}

inline std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kMixture: return "mixture";
    case NoiseKind::kLabelFlip: return "label_flip";
    default: return "corruption";
  }
}

struct NoiseSpec {
  NoiseKind kind = NoiseKind::kMixture;
  double eta = 0.0;
  // Involution on class ids used by label_flip; empty = adjacent pairing
  // (2k <-> 2k+1, odd trailing class fixed).
  std::vector<int> confusion;

  void validate(int classes) const {
    if (!(eta >= 0.0 && eta <= 1.0)) throw invalid_spec("NoiseSpec: eta must be in [0,1]");
    if (!confusion.empty()) {
      if (static_cast<int>(confusion.size()) != classes)
        throw invalid_spec("NoiseSpec: confusion size != classes");
      for (int c = 0; c < classes; ++c) {
        int p = confusion[static_cast<std::size_t>(c)];
        if (p < 0 || p >= classes || confusion[static_cast<std::size_t>(p)] != c)
          throw invalid_spec("NoiseSpec: confusion pairing is not an involution");
      }
    }
  }
};

inline std::vector<int> adjacent_confusion(int classes) {
  std::vector<int> pairing(static_cast<std::size_t>(classes));
  for (int c = 0; c < classes; ++c) {
    int p = (c % 2 == 0) ? c + 1 : c - 1;
    pairing[static_cast<std::size_t>(c)] = p < classes ? p : c;
  }
  return pairing;
}

struct Dataset {
  Eigen::MatrixXd samples;   // N x dim, unit rows
  std::vector<int> labels;   // true class per sample
  Eigen::MatrixXd centers;   // classes x dim, unit rows
  LatentSpec spec;

  int size() const { return static_cast<int>(samples.rows()); }
};

// Anchor/view pairs with ground-truth noise flags.
struct PairBatch {
  Eigen::MatrixXd anchors;       // N x dim
  Eigen::MatrixXd views;         // N x dim
  std::vector<int> labels;       // anchor's true class
  std::vector<bool> noise_flag;  // true = false positive
  NoiseKind kind = NoiseKind::kMixture;

  int size() const { return static_cast<int>(anchors.rows()); }
};

namespace detail {

inline Eigen::VectorXd random_unit_vector(int dim, Rng& rng) {
  Eigen::VectorXd v(dim);
  double n2;
  do {
    for (int i = 0; i < dim; ++i) v(i) = rng.normal();
    n2 = v.squaredNorm();
  } while (!(n2 > 1e-24));
  return v / std::sqrt(n2);
}

// Unit-normalized center + sigma * gaussian, i.e. one "view" of a latent
// point. sigma = 0 returns the point itself.
inline Eigen::VectorXd perturb_on_sphere(const Eigen::VectorXd& point, double sigma, Rng& rng) {
  Eigen::VectorXd z = point;
  for (int i = 0; i < z.size(); ++i) z(i) += sigma * rng.normal();
  double n = z.norm();
  if (!(n > 0.0)) return point;  // measure-zero fallback
  return z / n;
}

}  // namespace detail

// Class centers: a seeded orthonormal frame blended toward its mean so the
// `separation` angle dials the spread from coincident (0) up to a regular
// simplex (pi/2). With dim < classes the frame is plain random unit vectors.
inline Eigen::MatrixXd make_class_centers(const LatentSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng = substream(seed, "data/centers");
  const int c = spec.classes;
  const int d = spec.dim;
  Eigen::MatrixXd frame(c, d);
  if (d >= c) {
    // Gram-Schmidt over seeded gaussian rows.
    for (int i = 0; i < c; ++i) {
      Eigen::VectorXd v = detail::random_unit_vector(d, rng);
      for (int j = 0; j < i; ++j) v -= v.dot(frame.row(j)) * frame.row(j).transpose();
      double n = v.norm();
      while (!(n > 1e-8)) {
        v = detail::random_unit_vector(d, rng);
        for (int j = 0; j < i; ++j) v -= v.dot(frame.row(j)) * frame.row(j).transpose();
        n = v.norm();
      }
      frame.row(i) = v.transpose() / n;
    }
  } else {
    for (int i = 0; i < c; ++i) frame.row(i) = detail::random_unit_vector(d, rng).transpose();
  }
  Eigen::RowVectorXd mean = frame.colwise().mean();
  double mean_norm = mean.norm();
  Eigen::MatrixXd centers(c, d);
  for (int i = 0; i < c; ++i) {
    Eigen::RowVectorXd radial = frame.row(i) - mean;
    double rn = radial.norm();
    if (mean_norm < 1e-12 || rn < 1e-12) {
      centers.row(i) = frame.row(i);
      continue;
    }
    centers.row(i) = std::cos(spec.separation) * (mean / mean_norm) +
                     std::sin(spec.separation) * (radial / rn);
    centers.row(i) /= centers.row(i).norm();
  }
  return centers;
}

inline Dataset generate_dataset(const LatentSpec& spec, std::uint64_t seed) {
  spec.validate();
  Dataset ds;
  ds.spec = spec;
  ds.centers = make_class_centers(spec, seed);
  const int n = spec.classes * spec.per_class;
  ds.samples.resize(n, spec.dim);
  ds.labels.resize(static_cast<std::size_t>(n));
  Rng rng = substream(seed, "data/samples");
  int row = 0;
  for (int c = 0; c < spec.classes; ++c) {
    Eigen::VectorXd center = ds.centers.row(c).transpose();
    for (int i = 0; i < spec.per_class; ++i, ++row) {
      ds.samples.row(row) = detail::perturb_on_sphere(center, spec.sigma, rng).transpose();
      ds.labels[static_cast<std::size_t>(row)] = c;
    }
  }
  return ds;
}

// One sampled row of the mixture: which sample anchors the pair, which
// sample the view comes from, and whether the pair is a false positive.
struct PairAssignment {
  int anchor = 0;
  int view = 0;
  bool noisy = false;
};

inline std::vector<PairAssignment> sample_pair_assignments(const Dataset& ds, int n, double eta,
                                                           Rng& rng) {
  if (ds.size() == 0) throw invalid_input("sample_pair_assignments: empty dataset");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw invalid_spec("sample_pair_assignments: eta must be in [0,1]");
  if (n < 1) throw invalid_input("sample_pair_assignments: need n >= 1");
  std::vector<PairAssignment> out(static_cast<std::size_t>(n));
  for (auto& p : out) {
    p.anchor = rng.uniform_int(0, ds.size() - 1);
    p.noisy = rng.uniform() < eta;
    p.view = p.noisy ? rng.uniform_int(0, ds.size() - 1) : p.anchor;
  }
  return out;
}

// Turns pair assignments into inputs by drawing fresh per-view
// perturbations.
inline PairBatch realize_pair_batch(const Dataset& ds, const std::vector<PairAssignment>& pairs,
                                    Rng& rng) {
  const int n = static_cast<int>(pairs.size());
  PairBatch b;
  b.kind = NoiseKind::kMixture;
  b.anchors.resize(n, ds.spec.dim);
  b.views.resize(n, ds.spec.dim);
  b.labels.resize(static_cast<std::size_t>(n));
  b.noise_flag.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const PairAssignment& p = pairs[static_cast<std::size_t>(i)];
    b.anchors.row(i) =
        detail::perturb_on_sphere(ds.samples.row(p.anchor).transpose(), ds.spec.sigma, rng)
            .transpose();
    b.views.row(i) =
        detail::perturb_on_sphere(ds.samples.row(p.view).transpose(), ds.spec.sigma, rng)
            .transpose();
    b.labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(p.anchor)];
    b.noise_flag[static_cast<std::size_t>(i)] = p.noisy;
  }
  return b;
}

// Mixture noise model: with probability 1-eta the pair is two independent
// views of one sample; otherwise anchor and view are views of independently
// drawn samples. The view-stream marginal is the same in both branches.
inline PairBatch sample_pair_batch(const Dataset& ds, int n, double eta, Rng& rng) {
  return realize_pair_batch(ds, sample_pair_assignments(ds, n, eta, rng), rng);
}

struct FlipResult {
  std::vector<int> labels;
  std::vector<bool> flipped;
};

// Class-dependent label noise: each label moves to its confusion partner
// with probability eta/2.
inline FlipResult flip_labels(const std::vector<int>& labels, double eta,
                              const std::vector<int>& confusion, Rng& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw invalid_spec("flip_labels: eta must be in [0,1]");
  int classes = 0;
  for (int y : labels) classes = std::max(classes, y + 1);
  if (static_cast<int>(confusion.size()) < classes)
    throw invalid_spec("flip_labels: confusion pairing too small");
  for (std::size_t c = 0; c < confusion.size(); ++c) {
    int p = confusion[c];
    if (p < 0 || p >= static_cast<int>(confusion.size()) ||
        confusion[static_cast<std::size_t>(p)] != static_cast<int>(c))
      throw invalid_spec("flip_labels: pairing is not an involution");
  }
  FlipResult out;
  out.labels = labels;
  out.flipped.assign(labels.size(), false);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (rng.uniform() < 0.5 * eta) {
      int p = confusion[static_cast<std::size_t>(labels[i])];
      if (p != labels[i]) {
        out.labels[i] = p;
        out.flipped[i] = true;
      }
    }
  }
  return out;
}

// Augmentation-noise analog: with probability eta the view row is replaced
// by a uniform random direction (no shared information with its anchor).
inline PairBatch corrupt_views(const PairBatch& batch, double eta, Rng& rng) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw invalid_spec("corrupt_views: eta must be in [0,1]");
  PairBatch out = batch;
  out.kind = NoiseKind::kCorruption;
  const int d = static_cast<int>(out.views.cols());
  for (int i = 0; i < out.size(); ++i) {
    if (rng.uniform() < eta) {
      out.views.row(i) = detail::random_unit_vector(d, rng).transpose();
      out.noise_flag[static_cast<std::size_t>(i)] = true;
    }
  }
  return out;
}

// Supervised-contrastive pairing for label noise: anchor keeps its (possibly
// flipped) label and the view is an independent sample carrying that label.
// The flag records whether the true classes of the two sides differ.
inline PairBatch sample_label_noise_batch(const Dataset& ds, int n,
                                          const std::vector<int>& noisy_labels, Rng& rng) {
  if (static_cast<int>(noisy_labels.size()) != ds.size())
    throw invalid_input("sample_label_noise_batch: label count mismatch");
  std::vector<std::vector<int>> by_label(static_cast<std::size_t>(ds.spec.classes));
  for (int i = 0; i < ds.size(); ++i)
    by_label[static_cast<std::size_t>(noisy_labels[static_cast<std::size_t>(i)])].push_back(i);
  PairBatch b;
  b.kind = NoiseKind::kLabelFlip;
  b.anchors.resize(n, ds.spec.dim);
  b.views.resize(n, ds.spec.dim);
  b.labels.resize(static_cast<std::size_t>(n));
  b.noise_flag.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int a = rng.uniform_int(0, ds.size() - 1);
    const auto& pool = by_label[static_cast<std::size_t>(noisy_labels[static_cast<std::size_t>(a)])];
    int v = a;
    if (pool.size() > 1) {
      do {
        v = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(pool.size()) - 1))];
      } while (v == a);
    }
    b.anchors.row(i) =
        detail::perturb_on_sphere(ds.samples.row(a).transpose(), ds.spec.sigma, rng).transpose();
    b.views.row(i) =
        detail::perturb_on_sphere(ds.samples.row(v).transpose(), ds.spec.sigma, rng).transpose();
    b.labels[static_cast<std::size_t>(i)] = ds.labels[static_cast<std::size_t>(a)];
    b.noise_flag[static_cast<std::size_t>(i)] =
        ds.labels[static_cast<std::size_t>(a)] != ds.labels[static_cast<std::size_t>(v)];
  }
  return b;
}

// CSV fixtures: header row, then one sample per line (label, then floats).
inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "label";
  for (int j = 0; j < ds.spec.dim; ++j) out << ",x" << j;
  out << "\n";
  char buf[32];
  for (int i = 0; i < ds.size(); ++i) {
    out << ds.labels[static_cast<std::size_t>(i)];
    for (int j = 0; j < ds.spec.dim; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.samples(i, j));
      out << ',' << buf;
    }
    out << "\n";
  }
}

inline Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path);
  int dim = -1;  // header columns minus label
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) ++dim;
  }
  if (dim < 2) throw invalid_spec("dataset CSV: need at least 2 feature columns");
  std::vector<int> labels;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::getline(ss, tok, ',');
    labels.push_back(std::stoi(tok));
    for (int j = 0; j < dim; ++j) {
      if (!std::getline(ss, tok, ',')) throw std::runtime_error("short CSV row in " + path);
      values.push_back(std::stod(tok));
    }
  }
  Dataset ds;
  ds.spec.dim = dim;
  ds.spec.classes = labels.empty() ? 2 : *std::max_element(labels.begin(), labels.end()) + 1;
  ds.spec.per_class = 0;
  ds.labels = labels;
  ds.samples.resize(static_cast<int>(labels.size()), dim);
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int j = 0; j < dim; ++j)
      ds.samples(static_cast<int>(i), j) = values[i * static_cast<std::size_t>(dim) + static_cast<std::size_t>(j)];
  ds.centers.resize(0, dim);
  return ds;
}

}  // namespace rince
