#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "rince/common.hpp"
#include "rince/rng.hpp"

namespace rince {

enum class Activation : std::uint32_t { kRelu = 0, kTanh = 1 };

inline Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  throw invalid_parameter("unknown activation: " + s);
}

inline std::string to_string(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

// Batch of unit-norm embeddings (one per row) plus the index of the sample
// each row came from.
struct EmbeddingBatch {
  Eigen::MatrixXd rows;
  std::vector<int> source;
};

// Per-layer state captured by the forward pass, consumed by backward().
struct ForwardCache {
  std::vector<Eigen::MatrixXd> inputs;          // A_{l-1} per layer
  std::vector<Eigen::MatrixXd> preactivations;  // Z_l per layer
  Eigen::MatrixXd embeddings;                   // normalized rows
  Eigen::VectorXd norms;                        // pre-normalization row norms
};

struct EncoderGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Small fully connected encoder with hidden activations, a linear output
// layer, and unit-sphere projection of the output rows. Backward propagates
// through the exact normalization Jacobian (I - uu^T)/||z||.
class MlpEncoder {
 public:
  MlpEncoder() = default;

  // dims = {d_in, hidden..., d_out}. Weights are uniform in
  // [-1/sqrt(fan_in), 1/sqrt(fan_in)] drawn from `init`.
  MlpEncoder(const std::vector<int>& dims, Activation activation, double temperature,
             Rng& init, int head_layers = 0)
      : activation_(activation), temperature_(temperature), head_layers_(head_layers) {
    if (dims.size() < 2) throw invalid_parameter("MlpEncoder: need at least one layer");
    if (!(temperature > 0.0)) throw invalid_parameter("MlpEncoder: temperature must be > 0");
    if (head_layers < 0 || head_layers >= static_cast<int>(dims.size()))
      throw invalid_parameter("MlpEncoder: bad head layer count");
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      if (dims[l] < 1 || dims[l + 1] < 1) throw invalid_parameter("MlpEncoder: bad dims");
      double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
      Eigen::MatrixXd w(dims[l + 1], dims[l]);
      for (int r = 0; r < w.rows(); ++r)
        for (int c = 0; c < w.cols(); ++c) w(r, c) = init.uniform(-bound, bound);
      Eigen::VectorXd b(dims[l + 1]);
      for (int r = 0; r < b.size(); ++r) b(r) = init.uniform(-bound, bound);
      weights_.push_back(std::move(w));
      biases_.push_back(std::move(b));
    }
  }

  static MlpEncoder from_parameters(std::vector<Eigen::MatrixXd> weights,
                                    std::vector<Eigen::VectorXd> biases,
                                    Activation activation, double temperature,
                                    int head_layers = 0) {
    MlpEncoder e;
    e.weights_ = std::move(weights);
    e.biases_ = std::move(biases);
    e.activation_ = activation;
    e.temperature_ = temperature;
    e.head_layers_ = head_layers;
    for (std::size_t l = 0; l < e.weights_.size(); ++l) {
      if (e.weights_[l].rows() != e.biases_[l].size())
        throw invalid_parameter("MlpEncoder: weight/bias shape mismatch");
      if (l + 1 < e.weights_.size() && e.weights_[l + 1].cols() != e.weights_[l].rows())
        throw invalid_parameter("MlpEncoder: layer dims do not chain");
    }
    return e;
  }

  int input_dim() const { return static_cast<int>(weights_.front().cols()); }
  int output_dim() const { return static_cast<int>(weights_.back().rows()); }
  int layer_count() const { return static_cast<int>(weights_.size()); }
  int head_layers() const { return head_layers_; }
  double temperature() const { return temperature_; }
  Activation activation() const { return activation_; }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::vector<Eigen::MatrixXd>& mutable_weights() { return weights_; }
  std::vector<Eigen::VectorXd>& mutable_biases() { return biases_; }

  int parameter_count() const {
    int n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l)
      n += static_cast<int>(weights_[l].size() + biases_[l].size());
    return n;
  }

  EmbeddingBatch forward(const Eigen::MatrixXd& inputs, ForwardCache* cache = nullptr) const {
    if (inputs.cols() != input_dim())
      throw invalid_input("MlpEncoder.forward: input width != d_in");
    Eigen::MatrixXd a = inputs;
    ForwardCache local;
    ForwardCache& c = cache ? *cache : local;
    c.inputs.clear();
    c.preactivations.clear();
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      c.inputs.push_back(a);
      Eigen::MatrixXd z = a * weights_[l].transpose();
      z.rowwise() += biases_[l].transpose();
      c.preactivations.push_back(z);
      if (l + 1 < weights_.size()) {
        a = apply_activation(z);
      } else {
        a = z;
      }
    }
    c.norms = a.rowwise().norm();
    for (int r = 0; r < a.rows(); ++r) {
      if (!(c.norms(r) > 0.0) || !std::isfinite(c.norms(r)))
        throw degenerate_embedding("MlpEncoder.forward: zero-norm output row", r);
      a.row(r) /= c.norms(r);
    }
    c.embeddings = a;
    EmbeddingBatch out;
    out.rows = a;
    out.source.resize(static_cast<std::size_t>(a.rows()));
    for (int r = 0; r < a.rows(); ++r) out.source[static_cast<std::size_t>(r)] = r;
    return out;
  }

  // grad_embeddings is dLoss/dU for the normalized rows U produced by the
  // matching forward call.
  EncoderGradients backward(const ForwardCache& cache,
                            const Eigen::MatrixXd& grad_embeddings) const {
    if (grad_embeddings.rows() != cache.embeddings.rows() ||
        grad_embeddings.cols() != cache.embeddings.cols())
      throw invalid_input("MlpEncoder.backward: gradient shape mismatch");
    EncoderGradients g;
    g.weights.resize(weights_.size());
    g.biases.resize(weights_.size());

    // Normalization Jacobian: dZ = (dU - (dU . u) u) / ||z|| per row.
    Eigen::MatrixXd dz = grad_embeddings;
    for (int r = 0; r < dz.rows(); ++r) {
      double dot = grad_embeddings.row(r).dot(cache.embeddings.row(r));
      dz.row(r) = (grad_embeddings.row(r) - dot * cache.embeddings.row(r)) / cache.norms(r);
    }

    for (int l = layer_count() - 1; l >= 0; --l) {
      g.weights[l] = dz.transpose() * cache.inputs[l];
      g.biases[l] = dz.colwise().sum().transpose();
      if (l > 0) {
        Eigen::MatrixXd da = dz * weights_[l];
        dz = da.cwiseProduct(activation_derivative(cache.preactivations[l - 1]));
      }
    }
    return g;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    put_u32(static_cast<std::uint32_t>(layer_count()));
    put_u32(static_cast<std::uint32_t>(input_dim()));
    for (const auto& w : weights_) put_u32(static_cast<std::uint32_t>(w.rows()));
    put_u32(static_cast<std::uint32_t>(activation_));
    put_u32(static_cast<std::uint32_t>(head_layers_));
    out.write(reinterpret_cast<const char*>(&temperature_), 8);
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const Eigen::MatrixXd& w = weights_[l];
      for (int r = 0; r < w.rows(); ++r)
        out.write(reinterpret_cast<const char*>(w.row(r).eval().data()),
                  static_cast<std::streamsize>(8 * w.cols()));
      out.write(reinterpret_cast<const char*>(biases_[l].data()),
                static_cast<std::streamsize>(8 * biases_[l].size()));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
  }

  static MlpEncoder load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
      throw std::runtime_error("bad checkpoint magic: " + path);
    auto get_u32 = [&]() {
      std::uint32_t v = 0;
      in.read(reinterpret_cast<char*>(&v), 4);
      return v;
    };
    std::uint32_t layers = get_u32();
    std::vector<int> dims;
    dims.push_back(static_cast<int>(get_u32()));
    for (std::uint32_t l = 0; l < layers; ++l) dims.push_back(static_cast<int>(get_u32()));
    auto activation = static_cast<Activation>(get_u32());
    int head_layers = static_cast<int>(get_u32());
    double t = 0.0;
    in.read(reinterpret_cast<char*>(&t), 8);
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
    for (std::uint32_t l = 0; l < layers; ++l) {
      Eigen::MatrixXd w(dims[l + 1], dims[l]);
      for (int r = 0; r < w.rows(); ++r) {
        Eigen::VectorXd row(w.cols());
        in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(8 * w.cols()));
        w.row(r) = row.transpose();
      }
      Eigen::VectorXd b(dims[l + 1]);
      in.read(reinterpret_cast<char*>(b.data()), static_cast<std::streamsize>(8 * b.size()));
      weights.push_back(std::move(w));
      biases.push_back(std::move(b));
    }
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return from_parameters(std::move(weights), std::move(biases), activation, t, head_layers);
  }

 private:
  static constexpr const char kMagic[9] = "RINCENC1";

  Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z) const {
    if (activation_ == Activation::kRelu) return z.cwiseMax(0.0);
    return z.array().tanh().matrix();
  }

  Eigen::MatrixXd activation_derivative(const Eigen::MatrixXd& z) const {
    if (activation_ == Activation::kRelu)
      return (z.array() > 0.0).cast<double>().matrix();
    Eigen::ArrayXXd t = z.array().tanh();
    return (1.0 - t * t).matrix();
  }

  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  Activation activation_ = Activation::kRelu;
  double temperature_ = 0.5;
  int head_layers_ = 0;
};

}  // namespace rince
