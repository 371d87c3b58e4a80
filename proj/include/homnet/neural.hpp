#pragma once

#include "homnet/rational.hpp"
#include "homnet/rng.hpp"

#include <json.hpp>

#include <variant>
#include <vector>

namespace homnet {

enum class ActivationKind { Identity, Relu, ReluStar, LeakyRelu, Heaviside };

// ReluStar(x) = min(max(0, x), 1); Heaviside(x) = [x >= 0].
struct Activation {
  ActivationKind kind = ActivationKind::Identity;
  double slope = 0.01;  // LeakyRelu only
  bool operator==(const Activation&) const = default;
};

template <typename S>
S activate(const Activation& a, const S& x);
template <>
double activate<double>(const Activation& a, const double& x);
template <>
Rational activate<Rational>(const Activation& a, const Rational& x);
// Derivative used by backprop; kinks take the left derivative (0 for Relu at 0).
double activate_derivative(const Activation& a, double x);

nlohmann::json to_json(const Activation& a);
Activation activation_from_json(const nlohmann::json& j);

// Row-vector convention: y = act(x * W + b), W has shape in x out.
template <typename S>
struct AffineLayer {
  std::variant<Matrix<S>, SparseMatrix<S>> weight;
  RowVector<S> bias;
  Activation activation;

  Eigen::Index in_dim() const;
  Eigen::Index out_dim() const { return bias.size(); }
  bool is_sparse() const { return weight.index() == 1; }
  const Matrix<S>& dense() const { return std::get<0>(weight); }
  Matrix<S>& dense() { return std::get<0>(weight); }
};

template <typename S>
struct FnnTape {
  std::vector<Matrix<S>> inputs;  // input of each layer
  std::vector<Matrix<S>> pre;     // pre-activation of each layer
};

template <typename S>
struct FnnGrad {
  std::vector<Matrix<S>> weight;
  std::vector<RowVector<S>> bias;
};

template <typename S>
class Fnn {
 public:
  std::vector<AffineLayer<S>> layers;

  Fnn() = default;
  explicit Fnn(std::vector<AffineLayer<S>> l) : layers(std::move(l)) {}

  Eigen::Index in_dim() const { return layers.front().in_dim(); }
  Eigen::Index out_dim() const { return layers.back().out_dim(); }

  RowVector<S> forward(const RowVector<S>& x) const;
  // One row per example.
  Matrix<S> forward_batch(const Matrix<S>& x, FnnTape<S>* tape = nullptr) const;
  // Accumulates parameter gradients into grad (sized on first use) and returns dL/dx.
  Matrix<S> backward(const FnnTape<S>& tape, const Matrix<S>& d_out, FnnGrad<S>& grad) const;

  // Single affine layer with ReluStar activation.
  bool is_simple() const;

  template <typename T>
  Fnn<T> cast() const;
};

// Dense layer with Uniform(-1/sqrt(in), 1/sqrt(in)) weights and bias.
AffineLayer<double> random_dense_layer(Eigen::Index in, Eigen::Index out, Activation act, Rng& rng);
// widths = {in, hidden..., out}; hidden layers use `hidden`, the last uses `output`.
Fnn<double> random_fnn(const std::vector<Eigen::Index>& widths, Activation hidden, Activation output,
                       Rng& rng);

template <typename S>
AffineLayer<S> sparse_layer(Eigen::Index in, Eigen::Index out,
                            const std::vector<Eigen::Triplet<S>>& entries, RowVector<S> bias,
                            Activation act);

template <typename S>
nlohmann::json to_json(const Fnn<S>& f);
template <typename S>
Fnn<S> fnn_from_json(const nlohmann::json& j);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam over a fixed list of parameter blocks; grads[i] must match params[i] in size.
class Adam {
 public:
  explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
  void step(const std::vector<double*>& params, const std::vector<const double*>& grads,
            const std::vector<std::size_t>& sizes);
  long steps() const { return t_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

struct BceResult {
  double loss;
  double grad;  // dLoss/dLogit
};
// Binary cross-entropy on a logit, numerically stable for large |logit|.
BceResult bce_with_logits(double logit, double label);

struct LayerNormTape {
  Matrix<double> xhat;
  Eigen::VectorXd inv_std;
};

// Row-wise normalization with learned scale and shift.
Matrix<double> layer_norm_forward(const Matrix<double>& x, const RowVector<double>& gamma,
                                  const RowVector<double>& beta, double eps, LayerNormTape* tape);
Matrix<double> layer_norm_backward(const LayerNormTape& tape, const RowVector<double>& gamma,
                                   const Matrix<double>& d_out, RowVector<double>& d_gamma,
                                   RowVector<double>& d_beta);

}  // namespace homnet
