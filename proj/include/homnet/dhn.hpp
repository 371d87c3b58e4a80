#pragma once

#include "homnet/hom.hpp"
#include "homnet/neural.hpp"

#include <optional>
#include <variant>

namespace homnet {

enum class Aggregation { Sum, Max, Mean };
enum class Comparison { Greater, GreaterEqual };

std::string to_string(Aggregation a);
Aggregation parse_aggregation(std::string_view s);
std::string to_string(Comparison c);
Comparison parse_comparison(std::string_view s);

template <typename S>
bool compare(const S& x, Comparison c, const S& t) {
  return c == Comparison::Greater ? x > t : x >= t;
}

// Componentwise product of the factor networks' outputs.
template <typename S>
struct Transform {
  std::vector<Fnn<S>> factors;

  Eigen::Index in_dim() const { return factors.front().in_dim(); }
  Eigen::Index out_dim() const { return factors.front().out_dim(); }
  Matrix<S> apply_batch(const Matrix<S>& x) const;
};

template <typename S>
struct HomQuery {
  PointedDatabase pattern;
  std::vector<Transform<S>> transforms;  // indexed by pattern value id
  Aggregation agg = Aggregation::Sum;
  MatchMode mode = MatchMode::Hom;

  Eigen::Index out_dim() const { return transforms.front().out_dim(); }
};

// Exact comparator combine over inputs [ratio, support, copy...]: returns the copy
// with entry `position` replaced by [ratio cmp threshold], or by [cmp is >=] when
// support is zero.
template <typename S>
struct RatioCombine {
  Eigen::Index position = 0;
  Comparison cmp = Comparison::GreaterEqual;
  S threshold{};
  Eigen::Index dim = 0;
};

template <typename S>
using Combine = std::variant<Fnn<S>, RatioCombine<S>>;

template <typename S>
struct LayerNormParams {
  RowVector<S> gamma, beta;
  double eps = 1e-5;
};

template <typename S>
struct DhnLayer {
  std::vector<HomQuery<S>> queries;
  Combine<S> combine;
  std::optional<LayerNormParams<S>> norm;

  Eigen::Index in_dim() const;
  Eigen::Index out_dim() const;
};

// Accepts a value when score ~ threshold, where score is coordinate `coordinate`
// of head(embedding), or of the embedding itself without a head.
template <typename S>
struct Classifier {
  std::optional<Fnn<S>> head;
  Eigen::Index coordinate = 0;
  Comparison cmp = Comparison::GreaterEqual;
  S threshold{};
};

template <typename S>
struct Dhn {
  using Scalar = S;
  Schema schema;
  Eigen::Index input_dim = 0;
  std::vector<DhnLayer<S>> layers;
  Classifier<S> classifier;

  Eigen::Index out_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }
  template <typename T>
  Dhn<T> cast() const;
};

template <typename S>
struct Trace {
  std::vector<Matrix<S>> embeddings;  // one per layer boundary, rows follow value ids
  std::vector<S> scores;
  std::vector<char> accept;
};

// Throws Error describing the first dimension or shape mismatch.
template <typename S>
void validate(const Dhn<S>& net);

template <typename S>
RowVector<S> eval_query(const HomQuery<S>& q, const Database& db, const Matrix<S>& embedding, int root);
template <typename S>
Matrix<S> apply_layer(const DhnLayer<S>& layer, const Database& db, const Matrix<S>& embedding);
// input: rows follow value ids; empty input means the zero-dimensional start.
template <typename S>
Trace<S> run_all(const Dhn<S>& net, const Database& db, const Matrix<S>* input = nullptr);
template <typename S>
bool run(const Dhn<S>& net, const PointedDatabase& p, const Matrix<S>* input = nullptr);
template <typename S>
S classifier_score(const Classifier<S>& c, const RowVector<S>& embedding);

// Single-affine ReluStar transforms and combines, no head, no normalization.
template <typename S>
bool is_simple(const Dhn<S>& net);
// Every query pattern is connected.
template <typename S>
bool is_connected(const Dhn<S>& net);
template <typename S>
bool uses_only(const Dhn<S>& net, Aggregation agg);

// Rewrites every embedding or injective query of a sum-aggregating network into
// homomorphism queries over quotients and supersets of its pattern, folding the
// expansion coefficients into a linear first layer of each combine.
template <typename S>
Dhn<S> den_to_dhn_sum(const Dhn<S>& net);

// GIN-style message passing as a DHN: every layer queries the root alone and a
// single edge, the last layer also a disconnected pair for a global readout.
// dims = output width of each layer; combine_hidden = hidden widths of combines.
Dhn<double> gin_baseline(const std::vector<Eigen::Index>& dims, const std::vector<Eigen::Index>& combine_hidden,
                         Activation act, Rng& rng);

PointedDatabase single_vertex_pattern(const Schema& schema);
PointedDatabase single_edge_pattern(const Schema& schema, const std::string& relation = "E");

// Transform helpers.
// ReluStar variants keep compiled networks simple; they agree with Identity on [0,1].
template <typename S>
Transform<S> identity_transform(Eigen::Index dim, ActivationKind act = ActivationKind::Identity);
template <typename S>
Transform<S> constant_transform(Eigen::Index in, const RowVector<S>& value,
                                ActivationKind act = ActivationKind::Identity);
template <typename S>
Transform<S> single(Fnn<S> f) {
  return Transform<S>{{std::move(f)}};
}

template <typename S>
nlohmann::json to_json(const Dhn<S>& net);
template <typename S>
Dhn<S> dhn_from_json(const nlohmann::json& j);
// "rational" or "float".
std::string network_numeric(const nlohmann::json& j);

}  // namespace homnet
