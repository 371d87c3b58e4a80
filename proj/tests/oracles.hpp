#pragma once

// Independent reference implementations used to check the library.

#include "homnet/relational.hpp"

#include <cstdint>
#include <set>
#include <vector>

namespace oracle {

using homnet::Database;

// Fact set as (relation name, argument names) pairs.
std::set<std::pair<std::string, std::vector<std::string>>> fact_set(const Database& db);

// Counts maps from pattern values to target values by trying all |T|^|P| maps.
// mode: 0 hom, 1 injective, 2 embedding. root_image < 0 leaves the root free.
std::uint64_t brute_count(const Database& pattern, int root, const Database& target, int root_image, int mode);

// Every connected pointed graph (relation E) with at most n values and every value
// in at most `degree` facts, up to root-preserving isomorphism.
std::size_t brute_connected_graphs(int n, int degree);

// Confusion-matrix F1 at threshold 0 and pair-counting AUROC.
double f1(const std::vector<double>& scores, const std::vector<int>& labels);
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

// Local transitivity by adjacency matrix.
bool locally_transitive(const Database& db, int v);

}  // namespace oracle

namespace oracle {

// Largest relative error between analytic and central-difference gradients
// (h = 1e-5), relative to max(|analytic|, |numeric|, 1e-3). Inputs within 1e-3 of
// an activation kink are redrawn.
double fnn_gradient_error(int nets, std::uint64_t seed);
double layer_norm_gradient_error(int trials, std::uint64_t seed);
double bce_gradient_error();
// Whole trainable network on a small random graph with the given aggregation
// ("sum", "max", "mean") and, when gin is set, the GIN layout.
double trainer_gradient_error(const std::string& agg, bool gin, std::uint64_t seed);

}  // namespace oracle

#include "homnet/dhn.hpp"

namespace oracle {

// Random sum-aggregating network with embedding and injective queries over
// patterns of at most three values, small rational weights, ReluStar activations.
homnet::Dhn<homnet::Rational> random_den(homnet::Rng& rng, Eigen::Index input_dim);
homnet::Matrix<homnet::Rational> random_embedding(int rows, Eigen::Index dim, homnet::Rng& rng);

}  // namespace oracle

namespace oracle {

// Unary formulas over the graph schema used to exercise each compile target.
std::vector<std::string> formula_suite(const std::string& target);

}  // namespace oracle
