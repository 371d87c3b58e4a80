#pragma once

#include "homnet/relational.hpp"
#include "homnet/rng.hpp"

namespace homnet {

// A database whose example values carry binary labels; other values are filler.
struct LabeledDataset {
  Database db;
  std::vector<int> examples;  // value ids, ascending
  std::vector<int> labels;    // aligned with examples
  nlohmann::json meta;

  std::size_t positives() const;
};

DatabaseDocument to_document(const LabeledDataset& d);
LabeledDataset dataset_from_document(const DatabaseDocument& doc);
inline constexpr int kGeneratorVersion = 1;

struct LtConfig {
  std::uint64_t seed = 0;
  int chains = 200;
  int chain_length = 20;
  int deletions = 4000;
};

// Disjoint transitive linear orders with uniformly chosen edges deleted; every
// vertex is an example labeled by local transitivity.
LabeledDataset gen_local_transitivity(const LtConfig& cfg);

// For all u1, u2: E(v,u1) and E(u1,u2) imply E(v,u2).
bool oracle_local_transitivity(const Database& db, int v);

struct SunConfig {
  std::uint64_t seed = 0;
  int positives = 100;
  int negatives = 100;
  int max_extra_degree = 8;   // fattened pendants get degree 2..max_extra_degree
  int max_fattened = 2;       // a negative fattens 1..max_fattened of its pendants
  int max_decorations = 2;    // negative suns bridged to each example sun
};

// Undirected (symmetric, irreflexive E) disjoint union of example suns: 6-cycles
// whose vertices each carry a pendant, with some pendants fattened in negatives,
// and with negative suns attached to cycle vertices by a bridge edge.
LabeledDataset gen_sun(const SunConfig& cfg);

// v lies on a simple 6-cycle whose every vertex has a neighbor of degree 1.
bool oracle_sun(const Database& db, int v);

// The 13 rooted directed patterns with at most three values used for local
// transitivity: two single edges, seven rooted two-edge shapes, three rootings of
// the chorded triangle and the directed 3-cycle.
std::vector<PointedDatabase> pattern_catalog_lt();

// Symmetric 6-cycle and symmetric single edge, both rooted.
std::vector<PointedDatabase> sun_patterns();

struct Split {
  std::vector<std::size_t> train, val, test;  // indices into examples
};

Split split_examples(std::size_t n, std::uint64_t seed, double train = 0.6, double val = 0.2, double test = 0.2);

}  // namespace homnet
