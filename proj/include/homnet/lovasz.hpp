#pragma once

#include "homnet/hom.hpp"

namespace homnet {

struct BasisTerm {
  PointedDatabase pattern;
  Rational coefficient;
};

// One term of a labeled expansion: a database over the blocks of a partition of
// the source pattern's values, with its root block.
struct LabeledTerm {
  std::vector<int> block_of;
  PointedDatabase pattern;
  Rational coefficient;
};

// count_from(F, D) = sum of coefficient * count_to(term.pattern, D) for every target
// D, with terms kept per partition and fact set (no isomorphism merging). Supported
// directions: Emb/Inj -> Hom and Hom/Inj -> Emb.
std::vector<LabeledTerm> labeled_expansion(const PointedDatabase& F, MatchMode from, MatchMode to);

// Emb(F, D) as a rational combination of Hom(G, D), G ranging over pairwise
// non-isomorphic pointed databases.
std::vector<BasisTerm> emb_from_hom_basis(const PointedDatabase& F);
std::vector<BasisTerm> hom_from_emb_basis(const PointedDatabase& F);

// Mobius function of the partition lattice from the discrete partition to P.
BigInt partition_mobius(const std::vector<int>& block_of);

// Largest number of candidate facts a superset enumeration may range over.
inline constexpr int kMaxSupersetFacts = 22;

}  // namespace homnet
