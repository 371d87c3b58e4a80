#pragma once

#include "homnet/relational.hpp"

#include <cstdint>
#include <functional>

namespace homnet {

enum class MatchMode { Hom, Injective, Embedding };

std::string to_string(MatchMode m);
MatchMode parse_match_mode(std::string_view s);

// Extra restrictions on a match, keyed by pattern value ids.
struct MatchConstraints {
  std::vector<std::pair<int, int>> distinct;
  std::map<int, std::function<bool(int)>> labels;
};

// Enumerates maps h from pattern values to target values such that every pattern
// fact maps to a target fact (Hom), additionally h is injective (Injective), and
// additionally every target fact over the image has its preimage in the pattern
// (Embedding). Backtracking over a static order: anchored value first, then values
// by number of facts linking them to already ordered values, then incidence.
class Matcher {
 public:
  using Visitor = std::function<bool(std::span<const int>)>;  // return false to stop

  Matcher(const Database& pattern, const Database& target, MatchMode mode,
          MatchConstraints constraints = {});

  // anchor: (pattern value, target value) pinned before the search.
  void for_each(std::optional<std::pair<int, int>> anchor, const Visitor& visit) const;
  std::uint64_t count(std::optional<std::pair<int, int>> anchor = std::nullopt) const;
  std::vector<std::vector<int>> all(std::optional<std::pair<int, int>> anchor = std::nullopt) const;

 private:
  struct Step;
  std::vector<Step> make_plan(std::optional<int> first) const;

  const Database& pattern_;
  const Database& target_;
  MatchMode mode_;
  MatchConstraints constraints_;
  std::vector<int> rel_map_;  // pattern relation id -> target relation id (-1 if absent)
};

std::uint64_t count_matches(const PointedDatabase& pattern, const PointedDatabase& target,
                            MatchMode mode);
std::uint64_t count_matches(const Database& pattern, const Database& target, MatchMode mode);
std::vector<std::vector<int>> enumerate_matches(const PointedDatabase& pattern,
                                                const PointedDatabase& target, MatchMode mode);
// Count for every target value used as the root's image, ordered by value id.
std::vector<std::uint64_t> count_all_roots(const PointedDatabase& pattern, const Database& target,
                                           MatchMode mode);

// Set partitions of {0..n-1} as block-index vectors in restricted-growth form.
std::vector<std::vector<int>> set_partitions(int n);
int num_blocks(const std::vector<int>& block_of);

// F/P: a fact R(B1..Bk) holds iff some representatives form a fact of F. Block
// names join member names with '|'.
Database quotient(const Database& db, const std::vector<int>& block_of);
PointedDatabase quotient(const PointedDatabase& p, const std::vector<int>& block_of);

// Isomorphism invariant string: minimum over root-fixing relabelings of the
// encoded fact list. Relabeling search is brute force, intended for small databases.
std::string canonical_form(const PointedDatabase& p);
std::string canonical_form(const Database& db);
bool isomorphic(const PointedDatabase& a, const PointedDatabase& b);
// Values renamed "0".."n-1" along the canonical order, root "0".
PointedDatabase canonical_relabel(const PointedDatabase& p);

// Every fact over the values of db (all relations, all tuples).
std::vector<Database::Row> all_possible_rows(const Schema& schema, int num_values);

}  // namespace homnet
