#pragma once

#include "homnet/logic.hpp"
#include "homnet/rng.hpp"

namespace homnet {

enum class CompileTarget { MaxDhn, SumDhn, MaxDen, SumDen, MeanDhn };

std::string to_string(CompileTarget t);
CompileTarget parse_compile_target(std::string_view s);

// Subformulas in dependency order (children before parents, duplicates by printed
// form removed). Single-variable negated atoms count as unary negations.
std::vector<FormulaPtr> subformula_order(const FormulaPtr& f);

// The formula's relations together with the graph schema; throws on arity clashes.
Schema compile_schema(const Formula& f, const Schema& extra = {});

// Each network has one layer per subformula; layer i sets coordinate i to the truth
// of subformula i and copies the rest. Accepts when the last coordinate is >= 1.
Dhn<Rational> compile_hml_max(const Formula& f, const Schema& schema = {});
Dhn<Rational> compile_ghmlminus_sum(const Formula& f, const Schema& schema = {});
// Input must be strict (see strictify).
Dhn<Rational> compile_eml_max_den(const Formula& f, const Schema& schema = {});
Dhn<Rational> compile_eml_sum_den(const Formula& f, const Schema& schema = {});
Dhn<Rational> compile_rhml_mean(const Formula& f, const Schema& schema = {});
// Dispatches on target; DEN targets strictify non-strict input first.
Dhn<Rational> compile(const FormulaPtr& f, CompileTarget target, const Schema& schema = {});

// Sum-DHN deciding local transitivity: compares the counts of 2-step paths and of
// chorded triangles at the root.
Dhn<Rational> local_transitivity_dhn();

// Every single-value database over the schema (one per set of facts on one value).
std::vector<PointedDatabase> single_value_databases(const Schema& schema);

// All databases whose values are "0".."n-1", one per fact subset.
std::vector<Database> all_databases(const Schema& schema, int n);
// n values, each possible fact present independently with probability p.
Database random_database(const Schema& schema, int n, double p, Rng& rng);

struct EquivalenceConfig {
  Schema schema = graph_schema();
  int exhaustive_size = 3;  // every database with at most this many values
  int max_size = 6;         // random databases have 1..max_size values
  int samples = 500;
  std::uint64_t seed = 1;
  bool check_boolean = true;  // exact mode: every embedding entry is 0 or 1
  std::size_t max_reported = 20;
};

struct Disagreement {
  nlohmann::json database;
  std::string root;
  bool formula = false;
  bool network = false;
};

struct EquivalenceReport {
  std::size_t databases = 0;
  std::size_t points = 0;
  std::size_t mismatches = 0;
  std::size_t non_boolean = 0;  // databases with an embedding entry outside {0,1}
  std::vector<Disagreement> disagreements;  // first max_reported mismatches

  bool ok() const { return mismatches == 0 && non_boolean == 0; }
  nlohmann::json to_json() const;
};

template <typename S>
EquivalenceReport check_equivalence(const Formula& f, const Dhn<S>& net, const EquivalenceConfig& cfg);

}  // namespace homnet
