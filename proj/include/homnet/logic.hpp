#pragma once

#include "homnet/dhn.hpp"
#include "homnet/sexp.hpp"

#include <memory>
#include <set>

namespace homnet {

struct Atom {
  std::string relation;
  std::vector<std::string> args;
  auto operator<=>(const Atom&) const = default;
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

// A unary subformula placed on a block variable. An empty var marks a closed
// subformula, whose truth does not depend on where it is placed.
struct Conjunct {
  std::string var;
  FormulaPtr formula;
};

// Conjunction over the free variable and the quantified `vars`.
struct Block {
  std::vector<std::string> vars;
  std::vector<Atom> atoms;
  std::vector<Atom> negated;
  std::vector<std::pair<std::string, std::string>> distinct;
  std::vector<Conjunct> unary;
};

enum class FormulaKind {
  Not,
  Or,
  And,
  Exists,       // exists vars. block
  CountExists,  // at least `count` tuples satisfy the block
  Graded,       // nested counting quantifiers over a disjunction of blocks
  Ratio,        // fraction of tuples satisfying block.atoms that also satisfy block.unary
  CountEqual    // block and other are satisfied by equally many tuples
};

struct Formula {
  FormulaKind kind = FormulaKind::Exists;
  std::vector<FormulaPtr> children;
  Block block;
  Block other;
  std::uint64_t count = 1;
  std::vector<std::uint64_t> counts;  // Graded: one per block.vars entry
  std::vector<Block> disjuncts;       // Graded: conjunctions over block.vars
  Comparison cmp = Comparison::GreaterEqual;
  Rational threshold;
};

FormulaPtr make_true();
FormulaPtr make_false();
FormulaPtr make_not(FormulaPtr f);
FormulaPtr make_or(std::vector<FormulaPtr> fs);
FormulaPtr make_and(std::vector<FormulaPtr> fs);
FormulaPtr make_exists(Block b);
FormulaPtr make_count_exists(std::uint64_t k, Block b);
FormulaPtr make_ratio(Comparison cmp, Rational t, Block b);
FormulaPtr make_atom_formula(Atom a);

FormulaPtr parse_formula(std::string_view text);
FormulaPtr formula_from_sexp(const Sexp& s);
std::string print_formula(const Formula& f);
Sexp formula_to_sexp(const Formula& f);

std::set<std::string> free_variables(const Formula& f);
// The single free variable, or nullopt for a closed formula.
std::optional<std::string> free_variable(const Formula& f);
// Relations used with their arities; conflicting arities raise Error.
Schema formula_schema(const Formula& f);

// Brute-force semantics: quantifiers range over the active domain, with literals
// tested as soon as their variables are bound.
class Evaluator {
 public:
  explicit Evaluator(const Database& db) : db_(db) {}
  // Truth at `value` (ignored for closed formulas).
  bool holds(const Formula& f, int value);

 private:
  struct Compiled;
  const Compiled& compiled(const Block& b, const std::string& free_name);
  std::uint64_t count(const Compiled& c, int free_value, std::uint64_t limit, bool with_unary);
  bool graded(const Formula& f, const std::string& free_name, std::vector<int>& assignment, std::size_t level);

  const Database& db_;
  std::map<std::pair<const Formula*, int>, bool> memo_;
  std::map<const Formula*, std::optional<std::string>> free_;
  std::map<std::pair<const Block*, std::string>, std::shared_ptr<Compiled>> compiled_;
};

bool eval(const Formula& f, const PointedDatabase& p);
std::vector<bool> eval_all(const Formula& f, const Database& db);

struct FormulaInfo {
  bool hml = false;          // negation, disjunction, positive blocks
  bool ghml_minus = false;   // hml plus counting blocks
  bool ghml = false;         // graded blocks, counting blocks, hml
  bool eml = false;          // hml plus negated atoms and inequalities
  bool rhml = false;         // ratio quantifiers over hml
  bool connected = false;    // every block's atoms connect all its variables
  int depth = 0;             // nesting depth of quantifier blocks with variables
  int width = 0;             // most variables quantified by one block
  std::uint64_t counting_bound = 0;
};

FormulaInfo classify(const Formula& f);

struct StrictifyOptions {
  // Only databases whose binary relations are symmetric and loop-free are
  // considered; the strict form then fixes loops to absent and ties both
  // directions of every pair.
  bool undirected = false;
  std::size_t max_blocks = 200000;
  std::optional<Schema> schema;  // defaults to the formula's own relations
};

// Equivalent formula in which every block is strict: all variables pairwise
// distinct and every atom over them present or negated. Closed blocks gain a
// free variable named "x" (or a fresh name).
FormulaPtr strictify(const FormulaPtr& f, const StrictifyOptions& opts = {});
bool is_strict(const Formula& f, const Schema& schema);

struct BuiltinFormula {
  std::string name;
  FormulaPtr formula;
  std::string description;
};

// phi_sun, local transitivity (EML statement and the count comparison), the
// triangle ratio example, and small HML / GHML- examples.
std::vector<BuiltinFormula> builtin_formulas();
FormulaPtr builtin_formula(const std::string& name);

}  // namespace homnet
