#pragma once

#include "homnet/rational.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace homnet {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Relation name to arity.
using Schema = std::map<std::string, int>;

Schema graph_schema();

struct Fact {
  std::string relation;
  std::vector<std::string> args;
  auto operator<=>(const Fact&) const = default;
};

// A finite set of facts over a schema, plus optionally declared values that occur
// in no fact. Values and relations are interned: value ids index the sorted active
// domain and relation ids index the schema in key order. Immutable once built.
class Database {
 public:
  struct Row {
    int relation;
    std::vector<int> args;
    auto operator<=>(const Row&) const = default;
  };

  Database() = default;
  explicit Database(Schema schema) : Database(std::move(schema), {}, {}) {}
  Database(Schema schema, const std::vector<Fact>& facts,
           const std::vector<std::string>& extra_values = {});

  const Schema& schema() const { return schema_; }
  int num_relations() const { return static_cast<int>(relation_names_.size()); }
  const std::string& relation_name(int r) const { return relation_names_[r]; }
  int arity(int r) const { return arities_[r]; }
  std::optional<int> relation_id(std::string_view name) const;

  int size() const { return static_cast<int>(values_.size()); }
  const std::vector<std::string>& values() const { return values_; }
  const std::string& value(int id) const { return values_[id]; }
  std::optional<int> find_value(std::string_view name) const;
  int value_id(std::string_view name) const;

  const std::vector<Row>& rows() const { return rows_; }
  std::size_t num_facts() const { return rows_.size(); }
  bool contains(int relation, std::span<const int> args) const;
  bool contains(const Fact& f) const;
  std::vector<Fact> facts() const;
  Fact fact(const Row& row) const;

  // Row ids of facts mentioning the value (each fact listed once).
  const std::vector<int>& incident(int value) const { return incident_[value]; }
  // Row ids of facts of relation r whose position pos holds value v.
  const std::vector<int>& rows_with(int r, int pos, int v) const { return by_position_[r][pos][v]; }
  const std::vector<int>& rows_of(int r) const { return by_relation_[r]; }
  // Values that occur in no fact.
  std::vector<std::string> isolated_values() const;

  int degree(int value) const { return static_cast<int>(incident_[value].size()); }
  int max_degree() const;

  bool operator==(const Database& other) const;

 private:
  struct RowHash {
    std::size_t operator()(const std::vector<int>& v) const;
  };

  Schema schema_;
  std::vector<std::string> relation_names_;
  std::vector<int> arities_;
  std::vector<std::string> values_;
  std::vector<Row> rows_;
  std::unordered_set<std::vector<int>, RowHash> row_set_;
  std::vector<std::vector<int>> incident_;
  std::vector<std::vector<std::vector<std::vector<int>>>> by_position_;
  std::vector<std::vector<int>> by_relation_;
};

struct PointedDatabase {
  Database db;
  int root = 0;

  PointedDatabase() = default;
  PointedDatabase(Database d, int r) : db(std::move(d)), root(r) {}
  PointedDatabase(Database d, std::string_view root_name);
  const std::string& root_name() const { return db.value(root); }
};

// Builds a pointed database; the root joins the active domain even without facts.
PointedDatabase make_pointed(const Schema& schema, const std::vector<Fact>& facts,
                             const std::string& root,
                             const std::vector<std::string>& extra_values = {});

// Same facts and values with a different schema (must cover every used relation).
Database with_schema(const Database& db, const Schema& schema);
Database add_facts(const Database& db, const std::vector<Fact>& facts,
                   const std::vector<std::string>& extra_values = {});

std::vector<std::vector<int>> gaifman_graph(const Database& db);
bool is_connected(const Database& db);
// Longest shortest path in the Gaifman graph; nullopt when disconnected.
std::optional<int> diameter(const Database& db);
// Eccentricity of the root; nullopt when some value is unreachable.
std::optional<int> diameter(const PointedDatabase& p);
// Values reachable from v in the Gaifman graph (including v).
std::vector<int> component_of(const Database& db, int v);

struct Embedding {
  bool exact = false;  // rational entries serialize as "p/q" strings
  std::map<std::string, std::vector<Rational>> rows;
};

struct DatabaseDocument {
  Database db;
  std::optional<std::string> root;
  std::optional<Embedding> embedding;
  std::optional<std::map<std::string, int>> labels;
  nlohmann::json meta;  // null when absent
};

nlohmann::json to_json(const DatabaseDocument& doc);
DatabaseDocument document_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Database& db, const std::optional<std::string>& root = std::nullopt);
nlohmann::json to_json(const PointedDatabase& p);
PointedDatabase pointed_from_json(const nlohmann::json& j);

nlohmann::json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const nlohmann::json& j);

// Rows of an embedding matrix follow the database's value ids.
template <typename S>
Matrix<S> embedding_matrix(const Database& db, const Embedding& e);

}  // namespace homnet
