#include "homnet/relational.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>

namespace homnet {

Schema graph_schema() { return Schema{{"E", 2}}; }

std::size_t Database::RowHash::operator()(const std::vector<int>& v) const {
  std::size_t h = 1469598103934665603ULL;
  for (int x : v) {
    h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return h;
}

Database::Database(Schema schema, const std::vector<Fact>& facts,
                   const std::vector<std::string>& extra_values)
    : schema_(std::move(schema)) {
  for (const auto& [name, ar] : schema_) {
    if (ar < 0) throw Error("negative arity for relation " + name);
    relation_names_.push_back(name);
    arities_.push_back(ar);
  }
  std::set<std::string> vals(extra_values.begin(), extra_values.end());
  for (const auto& f : facts) {
    auto it = schema_.find(f.relation);
    if (it == schema_.end()) throw Error("relation not in schema: " + f.relation);
    if (static_cast<int>(f.args.size()) != it->second)
      throw Error("arity mismatch for " + f.relation + ": expected " + std::to_string(it->second) +
                  ", got " + std::to_string(f.args.size()));
    vals.insert(f.args.begin(), f.args.end());
  }
  values_.assign(vals.begin(), vals.end());
  std::set<Row> rowset;
  for (const auto& f : facts) {
    Row r{*relation_id(f.relation), {}};
    for (const auto& a : f.args) r.args.push_back(value_id(a));
    rowset.insert(std::move(r));
  }
  rows_.assign(rowset.begin(), rowset.end());

  const int n = size();
  incident_.assign(n, {});
  by_relation_.assign(num_relations(), {});
  by_position_.resize(num_relations());
  for (int r = 0; r < num_relations(); ++r)
    by_position_[r].assign(arities_[r], std::vector<std::vector<int>>(n));
  for (int id = 0; id < static_cast<int>(rows_.size()); ++id) {
    const Row& row = rows_[id];
    std::vector<int> key{row.relation};
    key.insert(key.end(), row.args.begin(), row.args.end());
    row_set_.insert(std::move(key));
    by_relation_[row.relation].push_back(id);
    for (int p = 0; p < static_cast<int>(row.args.size()); ++p) {
      by_position_[row.relation][p][row.args[p]].push_back(id);
      auto& inc = incident_[row.args[p]];
      if (inc.empty() || inc.back() != id) inc.push_back(id);
    }
  }
}

std::optional<int> Database::relation_id(std::string_view name) const {
  auto it = std::lower_bound(relation_names_.begin(), relation_names_.end(), name);
  if (it == relation_names_.end() || *it != name) return std::nullopt;
  return static_cast<int>(it - relation_names_.begin());
}

std::optional<int> Database::find_value(std::string_view name) const {
  auto it = std::lower_bound(values_.begin(), values_.end(), name);
  if (it == values_.end() || *it != name) return std::nullopt;
  return static_cast<int>(it - values_.begin());
}

int Database::value_id(std::string_view name) const {
  auto id = find_value(name);
  if (!id) throw Error("value not in active domain: " + std::string(name));
  return *id;
}

bool Database::contains(int relation, std::span<const int> args) const {
  std::vector<int> key;
  key.reserve(args.size() + 1);
  key.push_back(relation);
  key.insert(key.end(), args.begin(), args.end());
  return row_set_.count(key) > 0;
}

bool Database::contains(const Fact& f) const {
  auto r = relation_id(f.relation);
  if (!r || arities_[*r] != static_cast<int>(f.args.size())) return false;
  std::vector<int> args;
  for (const auto& a : f.args) {
    auto id = find_value(a);
    if (!id) return false;
    args.push_back(*id);
  }
  return contains(*r, args);
}

Fact Database::fact(const Row& row) const {
  Fact f{relation_names_[row.relation], {}};
  for (int a : row.args) f.args.push_back(values_[a]);
  return f;
}

std::vector<Fact> Database::facts() const {
  std::vector<Fact> out;
  out.reserve(rows_.size());
  for (const auto& r : rows_) out.push_back(fact(r));
  return out;
}

std::vector<std::string> Database::isolated_values() const {
  std::vector<std::string> out;
  for (int v = 0; v < size(); ++v)
    if (incident_[v].empty()) out.push_back(values_[v]);
  return out;
}

int Database::max_degree() const {
  int d = 0;
  for (const auto& inc : incident_) d = std::max(d, static_cast<int>(inc.size()));
  return d;
}

bool Database::operator==(const Database& other) const {
  return schema_ == other.schema_ && values_ == other.values_ && rows_ == other.rows_;
}

PointedDatabase::PointedDatabase(Database d, std::string_view root_name)
    : db(std::move(d)), root(db.value_id(root_name)) {}

PointedDatabase make_pointed(const Schema& schema, const std::vector<Fact>& facts,
                             const std::string& root,
                             const std::vector<std::string>& extra_values) {
  std::vector<std::string> vals = extra_values;
  vals.push_back(root);
  Database db(schema, facts, vals);
  return PointedDatabase(std::move(db), root);
}

Database with_schema(const Database& db, const Schema& schema) {
  return Database(schema, db.facts(), db.values());
}

Database add_facts(const Database& db, const std::vector<Fact>& facts,
                   const std::vector<std::string>& extra_values) {
  auto all = db.facts();
  all.insert(all.end(), facts.begin(), facts.end());
  auto vals = db.values();
  vals.insert(vals.end(), extra_values.begin(), extra_values.end());
  return Database(db.schema(), all, vals);
}

std::vector<std::vector<int>> gaifman_graph(const Database& db) {
  std::vector<std::set<int>> adj(db.size());
  for (const auto& row : db.rows())
    for (int a : row.args)
      for (int b : row.args)
        if (a != b) adj[a].insert(b);
  std::vector<std::vector<int>> out(db.size());
  for (int v = 0; v < db.size(); ++v) out[v].assign(adj[v].begin(), adj[v].end());
  return out;
}

namespace {

std::vector<int> bfs(const std::vector<std::vector<int>>& adj, int src) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<int> q{src};
  dist[src] = 0;
  while (!q.empty()) {
    int v = q.front();
    q.pop_front();
    for (int w : adj[v])
      if (dist[w] < 0) {
        dist[w] = dist[v] + 1;
        q.push_back(w);
      }
  }
  return dist;
}

}  // namespace

std::vector<int> component_of(const Database& db, int v) {
  auto dist = bfs(gaifman_graph(db), v);
  std::vector<int> out;
  for (int w = 0; w < db.size(); ++w)
    if (dist[w] >= 0) out.push_back(w);
  return out;
}

bool is_connected(const Database& db) {
  if (db.size() <= 1) return true;
  auto dist = bfs(gaifman_graph(db), 0);
  return std::all_of(dist.begin(), dist.end(), [](int d) { return d >= 0; });
}

std::optional<int> diameter(const Database& db) {
  auto adj = gaifman_graph(db);
  int best = 0;
  for (int v = 0; v < db.size(); ++v) {
    for (int d : bfs(adj, v)) {
      if (d < 0) return std::nullopt;
      best = std::max(best, d);
    }
  }
  return best;
}

std::optional<int> diameter(const PointedDatabase& p) {
  int best = 0;
  for (int d : bfs(gaifman_graph(p.db), p.root)) {
    if (d < 0) return std::nullopt;
    best = std::max(best, d);
  }
  return best;
}

namespace {

nlohmann::json rational_json(const Rational& r, bool exact) {
  if (exact) return to_string(r);
  return r.convert_to<double>();
}

Rational rational_of_json(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long long>());
  if (j.is_number()) return rational_from_double(j.get<double>());
  throw Error("expected a number or rational string");
}

}  // namespace

nlohmann::json to_json(const DatabaseDocument& doc) {
  nlohmann::json j;
  nlohmann::json schema = nlohmann::json::object();
  for (const auto& [name, ar] : doc.db.schema()) schema[name] = ar;
  j["schema"] = schema;
  nlohmann::json facts = nlohmann::json::array();
  for (const auto& f : doc.db.facts()) {
    nlohmann::json row = nlohmann::json::array({f.relation});
    for (const auto& a : f.args) row.push_back(a);
    facts.push_back(row);
  }
  j["facts"] = facts;
  auto iso = doc.db.isolated_values();
  if (!iso.empty()) j["values"] = iso;
  if (doc.root) j["root"] = *doc.root;
  if (doc.embedding) {
    nlohmann::json e = nlohmann::json::object();
    for (const auto& [name, row] : doc.embedding->rows) {
      nlohmann::json r = nlohmann::json::array();
      for (const auto& x : row) r.push_back(rational_json(x, doc.embedding->exact));
      e[name] = r;
    }
    j["embedding"] = e;
  }
  if (doc.labels) j["labels"] = *doc.labels;
  if (!doc.meta.is_null()) j["meta"] = doc.meta;
  return j;
}

DatabaseDocument document_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error("database document must be a JSON object");
  if (!j.contains("schema") || !j["schema"].is_object()) throw Error("missing schema object");
  Schema schema;
  for (const auto& [name, ar] : j["schema"].items()) {
    if (!ar.is_number_integer()) throw Error("arity of " + name + " must be an integer");
    schema[name] = ar.get<int>();
  }
  std::vector<Fact> facts;
  if (j.contains("facts")) {
    for (const auto& row : j["facts"]) {
      if (!row.is_array() || row.empty() || !row[0].is_string())
        throw Error("fact must be an array [relation, values...]");
      Fact f{row[0].get<std::string>(), {}};
      for (std::size_t i = 1; i < row.size(); ++i) {
        if (!row[i].is_string()) throw Error("fact arguments must be strings");
        f.args.push_back(row[i].get<std::string>());
      }
      facts.push_back(std::move(f));
    }
  }
  std::vector<std::string> values;
  if (j.contains("values")) values = j["values"].get<std::vector<std::string>>();
  DatabaseDocument doc;
  if (j.contains("root")) {
    doc.root = j["root"].get<std::string>();
    values.push_back(*doc.root);
  }
  doc.db = Database(schema, facts, values);
  if (j.contains("embedding")) {
    Embedding e;
    std::optional<std::size_t> dim;
    bool any_string = false, any_number = false;
    for (const auto& [name, row] : j["embedding"].items()) {
      if (!doc.db.find_value(name)) throw Error("embedding for value outside the active domain: " + name);
      std::vector<Rational> r;
      for (const auto& x : row) {
        (x.is_string() ? any_string : any_number) = true;
        r.push_back(rational_of_json(x));
      }
      if (dim && *dim != r.size()) throw Error("embedding rows have inconsistent dimensions");
      dim = r.size();
      e.rows[name] = std::move(r);
    }
    if (any_string && any_number) throw Error("embedding mixes exact and floating entries");
    e.exact = any_string;
    doc.embedding = std::move(e);
  }
  if (j.contains("labels")) {
    std::map<std::string, int> labels;
    for (const auto& [name, v] : j["labels"].items()) {
      if (!doc.db.find_value(name)) throw Error("label for value outside the active domain: " + name);
      labels[name] = v.is_boolean() ? static_cast<int>(v.get<bool>()) : v.get<int>();
    }
    doc.labels = std::move(labels);
  }
  if (j.contains("meta")) doc.meta = j["meta"];
  return doc;
}

nlohmann::json to_json(const Database& db, const std::optional<std::string>& root) {
  DatabaseDocument doc;
  doc.db = db;
  doc.root = root;
  return to_json(doc);
}

nlohmann::json to_json(const PointedDatabase& p) { return to_json(p.db, p.root_name()); }

PointedDatabase pointed_from_json(const nlohmann::json& j) {
  auto doc = document_from_json(j);
  if (!doc.root) throw Error("pointed database requires a root");
  return PointedDatabase(std::move(doc.db), *doc.root);
}

nlohmann::json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error("malformed JSON in " + path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << j.dump(2) << "\n";
}

template <typename S>
Matrix<S> embedding_matrix(const Database& db, const Embedding& e) {
  std::size_t dim = e.rows.empty() ? 0 : e.rows.begin()->second.size();
  if (!e.rows.empty() && static_cast<int>(e.rows.size()) != db.size())
    throw Error("embedding must assign a vector to every value");
  Matrix<S> m = Matrix<S>::Zero(db.size(), static_cast<Eigen::Index>(dim));
  for (const auto& [name, row] : e.rows) {
    int id = db.value_id(name);
    for (std::size_t c = 0; c < row.size(); ++c) m(id, static_cast<Eigen::Index>(c)) = scalar_cast<S>(row[c]);
  }
  return m;
}

template Matrix<double> embedding_matrix<double>(const Database&, const Embedding&);
template Matrix<Rational> embedding_matrix<Rational>(const Database&, const Embedding&);

}  // namespace homnet
