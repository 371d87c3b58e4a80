#include "homnet/analysis.hpp"
#include "homnet/compiler.hpp"
#include "homnet/datasets.hpp"
#include "homnet/training.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

using namespace homnet;

namespace {

constexpr int kExitError = 1;
constexpr int kExitEmptyDefinitive = 3;
constexpr int kExitEmptyBounded = 4;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void emit_json(const nlohmann::json& j, const std::string& path) {
  if (path.empty() || path == "-")
    std::cout << j.dump(2) << "\n";
  else
    save_json_file(path, j);
}

FormulaPtr load_formula(const std::string& file, const std::string& text, const std::string& builtin) {
  int given = !file.empty() + !text.empty() + !builtin.empty();
  if (given != 1) throw Error("give exactly one of --formula, --formula-text, --builtin");
  if (!builtin.empty()) return builtin_formula(builtin);
  return parse_formula(file.empty() ? text : read_text(file));
}

// Loads a network in its declared numeric and hands it to f.
template <typename F>
auto with_network(const std::string& path, F&& f) {
  auto j = load_json_file(path);
  if (network_numeric(j) == "rational") return f(dhn_from_json<Rational>(j));
  return f(dhn_from_json<double>(j));
}

void apply_overrides(ModelConfig& m, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "name") continue;
    else if (key == "layers") m.layers = value;
    else if (key == "dim") m.dim = value;
    else if (key == "transform_hidden") m.transform_hidden = value;
    else if (key == "combine_hidden") m.combine_hidden = value;
    else if (key == "combine_hidden_layers") m.combine_hidden_layers = value;
    else if (key == "head_hidden") m.head_hidden = value;
    else if (key == "leaky_slope") m.leaky_slope = value;
    else if (key == "layer_norm") m.layer_norm = value;
    else if (key == "lr") m.lr = value;
    else if (key == "epochs") m.epochs = value;
    else throw Error("unknown model setting: " + key);
  }
}

// {"experiment": "lt", "seed": 0, "runs": 3, "epochs": 10,
//  "models": [{"name": "sum-DHN", "lr": 0.001}, ...]}
ExperimentConfig experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg;
  cfg.name = j.at("experiment").get<std::string>();
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.runs = j.value("runs", 3);
  if (j.contains("epochs")) cfg.epochs = j["epochs"].get<int>();
  auto defaults = default_models(cfg.name);
  if (j.contains("models")) {
    for (const auto& jm : j["models"]) {
      auto name = jm.is_string() ? jm.get<std::string>() : jm.at("name").get<std::string>();
      auto it = std::find_if(defaults.begin(), defaults.end(), [&](const auto& m) { return m.name == name; });
      if (it == defaults.end()) throw Error("unknown model for " + cfg.name + ": " + name);
      ModelConfig m = *it;
      if (jm.is_object()) apply_overrides(m, jm);
      cfg.models.push_back(std::move(m));
    }
  }
  if (cfg.runs < 1) throw Error("runs must be positive");
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homomorphism networks: counting, compilation, analysis and training"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  auto add_seed = [&](CLI::App* c) { c->add_option("--seed", seed, "random seed"); };

  // generate
  auto* gen = app.add_subcommand("generate", "write a labeled benchmark dataset");
  std::string gen_name, gen_out;
  LtConfig lt;
  SunConfig sun;
  gen->add_option("--dataset", gen_name, "lt or sun")->required()->check(CLI::IsMember({"lt", "sun"}));
  gen->add_option("-o,--output", gen_out, "output file (stdout when omitted)");
  gen->add_option("--chains", lt.chains);
  gen->add_option("--chain-length", lt.chain_length);
  gen->add_option("--deletions", lt.deletions);
  gen->add_option("--positives", sun.positives);
  gen->add_option("--negatives", sun.negatives);
  gen->add_option("--max-extra-degree", sun.max_extra_degree);
  gen->add_option("--max-fattened", sun.max_fattened);
  gen->add_option("--max-decorations", sun.max_decorations);
  add_seed(gen);

  // train
  auto* train = app.add_subcommand("train", "train the models of an experiment");
  std::string train_config, train_exp, train_out, train_table, train_model_out;
  int train_runs = 3, train_log = 0;
  std::optional<int> train_epochs;
  train->add_option("--config", train_config, "experiment config JSON");
  train->add_option("--experiment", train_exp, "lt or sun (instead of --config)");
  train->add_option("--runs", train_runs);
  train->add_option("--epochs", train_epochs);
  train->add_option("-o,--output", train_out, "report JSON");
  train->add_option("--table", train_table, "report table text file");
  train->add_option("--save-model", train_model_out, "network JSON of the first model's selected run");
  train->add_option("--log-every", train_log);
  add_seed(train);

  // eval
  auto* ev = app.add_subcommand("eval", "F1 and AUROC of a network on a labeled dataset");
  std::string ev_model, ev_data, ev_split = "all";
  ev->add_option("--model", ev_model)->required();
  ev->add_option("--data", ev_data)->required();
  ev->add_option("--split", ev_split, "all, train, val or test (split drawn with seed + 1)")
      ->check(CLI::IsMember({"all", "train", "val", "test"}));
  add_seed(ev);

  // compile
  auto* comp = app.add_subcommand("compile", "compile a formula into a network");
  std::string comp_file, comp_text, comp_builtin, comp_target, comp_out;
  bool comp_undirected = false;
  comp->add_option("--formula", comp_file, "formula file (s-expression)");
  comp->add_option("--formula-text", comp_text);
  comp->add_option("--builtin", comp_builtin);
  comp->add_option("--target", comp_target)->required();
  comp->add_option("-o,--output", comp_out);
  comp->add_flag("--undirected", comp_undirected, "strictify for symmetric loop-free databases");
  add_seed(comp);

  // check-equiv
  auto* eq = app.add_subcommand("check-equiv", "compare a network against a formula");
  std::string eq_file, eq_text, eq_builtin, eq_model, eq_out;
  EquivalenceConfig eq_cfg;
  eq->add_option("--formula", eq_file);
  eq->add_option("--formula-text", eq_text);
  eq->add_option("--builtin", eq_builtin);
  eq->add_option("--model", eq_model)->required();
  eq->add_option("--max-size", eq_cfg.max_size);
  eq->add_option("--exhaustive-size", eq_cfg.exhaustive_size);
  eq->add_option("--samples", eq_cfg.samples);
  eq->add_option("-o,--output", eq_out);
  add_seed(eq);

  // count
  auto* cnt = app.add_subcommand("count", "count matches of a pattern");
  std::string cnt_pattern, cnt_target, cnt_mode = "hom";
  bool cnt_all = false;
  cnt->add_option("--pattern", cnt_pattern)->required();
  cnt->add_option("--target", cnt_target)->required();
  cnt->add_option("--mode", cnt_mode)->check(CLI::IsMember({"hom", "inj", "emb"}));
  cnt->add_flag("--all-roots", cnt_all, "one count per target value");
  add_seed(cnt);

  // run
  auto* rn = app.add_subcommand("run", "run a network at a root");
  std::string rn_model, rn_db, rn_root;
  bool rn_trace = false;
  rn->add_option("--model", rn_model)->required();
  rn->add_option("--db", rn_db)->required();
  rn->add_option("--root", rn_root, "root value (default: the document's root)");
  rn->add_flag("--trace", rn_trace, "print embeddings and score");
  add_seed(rn);

  // emptiness
  auto* em = app.add_subcommand("emptiness", "search for an accepted bounded-degree database");
  std::string em_model, em_out;
  int em_degree = 4, em_size = 5;
  em->add_option("--model", em_model)->required();
  em->add_option("--degree", em_degree);
  em->add_option("--max-size", em_size);
  em->add_option("-o,--output", em_out);
  add_seed(em);

  // subsume
  auto* sb = app.add_subcommand("subsume", "search for a database accepted by A and rejected by B");
  std::string sb_a, sb_b, sb_out;
  int sb_degree = 4, sb_size = 5;
  sb->add_option("--model-a", sb_a)->required();
  sb->add_option("--model-b", sb_b)->required();
  sb->add_option("--degree", sb_degree);
  sb->add_option("--max-size", sb_size);
  sb->add_option("-o,--output", sb_out);
  add_seed(sb);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      lt.seed = seed;
      sun.seed = seed;
      auto data = gen_name == "lt" ? gen_local_transitivity(lt) : gen_sun(sun);
      emit_json(to_json(to_document(data)), gen_out);
      std::cerr << gen_name << ": " << data.db.size() << " values, " << data.db.num_facts() << " facts, "
                << data.examples.size() << " examples, " << data.positives() << " positive\n";
      return 0;
    }
    if (*train) {
      nlohmann::json input;
      if (!train_config.empty()) {
        input = load_json_file(train_config);
      } else {
        if (train_exp.empty()) throw Error("give --config or --experiment");
        input = {{"experiment", train_exp}, {"seed", seed}, {"runs", train_runs}};
        if (train_epochs) input["epochs"] = *train_epochs;
      }
      auto cfg = experiment_config(input);
      cfg.log_every = train_log;
      cfg.keep_models = !train_model_out.empty();
      auto rep = run_experiment(cfg);
      rep.config["input"] = input;
      auto j = rep.to_json();
      if (!train_out.empty()) save_json_file(train_out, j);
      if (!train_table.empty()) std::ofstream(train_table) << rep.table();
      if (!train_model_out.empty()) save_json_file(train_model_out, to_json(*rep.models.at(0).best().model));
      std::cout << rep.table();
      return 0;
    }
    if (*ev) {
      auto data = dataset_from_document(document_from_json(load_json_file(ev_data)));
      std::vector<std::size_t> idx(data.examples.size());
      std::iota(idx.begin(), idx.end(), 0);
      if (ev_split != "all") {
        auto split = split_examples(data.examples.size(), seed + 1);
        idx = ev_split == "train" ? split.train : ev_split == "val" ? split.val : split.test;
      }
      auto metrics = with_network(ev_model, [&](const auto& net) {
        auto trace = run_all(net, data.db);
        std::vector<double> scores;
        std::vector<int> labels;
        for (auto i : idx) {
          // Accepted values score above zero, so F1 at threshold 0 matches the classifier.
          int v = data.examples[i];
          double s = to_double(trace.scores[v]) - to_double(net.classifier.threshold);
          if (trace.accept[v] && s <= 0) s = 1e-300;
          if (!trace.accept[v] && s > 0) s = 0;
          scores.push_back(s);
          labels.push_back(data.labels[i]);
        }
        return compute_metrics(scores, labels);
      });
      nlohmann::json j{{"examples", idx.size()}, {"f1", metrics.f1}, {"auroc", metrics.auroc},
                       {"auroc_defined", metrics.auroc_defined}};
      std::cout << j.dump(2) << "\n";
      return 0;
    }
    if (*comp) {
      auto f = load_formula(comp_file, comp_text, comp_builtin);
      auto target = parse_compile_target(comp_target);
      FormulaPtr g = f;
      if (comp_undirected && (target == CompileTarget::MaxDen || target == CompileTarget::SumDen))
        g = strictify(f, StrictifyOptions{.undirected = true});
      auto net = compile(g, target);
      emit_json(to_json(net), comp_out);
      if (!comp_out.empty()) std::cerr << "compiled " << to_string(target) << ": " << net.layers.size() << " layers\n";
      return 0;
    }
    if (*eq) {
      auto f = load_formula(eq_file, eq_text, eq_builtin);
      eq_cfg.seed = seed;
      auto rep = with_network(eq_model, [&](const auto& net) { return check_equivalence(*f, net, eq_cfg); });
      emit_json(rep.to_json(), eq_out);
      if (!eq_out.empty())
        std::cout << (rep.ok() ? "equivalent" : "disagree") << " on " << rep.points << " points in " << rep.databases
                  << " databases\n";
      return rep.ok() ? 0 : 2;
    }
    if (*cnt) {
      auto pattern = pointed_from_json(load_json_file(cnt_pattern));
      auto doc = document_from_json(load_json_file(cnt_target));
      auto mode = cnt_mode == "hom" ? MatchMode::Hom : cnt_mode == "inj" ? MatchMode::Injective : MatchMode::Embedding;
      if (cnt_all) {
        auto counts = count_all_roots(pattern, doc.db, mode);
        for (int v = 0; v < doc.db.size(); ++v) std::cout << doc.db.value(v) << " " << counts[v] << "\n";
      } else if (doc.root) {
        std::cout << count_matches(pattern, PointedDatabase(doc.db, *doc.root), mode) << "\n";
      } else {
        std::cout << count_matches(pattern.db, doc.db, mode) << "\n";
      }
      return 0;
    }
    if (*rn) {
      auto doc = document_from_json(load_json_file(rn_db));
      std::string root = rn_root.empty() ? doc.root.value_or("") : rn_root;
      if (root.empty()) throw Error("give --root or a document with a root");
      const int r = doc.db.value_id(root);
      return with_network(rn_model, [&](const auto& net) {
        using S = typename std::decay_t<decltype(net)>::Scalar;
        Matrix<S> input;
        const Matrix<S>* in = nullptr;
        if (net.input_dim > 0) {
          if (!doc.embedding) throw Error("network needs an input embedding");
          input = embedding_matrix<S>(doc.db, *doc.embedding);
          in = &input;
        }
        auto trace = run_all(net, doc.db, in);
        std::cout << (trace.accept[r] ? "accept" : "reject") << "\n";
        if (rn_trace) {
          nlohmann::json t = nlohmann::json::array();
          for (const auto& e : trace.embeddings) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index c = 0; c < e.cols(); ++c) {
              if constexpr (is_exact_v<S>)
                row.push_back(to_string(e(r, c)));
              else
                row.push_back(e(r, c));
            }
            t.push_back(row);
          }
          nlohmann::json score;
          if constexpr (is_exact_v<S>)
            score = to_string(trace.scores[r]);
          else
            score = trace.scores[r];
          std::cout << nlohmann::json{{"embeddings", t}, {"score", score}}.dump(2) << "\n";
        }
        return 0;
      });
    }
    auto verdict_exit = [](const AnalysisResult& res) {
      switch (res.verdict) {
        case Verdict::Witness: return 0;
        case Verdict::EmptyDefinitive: return kExitEmptyDefinitive;
        case Verdict::EmptyBounded: return kExitEmptyBounded;
      }
      return kExitError;
    };
    if (*em) {
      auto res = with_network(em_model, [&](const auto& net) { return emptiness_bounded(net, em_degree, em_size); });
      emit_json(res.to_json(), em_out);
      std::cerr << to_string(res.verdict) << " after " << res.examined << " databases\n";
      return verdict_exit(res);
    }
    if (*sb) {
      auto ja = load_json_file(sb_a);
      auto jb = load_json_file(sb_b);
      AnalysisResult res;
      if (network_numeric(ja) == "rational" && network_numeric(jb) == "rational")
        res = subsumption_bounded(dhn_from_json<Rational>(ja), dhn_from_json<Rational>(jb), sb_degree, sb_size);
      else
        res = subsumption_bounded(dhn_from_json<double>(ja), dhn_from_json<double>(jb), sb_degree, sb_size);
      emit_json(res.to_json(), sb_out);
      std::cerr << (res.verdict == Verdict::Witness ? "counterexample" : to_string(res.verdict)) << " after "
                << res.examined << " databases\n";
      return verdict_exit(res);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
