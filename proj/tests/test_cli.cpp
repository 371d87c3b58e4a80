#include "homnet/relational.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

const fs::path& workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / ("homnet_cli_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string path(const std::string& name) { return (workdir() / name).string(); }

Result cli(const std::string& args) {
  const std::string out = path("stdout.txt");
  const std::string cmd = std::string(HOMNET_CLI_PATH) + " " + args + " > " + out + " 2> " + path("stderr.txt");
  int status = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream s;
  s << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, s.str()};
}

void write(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }

}  // namespace

TEST_CASE("count") {
  write("path.json", R"({"schema": {"E": 2}, "facts": [["E", "v1", "v2"], ["E", "v2", "v3"]], "root": "v1"})");
  write("tour.json", R"({"schema": {"E": 2}, "facts": [["E", "1", "2"], ["E", "2", "3"], ["E", "1", "3"]], "root": "1"})");
  auto r = cli("count --pattern " + path("path.json") + " --target " + path("tour.json") + " --mode hom");
  CHECK(r.code == 0);
  CHECK(r.out == "1\n");
  auto all = cli("count --pattern " + path("path.json") + " --target " + path("tour.json") + " --mode inj --all-roots");
  CHECK(all.out == "1 1\n2 0\n3 0\n");
}

TEST_CASE("compile, check and run") {
  write("two.sexp", "(exists>= 2 (y) (E x y))");
  write("one.sexp", "(exists (y) (E x y))");
  CHECK(cli("compile --formula " + path("two.sexp") + " --target sum-dhn -o " + path("two.json")).code == 0);
  CHECK(cli("compile --formula " + path("one.sexp") + " --target sum-dhn -o " + path("one.json")).code == 0);
  auto eq = cli("check-equiv --formula " + path("two.sexp") + " --model " + path("two.json") +
                " --max-size 4 --samples 50 --seed 3");
  CHECK(eq.code == 0);
  auto rep = nlohmann::json::parse(eq.out);
  CHECK(rep["mismatches"] == 0);
  auto wrong = cli("check-equiv --formula " + path("one.sexp") + " --model " + path("two.json") + " --samples 50");
  CHECK(wrong.code == 2);

  write("fork.json", R"({"schema": {"E": 2}, "facts": [["E", "a", "b"], ["E", "a", "c"]]})");
  CHECK(cli("run --model " + path("two.json") + " --db " + path("fork.json") + " --root a").out == "accept\n");
  CHECK(cli("run --model " + path("two.json") + " --db " + path("fork.json") + " --root b").out == "reject\n");
  auto traced = cli("run --model " + path("two.json") + " --db " + path("fork.json") + " --root a --trace");
  CHECK(traced.out.rfind("accept\n", 0) == 0);
  CHECK(traced.out.find("embeddings") != std::string::npos);
}

TEST_CASE("analysis exit codes") {
  write("contra.sexp", "(and (exists (y) (E x y)) (not (exists (y) (E x y))))");
  CHECK(cli("compile --formula " + path("contra.sexp") + " --target max-dhn -o " + path("contra.json")).code == 0);
  write("loop.sexp", "(E x x)");
  CHECK(cli("compile --formula " + path("loop.sexp") + " --target max-dhn -o " + path("loop.json")).code == 0);
  CHECK(cli("emptiness --model " + path("loop.json") + " --degree 2 --max-size 2").code == 0);
  int code = cli("emptiness --model " + path("contra.json") + " --degree 2 --max-size 2").code;
  CHECK((code == 3 || code == 4));
  CHECK(cli("subsume --model-a " + path("one.json") + " --model-b " + path("two.json") + " --degree 3 --max-size 3").code == 0);
  CHECK(cli("subsume --model-a " + path("two.json") + " --model-b " + path("one.json") + " --degree 3 --max-size 3").code != 0);
  CHECK(cli("emptiness --model " + path("missing.json")).code == 1);
}

TEST_CASE("generate, train and eval") {
  auto g = cli("generate --dataset sun --positives 2 --negatives 2 --seed 4 -o " + path("sun.json"));
  CHECK(g.code == 0);
  auto doc = homnet::load_json_file(path("sun.json"));
  CHECK(doc["labels"].size() == 24);
  write("cfg.json", R"({"experiment": "sun", "seed": 2, "runs": 1, "epochs": 2,
                        "models": [{"name": "GIN", "dim": 4, "layers": 2}]})");
  auto t = cli("train --config " + path("cfg.json") + " -o " + path("report.json") + " --save-model " + path("gin.json"));
  CHECK(t.code == 0);
  CHECK(t.out.find("GIN") != std::string::npos);
  auto rep = homnet::load_json_file(path("report.json"));
  CHECK(rep["config"]["input"] == homnet::load_json_file(path("cfg.json")));
  CHECK(rep["models"].size() == 1);
  auto e = cli("eval --model " + path("gin.json") + " --data " + path("sun.json"));
  CHECK(e.code == 0);
  CHECK(nlohmann::json::parse(e.out)["examples"] == 24);
  CHECK(cli("train --experiment nope --epochs 1").code == 1);
}
