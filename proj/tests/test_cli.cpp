#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() / ("flg_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int flg(const std::string& args) {
  const std::string cmd = std::string(FLG_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_all(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const fs::path& p) {
  std::istringstream in(read_all(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// 20 labeled, batches of 10 up to 60: five evaluations per run.
std::string small_config(const fs::path& dataset, const fs::path& out) {
  return R"({"dataset": ")" + dataset.string() + R"(", "out": ")" + out.string() +
         R"(", "classifier": {"algorithm": "mlr", "mlr_epochs": 60},
            "n": 20, "h": 10, "threshold": 60, "seeds": [1, 2], "strategies": ["flg", "random"]})";
}

}  // namespace

TEST_CASE("synth writes a loadable cube, byte-identical per seed") {
  TempDir tmp;
  REQUIRE(flg("synth --classes 3 --bands 8 --size 16x16 --tile 4 --seed 4 --out " + q(tmp.path / "a")) == 0);
  REQUIRE(flg("synth --classes 3 --bands 8 --size 16x16 --tile 4 --seed 4 --out " + q(tmp.path / "b.json")) == 0);
  for (const char* f : {"a.json", "a.bin", "a.labels.json", "a.labels.bin"}) CHECK(fs::exists(tmp.path / f));
  CHECK(fs::file_size(tmp.path / "a.bin") == 8u * 16 * 16 * 4);
  CHECK(read_all(tmp.path / "a.bin") == read_all(tmp.path / "b.bin"));
  CHECK(read_all(tmp.path / "a.labels.bin") == read_all(tmp.path / "b.labels.bin"));
  CHECK(flg("synth --size 16by16 --out " + q(tmp.path / "c")) == 1);
  CHECK(flg("synth --out " + q(tmp.path / "missing_dir" / "c")) != 0);
}

TEST_CASE("run writes curves with one row per seed, strategy and iteration") {
  TempDir tmp;
  REQUIRE(flg("synth --bands 8 --size 20x20 --tile 5 --out " + q(tmp.path / "cube")) == 0);
  write_text(tmp.path / "cfg.json", small_config(tmp.path / "cube.json", tmp.path / "out"));
  REQUIRE(flg("run --config " + q(tmp.path / "cfg.json")) == 0);
  const auto rows = lines(tmp.path / "out" / "curves.csv");
  REQUIRE(rows.size() == 1 + 2 * 2 * 5);
  CHECK(rows[0] == "seed,iteration,train_size,oa,aa,kappa,precision,recall,f1,duration_ms,strategy");
  for (const char* f : {"summary.csv", "timing.csv", "meta.json"}) CHECK(fs::exists(tmp.path / "out" / f));

  SUBCASE("a second run reproduces curves.csv byte for byte") {
    REQUIRE(flg("run --config " + q(tmp.path / "cfg.json") + " --out " + q(tmp.path / "out2")) == 0);
    CHECK(read_all(tmp.path / "out" / "curves.csv") == read_all(tmp.path / "out2" / "curves.csv"));
  }
  SUBCASE("command-line overrides") {
    REQUIRE(flg("run --config " + q(tmp.path / "cfg.json") + " --seed-list 7 --strategy fuzziness-only --out " +
                q(tmp.path / "out3")) == 0);
    const auto r = lines(tmp.path / "out3" / "curves.csv");
    REQUIRE(r.size() == 1 + 5);
    CHECK(r[1].rfind("7,0,20,", 0) == 0);
    CHECK(r[1].substr(r[1].rfind(',') + 1) == "fuzziness-only");
  }
  SUBCASE("report is invariant to row order") {
    auto shuffled = rows;
    std::reverse(shuffled.begin() + 1, shuffled.end());
    std::string text;
    for (const auto& l : shuffled) text += l + "\n";
    fs::create_directories(tmp.path / "perm");
    write_text(tmp.path / "perm" / "curves.csv", text);
    REQUIRE(flg("report --in " + q(tmp.path / "out" / "curves.csv") + " --metric kappa") == 0);
    REQUIRE(flg("report --in " + q(tmp.path / "perm" / "curves.csv") + " --metric kappa") == 0);
    CHECK(read_all(tmp.path / "out" / "report_kappa.csv") == read_all(tmp.path / "perm" / "report_kappa.csv"));
    CHECK(fs::exists(tmp.path / "out" / "report_kappa.txt"));
    const auto rep = lines(tmp.path / "out" / "report_kappa.csv");
    CHECK(rep[0] == "strategy,iteration,train_size,mean,std,runs");
    CHECK(rep.size() == 1 + 2 * 5);
  }
}

TEST_CASE("run rejects bad configurations with exit code 1 and no outputs") {
  TempDir tmp;
  SUBCASE("missing dataset") {
    write_text(tmp.path / "cfg.json", small_config(tmp.path / "nope.json", tmp.path / "out"));
    CHECK(flg("run --config " + q(tmp.path / "cfg.json")) == 1);
    CHECK_FALSE(fs::exists(tmp.path / "out" / "curves.csv"));
  }
  SUBCASE("unknown key") {
    write_text(tmp.path / "cfg.json", R"({"synth": {}, "out": ")" + (tmp.path / "out").string() + R"(", "gamma": 1})");
    CHECK(flg("run --config " + q(tmp.path / "cfg.json")) == 1);
    CHECK_FALSE(fs::exists(tmp.path / "out" / "curves.csv"));
  }
  SUBCASE("malformed JSON") {
    write_text(tmp.path / "cfg.json", "{\"synth\": ");
    CHECK(flg("run --config " + q(tmp.path / "cfg.json")) == 1);
  }
  SUBCASE("bad strategy override") {
    write_text(tmp.path / "cfg.json", R"({"synth": {}, "out": ")" + (tmp.path / "out").string() + R"("})");
    CHECK(flg("run --config " + q(tmp.path / "cfg.json") + " --strategy greedy") == 1);
  }
  SUBCASE("missing required option") { CHECK(flg("run") == 1); }
}

TEST_CASE("report input errors") {
  TempDir tmp;
  write_text(tmp.path / "bad.csv", "a,b,c\n1,2,3\n");
  CHECK(flg("report --in " + q(tmp.path / "bad.csv")) == 1);
  CHECK(flg("report --in " + q(tmp.path / "absent.csv")) == 1);
  CHECK(flg("report --in " + q(tmp.path / "bad.csv") + " --metric speed") == 1);
}
