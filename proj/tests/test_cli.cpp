#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "eva/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = eva::cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workspace() {
  static const fs::path dir = [] {
    auto p = fs::temp_directory_path() / "eva_cli_test";
    fs::remove_all(p);
    fs::create_directories(p);
    std::ofstream(p / "data.conf") << "train_samples=16\nval_samples=8\n";
    std::ofstream(p / "train.conf") << "epochs=1\nbatch_size=8\nlr=0.001\ndim=8\nwindow_sizes=8,12\nstride=4\n";
    return p;
  }();
  return dir;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"bogus"}).code == 2);
  const auto r = run({"eval", "--data", workspace().string(), "--out", (workspace() / "r.csv").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("checkpoint") != std::string::npos);
  CHECK(run({"ablate", "--grid", "everything", "--data", workspace().string(), "--out", "x.csv"}).code == 2);
}

TEST_CASE("help exits with 0") { CHECK(run({"--help"}).code == 0); }

TEST_CASE("gradcheck succeeds") {
  const auto r = run({"gradcheck", "--seeds", "1,2"});
  CHECK(r.code == 0);
  CHECK(r.out.find("84/84 gradient checks passed") != std::string::npos);
}

TEST_CASE("gen-data, train and eval end to end") {
  const auto ws = workspace();
  REQUIRE(run({"gen-data", "--config", (ws / "data.conf").string(), "--seed", "3", "--out", (ws / "data").string()})
              .code == 0);
  CHECK(fs::exists(ws / "data" / "target_val.evds"));

  const auto tr = run({"train", "--config", (ws / "train.conf").string(), "--data", (ws / "data").string(), "--out",
                       (ws / "run").string()});
  REQUIRE(tr.code == 0);
  CHECK(count_lines(ws / "run" / "metrics.csv") == 2);
  CHECK(fs::exists(ws / "run" / "weak_model.ckpt"));

  const auto ev = run({"eval", "--checkpoint", (ws / "run" / "weak_model.ckpt").string(), "--data",
                       (ws / "data").string(), "--out", (ws / "report.csv").string(), "--predictions",
                       (ws / "preds.csv").string()});
  CHECK(ev.code == 0);
  CHECK(count_lines(ws / "report.csv") == 2);
  CHECK(count_lines(ws / "preds.csv") == 9);

  // A runtime failure is reported with its component and exit code 1.
  std::ofstream(ws / "broken.ckpt") << "not a checkpoint";
  const auto bad = run({"eval", "--checkpoint", (ws / "broken.ckpt").string(), "--data", (ws / "data").string(),
                        "--out", (ws / "r2.csv").string()});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("format") != std::string::npos);

  const auto ab = run({"ablate", "--grid", "sharing", "--config", (ws / "train.conf").string(), "--data",
                       (ws / "data").string(), "--out", (ws / "sharing.csv").string()});
  CHECK(ab.code == 0);
  std::ifstream in(ws / "sharing.csv");
  std::size_t rows = 0;
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line.rfind("label", 0) != 0 && line.find("mean") == std::string::npos) ++rows;
  CHECK(rows == 6);
}
