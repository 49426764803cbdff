// Integration tests driving the installed CLI binary end to end.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pbmv/dataset.hpp"

using namespace pbmv;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string stdout_text;
};

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pbmv_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

CommandResult run_cli(const std::string& args) {
  const fs::path out = work_dir() / "stdout.txt";
  const std::string command =
      std::string(PBMV_CLI_PATH) + " " + args + " > " + out.string() + " 2> /dev/null";
  const int status = std::system(command.c_str());
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.stdout_text = buf.str();
  return result;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const fs::path& synth_dataset() {
  static const fs::path dir = [] {
    const fs::path d = work_dir() / "train_data";
    write_manifest(synth_multiview(120, 3, {0.1, 0.2, 0.3}, 5), d);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_CASE("synth then train exits cleanly and writes outputs") {
  const fs::path data = work_dir() / "synth_out";
  const auto synth = run_cli("synth --n 80 --noise 0.1,0.2 --seed 3 --out " + data.string());
  CHECK(synth.exit_code == 0);
  CHECK(fs::exists(data / "manifest.json"));

  // the written dataset reloads and round-trips
  const MultiviewDataset ds = load_manifest(data / "manifest.json");
  CHECK(ds.n() == 80);
  CHECK(ds.num_views() == 2);

  const fs::path model = work_dir() / "model.json";
  const fs::path trace = work_dir() / "trace.csv";
  const auto train = run_cli("train --manifest " + (data / "manifest.json").string() +
                             " --algorithm pb-mvboost --iterations 7 --depth 1 --seed 2 --out " +
                             model.string() + " --trace " + trace.string());
  CHECK(train.exit_code == 0);
  CHECK(fs::exists(model));
  CHECK(fs::exists(trace));
  CHECK(count_lines(read_file(trace)) == 8);  // header + 7 iterations
}

TEST_CASE("train output is byte-deterministic given the flags") {
  const fs::path manifest = synth_dataset() / "manifest.json";
  const std::string base = "train --manifest " + manifest.string() +
                           " --iterations 6 --depth 2 --seed 4 --jobs 2";
  REQUIRE(run_cli(base + " --out " + (work_dir() / "det1.json").string() + " --trace " +
                  (work_dir() / "det1.csv").string())
              .exit_code == 0);
  REQUIRE(run_cli(base + " --out " + (work_dir() / "det2.json").string() + " --trace " +
                  (work_dir() / "det2.csv").string())
              .exit_code == 0);
  CHECK(read_file(work_dir() / "det1.json") == read_file(work_dir() / "det2.json"));
  CHECK(read_file(work_dir() / "det1.csv") == read_file(work_dir() / "det2.csv"));
}

TEST_CASE("missing manifest exits 2 without partial output") {
  const fs::path model = work_dir() / "no_model.json";
  const auto result =
      run_cli("train --manifest /nonexistent/manifest.json --out " + model.string());
  CHECK(result.exit_code == 2);
  CHECK_FALSE(fs::exists(model));
}

TEST_CASE("unknown algorithm exits 2") {
  const auto result = run_cli("train --manifest " + (synth_dataset() / "manifest.json").string() +
                              " --algorithm gradient-descent");
  CHECK(result.exit_code == 2);
}

TEST_CASE("bounds reports a consistent certificate set") {
  const fs::path manifest = synth_dataset() / "manifest.json";
  const fs::path model = work_dir() / "bounds_model.json";
  REQUIRE(run_cli("train --manifest " + manifest.string() +
                  " --iterations 10 --depth 1 --out " + model.string() + " --trace " +
                  (work_dir() / "bounds_trace.csv").string())
              .exit_code == 0);

  const auto bounds = run_cli("bounds --model " + model.string() + " --manifest " +
                              manifest.string() + " --delta 0.05 --capital-c 1");
  REQUIRE(bounds.exit_code == 0);
  const auto doc = nlohmann::json::parse(bounds.stdout_text);
  CHECK(doc.at("empirical").contains("gibbs_risk"));
  CHECK(doc.at("empirical").contains("cbound"));
  CHECK(doc.at("bounds").contains("catoni_gibbs"));
  CHECK(doc.at("bounds").contains("cbound_theorem"));

  // ordering: the empirical bound never exceeds its generalization version
  if (!doc.at("empirical").at("cbound").is_null()) {
    CHECK(doc.at("empirical").at("cbound").get<double>() <=
          doc.at("bounds").at("cbound_theorem").get<double>() + 1e-12);
  }
}

TEST_CASE("bounds on a perfect model reports a zero empirical c-bound") {
  const fs::path data = work_dir() / "separable_data";
  if (!fs::exists(data)) write_manifest(synth_multiview(80, 2, {0.0, 0.0}, 1), data);
  const fs::path model = work_dir() / "perfect_model.json";
  REQUIRE(run_cli("train --manifest " + (data / "manifest.json").string() +
                  " --algorithm mv-mv --depth 1 --out " + model.string() + " --trace " +
                  (work_dir() / "perfect_trace.csv").string())
              .exit_code == 0);
  const auto bounds = run_cli("bounds --model " + model.string() + " --manifest " +
                              (data / "manifest.json").string());
  REQUIRE(bounds.exit_code == 0);
  const auto doc = nlohmann::json::parse(bounds.stdout_text);
  CHECK(doc.at("empirical").at("gibbs_risk").get<double>() == 0.0);
  CHECK(doc.at("empirical").at("cbound").get<double>() == 0.0);
  CHECK(doc.at("empirical").at("majority_vote_error").get<double>() == 0.0);
}

TEST_CASE("bounds rejects delta outside (0,1]") {
  const fs::path manifest = synth_dataset() / "manifest.json";
  const fs::path model = work_dir() / "delta_model.json";
  REQUIRE(run_cli("train --manifest " + manifest.string() + " --iterations 2 --depth 1 --out " +
                  model.string() + " --trace " + (work_dir() / "delta_trace.csv").string())
              .exit_code == 0);
  const auto result = run_cli("bounds --model " + model.string() + " --manifest " +
                              manifest.string() + " --delta 0");
  CHECK(result.exit_code == 2);
}

TEST_CASE("eval writes a schema-complete report deterministically") {
  const fs::path manifest = synth_dataset() / "manifest.json";
  const fs::path test_dir = work_dir() / "test_data";
  if (!fs::exists(test_dir)) write_manifest(synth_multiview(60, 3, {0.1, 0.2, 0.3}, 6), test_dir);

  const std::string args = "eval --manifest " + manifest.string() + " --test-manifest " +
                           (test_dir / "manifest.json").string() +
                           " --algorithm mv-mv --depth 1 --n 40 --runs 2 --seed 9 --out ";
  const auto a = run_cli(args + (work_dir() / "report_a").string());
  const auto b = run_cli(args + (work_dir() / "report_b").string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(read_file(work_dir() / "report_a.json") == read_file(work_dir() / "report_b.json"));

  const auto doc = nlohmann::json::parse(read_file(work_dir() / "report_a.json"));
  CHECK(doc.at("records").size() == 4);  // 2 classes x 2 runs

  // reported mean equals the arithmetic mean of the per-run macro values
  std::vector<double> run_macro(2, 0.0);
  for (const auto& rec : doc.at("records"))
    run_macro[rec.at("run").get<std::size_t>()] += rec.at("accuracy").get<double>() / 2.0;
  const double mean = (run_macro[0] + run_macro[1]) / 2.0;
  CHECK(doc.at("aggregate").at("accuracy_mean").get<double>() == doctest::Approx(mean));

  const std::string csv = read_file(work_dir() / "report_a.csv");
  CHECK(csv.rfind("class,run,accuracy,f1,degenerate_f1\n", 0) == 0);
  CHECK(count_lines(csv) == 5);
}

TEST_CASE("split-mnist produces a reloadable 4-view dataset") {
  // synthesize a small IDX pair
  const fs::path img_path = work_dir() / "images.idx";
  const fs::path lab_path = work_dir() / "labels.idx";
  {
    std::ofstream img(img_path, std::ios::binary);
    std::ofstream lab(lab_path, std::ios::binary);
    auto be32 = [](std::ofstream& out, std::uint32_t x) {
      for (int shift = 24; shift >= 0; shift -= 8) out.put(char((x >> shift) & 0xff));
    };
    be32(img, 0x00000803u);
    be32(img, 6);
    be32(img, 28);
    be32(img, 28);
    for (std::size_t i = 0; i < 6 * 28 * 28; ++i) img.put(char(i % 256));
    be32(lab, 0x00000801u);
    be32(lab, 6);
    for (int c : {0, 1, 2, 0, 1, 2}) lab.put(char(c));
  }

  const fs::path out_dir = work_dir() / "mnist_quarters";
  const auto split = run_cli("split-mnist --images " + img_path.string() + " --labels " +
                             lab_path.string() + " --mode quarters --positive-class 1 --out " +
                             out_dir.string());
  REQUIRE(split.exit_code == 0);
  const MultiviewDataset ds = load_manifest(out_dir / "manifest.json");
  CHECK(ds.num_views() == 4);
  for (const Matrix& view : ds.views) CHECK(view.cols() == 196);
  CHECK(ds.labels == std::vector<int>{-1, +1, -1, -1, +1, -1});

  // overlap mode shares the central pixels between views
  const fs::path overlap_dir = work_dir() / "mnist_overlap";
  REQUIRE(run_cli("split-mnist --images " + img_path.string() + " --labels " + lab_path.string() +
                  " --mode center-overlap --positive-class 0 --out " + overlap_dir.string())
              .exit_code == 0);
  const MultiviewDataset ov = load_manifest(overlap_dir / "manifest.json");
  // pixel (13,13) appears in view 0 at window (9,9) and view 3 at (3,3)
  CHECK(ov.views[0](0, 9 * 14 + 9) == ov.views[3](0, 3 * 14 + 3));
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("train").exit_code == 2);              // missing required option
  CHECK(run_cli("unknown-subcommand").exit_code == 2);
  CHECK(run_cli("synth --n 10 --out " + (work_dir() / "x").string() + " --noise 0.7").exit_code ==
        2);  // noise outside [0, 0.5)
}
