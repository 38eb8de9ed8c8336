#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "spde/errors.hpp"
#include "spde/harness.hpp"
#include "spde/io.hpp"
#include "spde/toml_lite.hpp"

using namespace spde;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& out_dir, int threads) {
  const std::string text =
      "name = \"tiny\"\n"
      "[problem]\nd = 1\nlambda = 0.25\ngamma = 0.2\np = 20\n"
      "[covariance]\nmodel = \"white\"\n"
      "[grid]\nn = 32\nL = 8.0\n"
      "[time]\nT = 0.004\ndt = 1e-3\nrecord_every = 2\n"
      "[initial]\nkind = \"constant\"\namplitude = 1.0\n"
      "[runs]\npaths = 3\nseed = 42\n"
      "[monitors]\nthresholds = [10.0]\nsnapshot_times = [0.004]\nprobes = 2\n";
  auto cfg = config_from_toml(parse_toml(text));
  cfg.out_dir = out_dir;
  cfg.threads = threads;
  return cfg;
}

}  // namespace

TEST_CASE("experiment run: artifacts, manifest, aggregation") {
  const std::string dir = "harness_test_out";
  fs::remove_all(dir);
  const auto cfg = tiny_config(dir, 1);
  REQUIRE(cfg.admissibility.admissible);
  const auto out = run_experiment(cfg);

  CHECK(out.records.size() == 3);
  CHECK(out.failed_paths.empty());
  CHECK(out.blowups == 0);
  CHECK(out.mass_stat_valid);
  CHECK(out.mass_stat.n == 3);
  REQUIRE(out.tau_hit_fraction.size() == 1);
  CHECK(out.tau_hit_fraction[0] == 0.0);  // threshold 10 is never reached

  // every artifact listed in the manifest exists with matching bytes + hash
  REQUIRE(!out.manifest.artifacts.empty());
  for (const auto& a : out.manifest.artifacts) {
    const auto path = fs::path(dir) / a.name;
    REQUIRE_MESSAGE(fs::exists(path), a.name);
    const std::string bytes = read_text_file(path.string());
    CHECK(bytes.size() == a.bytes);
    CHECK(hash_hex(fnv1a64(bytes)) == a.fnv1a64);
  }
  auto has = [&](const std::string& name) {
    for (const auto& a : out.manifest.artifacts)
      if (a.name == name) return true;
    return false;
  };
  CHECK(has("path_0000.csv"));
  CHECK(has("path_0002.csv"));
  CHECK(has("probes_0000.csv"));
  CHECK(has("tau.csv"));
  CHECK(has("snapshots.bin"));
  CHECK(has("snapshots.json"));
  CHECK(has("aggregate.json"));

  // the manifest document itself parses and cross-references the artifacts
  const auto m = nlohmann::json::parse(out.manifest.json);
  CHECK(m["name"] == "tiny");
  CHECK(m["config"]["runs"]["paths"] == 3);
  REQUIRE(m["paths"].size() == 3);
  CHECK(m["paths"][1]["stream"] == 1);
  CHECK(m["artifacts"].size() == out.manifest.artifacts.size());
  CHECK(m.contains("timings"));

  const auto disk =
      nlohmann::json::parse(read_text_file((fs::path(dir) / "manifest.json").string()));
  CHECK(disk["artifacts"] == m["artifacts"]);

  // snapshots.bin carries one field per (path, time): 3 * 32 doubles
  const auto bin = read_text_file((fs::path(dir) / "snapshots.bin").string());
  CHECK(bin.size() == 3 * 32 * 8);

  fs::remove_all(dir);
}

TEST_CASE("artifact bytes do not depend on the thread count") {
  const std::string dir1 = "harness_thr1_out";
  const std::string dir2 = "harness_thr2_out";
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  const auto out1 = run_experiment(tiny_config(dir1, 1));
  const auto out2 = run_experiment(tiny_config(dir2, 2));
  REQUIRE(out1.manifest.artifacts.size() == out2.manifest.artifacts.size());
  for (std::size_t i = 0; i < out1.manifest.artifacts.size(); ++i) {
    const auto& a = out1.manifest.artifacts[i];
    const auto& b = out2.manifest.artifacts[i];
    CHECK(a.name == b.name);
    CHECK(a.bytes == b.bytes);
    CHECK(a.fnv1a64 == b.fnv1a64);
  }
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("reruns of one config are bit-stable") {
  auto cfg = tiny_config("", 1);  // no output directory: compute only
  const auto a = run_experiment(cfg);
  const auto b = run_experiment(cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t p = 0; p < a.records.size(); ++p) {
    const auto& ra = a.records[p];
    const auto& rb = b.records[p];
    REQUIRE(ra.sup_norm.size() == rb.sup_norm.size());
    for (std::size_t i = 0; i < ra.sup_norm.size(); ++i) {
      CHECK(ra.sup_norm[i] == rb.sup_norm[i]);
      CHECK(ra.mass[i] == rb.mass[i]);
    }
  }
  // artifact list is still computed (hashes travel in the manifest), but
  // nothing touches the filesystem without an output directory
  CHECK(!a.manifest.artifacts.empty());
  CHECK(!a.manifest.json.empty());
  CHECK(!fs::exists("path_0000.csv"));
  CHECK(!fs::exists("manifest.json"));
}

TEST_CASE("paths carry their stream index as the rng stream") {
  const auto cfg = tiny_config("", 1);
  const auto out = run_experiment(cfg);
  for (std::size_t p = 0; p < out.records.size(); ++p) {
    CHECK(out.records[p].stream == p);
    CHECK(out.records[p].seed == 42);
  }
}
