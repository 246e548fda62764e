#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhd/cli.hpp"

namespace fs = std::filesystem;
using mhd::cli::cli_main;

namespace {

struct Result {
  int code = -1;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "mhd");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "mhd_cli_test" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.cfg";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const char* kSmallRun =
    "n1 = 16\nn2 = 16\ndt = 0.02\nt_end = 0.4\nm = 2\n"
    "data.kind = random\ndata.delta = 0.05\n";

}  // namespace

TEST_CASE("usage errors exit 64") {
  CHECK(invoke({}).code == 64);
  CHECK(invoke({"bogus-command"}).code == 64);
  CHECK(invoke({"nonlinear-run", "--frobnicate"}).code == 64);
  CHECK(invoke({"nonlinear-run", "--tolerance", "noequals"}).code == 64);
  CHECK(invoke({"nonlinear-run", "--tolerance", "slope=abc"}).code == 64);
  CHECK(invoke({"nonlinear-run", "--config", "/nonexistent/run.cfg"}).code == 64);

  const auto dir = scratch("usage");
  const auto zero_window = write_config(dir, "decay.t_max = 0\n");
  const auto r = invoke({"linear-decay", "--config", zero_window.string(), "--out", dir.string()});
  CHECK(r.code == 64);
  CHECK(r.err.find("usage") != std::string::npos);

  const auto unknown = write_config(dir, "decay.bogus = 1\n");
  CHECK(invoke({"linear-decay", "--config", unknown.string(), "--out", dir.string()}).code == 64);
  const auto unknown_top = write_config(dir, "frobnicate = 1\n");
  CHECK(invoke({"nonlinear-run", "--config", unknown_top.string(), "--out", dir.string()}).code == 64);
  const auto malformed = write_config(dir, "n1 16\n");
  CHECK(invoke({"nonlinear-run", "--config", malformed.string(), "--out", dir.string()}).code == 64);
}

TEST_CASE("help") {
  const auto r = invoke({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("--tolerance") != std::string::npos);
  CHECK(r.out.find("--seed") != std::string::npos);
}

TEST_CASE("nonlinear-run with zero data") {
  const auto dir = scratch("zero");
  const auto cfg = write_config(dir, "n1 = 16\nn2 = 16\ndt = 0.05\nt_end = 0.5\nm = 2\n");
  const auto r = invoke({"nonlinear-run", "--config", cfg.string(), "--out", (dir / "o").string(), "--quiet"});
  REQUIRE(r.code == 0);
  const auto j = read_json(dir / "o" / "summary.json");
  CHECK(j["status"] == "ok");
  CHECK(j["E0"] == 0.0);
  CHECK(j["G"] == 0.0);
  CHECK(fs::exists(dir / "o" / "diagnostics.csv"));
  CHECK(r.out.empty());
}

TEST_CASE("invariant and blow-up exits are distinct") {
  const auto dir = scratch("codes");
  const auto cfg = write_config(dir, kSmallRun);
  const auto inv = invoke({"nonlinear-run", "--config", cfg.string(), "--out", (dir / "inv").string(),
                           "--tolerance", "cancellation=-1", "--quiet"});
  CHECK(inv.code == 3);
  CHECK(read_json(dir / "inv" / "summary.json")["status"] == "invariant-violation");

  const auto big = write_config(dir, "n1 = 16\nn2 = 16\ndt = 0.05\nt_end = 5\ndata.kind = random\n"
                                     "data.delta = 10\ndata.norm = l2\n");
  const auto r = invoke({"nonlinear-run", "--config", big.string(), "--out", (dir / "big").string(), "--quiet"});
  CHECK(r.code == 4);
  const auto j = read_json(dir / "big" / "summary.json");
  CHECK(j["status"] == "blow-up");
  CHECK(j["records"].get<int>() >= 1);
}

TEST_CASE("fixed seed gives byte-identical CSV") {
  const auto dir = scratch("determinism");
  const auto cfg = write_config(dir, kSmallRun);
  for (const char* sub : {"a", "b"})
    REQUIRE(invoke({"nonlinear-run", "--config", cfg.string(), "--out", (dir / sub).string(), "--seed", "7",
                    "--quiet"})
                .code == 0);
  REQUIRE(invoke({"nonlinear-run", "--config", cfg.string(), "--out", (dir / "c").string(), "--seed", "8",
                  "--quiet"})
              .code == 0);
  const auto a = slurp(dir / "a" / "diagnostics.csv");
  CHECK(!a.empty());
  CHECK(a == slurp(dir / "b" / "diagnostics.csv"));
  CHECK(a != slurp(dir / "c" / "diagnostics.csv"));
  CHECK(read_json(dir / "a" / "summary.json")["seed"] == 7);
}

TEST_CASE("linear-decay default window and tolerance override") {
  const auto dir = scratch("decay");
  const auto ok = invoke({"linear-decay", "--out", (dir / "ok").string(), "--quiet"});
  REQUIRE(ok.code == 0);
  const auto j = read_json(dir / "ok" / "decay_fits.json");
  CHECK(j["pass"] == true);
  const double expected[] = {-0.75, -1.25, -0.25, -0.75};
  const char* comps[] = {"v1", "v2", "B1", "B2"};
  for (int c = 0; c < 4; ++c) {
    CHECK(fs::exists(dir / "ok" / (std::string("decay_prop25_") + comps[c] + ".csv")));
    bool found = false;
    for (const auto& f : j["fits"])
      if (f["weight"] == comps[c] && f["profile"] == "prop25") {
        found = true;
        CHECK(std::abs(f["slope"].get<double>() - expected[c]) <= 0.05);
      }
    CHECK(found);
  }
  for (int jj = 0; jj <= 2; ++jj) CHECK(fs::exists(dir / "ok" / ("decay_fstar_j" + std::to_string(jj) + ".csv")));

  const auto strict = invoke({"linear-decay", "--out", (dir / "strict").string(), "--tolerance", "slope=1e-4",
                              "--quiet"});
  CHECK(strict.code == 2);
  const auto js = read_json(dir / "strict" / "decay_fits.json");
  CHECK(js["pass"] == false);
  CHECK(!js["failures"].empty());
}

TEST_CASE("audits") {
  const auto dir = scratch("audits");
  SUBCASE("lemma scan reports the offending triple") {
    const auto r = invoke({"audit-lemma", "--out", (dir / "lemma").string(), "--quiet"});
    CHECK(r.code == 2);
    CHECK(r.err.find("xi") != std::string::npos);
    const auto j = read_json(dir / "lemma" / "lemma_audit.json");
    CHECK(j["pass"] == false);
    CHECK(fs::exists(dir / "lemma" / "lemma_audit.csv"));
    const auto loose = invoke({"audit-lemma", "--out", (dir / "loose").string(), "--tolerance",
                               "lemma_ratio=1e12", "--quiet"});
    CHECK(loose.code == 0);
  }
  SUBCASE("energy audit on a linear run") {
    const auto cfg = write_config(dir, "n1 = 16\nn2 = 16\ndt = 0.01\nt_end = 1\nm = 2\nnonlinear = false\n"
                                       "data.kind = random\ndata.delta = 0.1\n");
    const auto r = invoke({"audit-energy", "--config", cfg.string(), "--out", (dir / "energy").string(), "--quiet"});
    CHECK(r.code == 0);
    const auto j = read_json(dir / "energy" / "energy_audit.json");
    CHECK(j["pass"] == true);
    CHECK(j["implied_C"] == 0.0);
  }
  SUBCASE("embedding family") {
    const auto cfg = write_config(dir, "embedding.n = 64\n");
    const auto r = invoke({"audit-embedding", "--config", cfg.string(), "--out", (dir / "emb").string(), "--quiet"});
    CHECK(r.code == 0);
    const auto j = read_json(dir / "emb" / "embedding_audit.json");
    CHECK(std::isfinite(j["max_ratio"].get<double>()));
    CHECK(j["rows"].size() == 4);
  }
}

TEST_CASE("fit command") {
  const auto dir = scratch("fit");
  {
    std::ofstream csv(dir / "curve.csv");
    csv.precision(17);
    csv << "time,value,component\n";
    for (int k = 0; k <= 40; ++k) {
      const double t = std::pow(10.0, 2.0 + 2.0 * k / 40);
      csv << t << ',' << std::pow(1 + t, -0.75) << ",v1\n";
      csv << t << ',' << std::pow(1 + t, -1.25) << ",v2\n";
    }
  }
  const auto good = write_config(dir, "fit.input = " + (dir / "curve.csv").string() +
                                          "\nfit.component = v2\nfit.expected = -1.25\n");
  REQUIRE(invoke({"fit", "--config", good.string(), "--out", (dir / "a").string(), "--quiet"}).code == 0);
  const auto j = read_json(dir / "a" / "fit.json");
  CHECK(j["slope"].get<double>() == doctest::Approx(-1.25).epsilon(1e-9));

  const auto bad = write_config(dir, "fit.input = " + (dir / "curve.csv").string() +
                                         "\nfit.component = v1\nfit.expected = -0.5\n");
  CHECK(invoke({"fit", "--config", bad.string(), "--out", (dir / "b").string(), "--quiet"}).code == 2);

  const auto missing = write_config(dir, "fit.expected = -0.5\n");
  CHECK(invoke({"fit", "--config", missing.string(), "--out", (dir / "c").string(), "--quiet"}).code == 64);
}

TEST_CASE("delta sweep reports the largest bounded delta") {
  const auto dir = scratch("sweep");
  const auto cfg = write_config(dir, std::string(kSmallRun) + "data.norm = l2\nsweep.deltas = 1000, 0.01, 0.1\n");
  REQUIRE(invoke({"nonlinear-run", "--config", cfg.string(), "--out", dir.string(), "--quiet"}).code == 0);
  const auto j = read_json(dir / "summary.json")["delta_sweep"];
  REQUIRE(j["runs"].size() == 3);
  CHECK(j["runs"][0]["delta"] == 0.01);
  CHECK(j["runs"][2]["status"] == "blow-up");
  CHECK(j["largest_bounded_delta"] == 0.1);

  const auto bad = write_config(dir, std::string(kSmallRun) + "sweep.deltas = 0.1, -1\n");
  CHECK(invoke({"nonlinear-run", "--config", bad.string(), "--out", dir.string(), "--quiet"}).code == 64);
}
