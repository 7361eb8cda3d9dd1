#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "gaitclone/config.hpp"
#include "gaitclone/ini.hpp"
#include "gaitclone/runlog_io.hpp"
#include "gaitclone/rng.hpp"
#include "support/tmpdir.hpp"

using namespace gaitclone;
using gaitclone::testing::TmpDir;

TEST_CASE("ini set/get round trip preserves order and values") {
  Ini ini;
  ini.set("b", "x", 1.5);
  ini.set("a", "y", std::int64_t{-7});
  ini.set("b", "z", "hello world");
  const std::string text = ini.serialize();
  const Ini back = Ini::parse(text);
  CHECK(back.sections() == std::vector<std::string>{"b", "a"});
  CHECK(back.get_double("b", "x") == 1.5);
  CHECK(back.get_int("a", "y") == -7);
  CHECK(back.get("b", "z") == "hello world");
  CHECK(back.serialize() == text);  // canonical fixed point
}

TEST_CASE("ini parser handles comments, blanks and CRLF") {
  const std::string text =
      "# leading comment\r\n"
      "[run]\r\n"
      "; another comment\n"
      "seed = 42\n"
      "\n"
      "name = walk one \n";
  const Ini ini = Ini::parse(text);
  CHECK(ini.get_int("run", "seed") == 42);
  CHECK(ini.get("run", "name") == "walk one");
}

TEST_CASE("ini parser reports malformed lines") {
  CHECK_THROWS_AS(Ini::parse("[run]\nnot a pair\n"), std::runtime_error);
  CHECK_THROWS_AS(Ini::parse("key = before any section\n"), std::runtime_error);
  Ini ini;
  CHECK_THROWS_AS(ini.get("missing", "key"), std::runtime_error);
  ini.set("s", "k", "notanumber");
  CHECK_THROWS_AS(ini.get_double("s", "k"), std::runtime_error);
}

TEST_CASE("doubles survive serialization exactly") {
  Rng rng(123);
  Ini ini;
  for (int i = 0; i < 64; ++i) {
    ini.set("v", "k" + std::to_string(i), rng.normal(0.0, 10.0));
  }
  ini.set("v", "third", 1.0 / 3.0);
  ini.set("v", "tiny", 4.9406564584124654e-324);
  const Ini back = Ini::parse(ini.serialize());
  Rng rng2(123);
  for (int i = 0; i < 64; ++i) {
    const double want = rng2.normal(0.0, 10.0);
    CHECK(back.get_double("v", "k" + std::to_string(i)) == want);
  }
  CHECK(back.get_double("v", "third") == 1.0 / 3.0);
  CHECK(back.get_double("v", "tiny") == 4.9406564584124654e-324);
}

TEST_CASE("fnv1a hash is stable and collision-separated on small edits") {
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  CHECK(fnv1a_hex("config") != fnv1a_hex("confih"));
}

TEST_CASE("config serialization round trips through a file") {
  TmpDir tmp("cfg");
  ExperimentConfig cfg = default_config("desk");
  cfg.seed = 77;
  cfg.gait.kp_knee = 13.25;
  cfg.thresholds.theta_h = 0.25;
  finalize(cfg);
  const auto path = tmp / "exp.ini";
  save_config(cfg, path);
  const ExperimentConfig back = load_config(path);
  CHECK(back.seed == 77);
  CHECK(back.gait.kp_knee == 13.25);
  CHECK(back.thresholds.theta_h == 0.25);
  CHECK(back.preset == "desk");
  CHECK(back.arch.hidden_dim == 32);
  CHECK(back.config_hash == cfg.config_hash);
  CHECK(serialize_config(back) == serialize_config(cfg));
}

TEST_CASE("config hash tracks content, not storage location") {
  ExperimentConfig a = default_config("desk");
  ExperimentConfig b = default_config("desk");
  CHECK(a.config_hash == b.config_hash);
  b.seed = a.seed + 1;
  finalize(b);
  CHECK(a.config_hash != b.config_hash);
  ExperimentConfig p = default_config("paper");
  CHECK(p.config_hash != a.config_hash);
  CHECK(p.arch.hidden_dim == 128);
  CHECK(p.stride == 1);
}

TEST_CASE("unknown config keys are rejected, not ignored") {
  TmpDir tmp("cfgbad");
  const auto path = tmp / "bad.ini";
  std::ofstream(path) << "[gait]\nkq_knee = 3\n";
  CHECK_THROWS_AS(load_config(path), std::invalid_argument);
}

TEST_CASE("run log round trips value-exactly with its sidecar") {
  TmpDir tmp("runlog");
  Rng rng(9);
  RunLog log;
  log.meta.controller_id = "rnn_fx";
  log.meta.slope_preset = "uphill";
  log.meta.seed = 12345;
  log.meta.config_hash = "deadbeef01234567";
  for (int i = 0; i < 50; ++i) {
    TickRecord r;
    r.t = i * kControlDt;
    r.th_d_pk = rng.normal(0, 1);
    r.th_a_pk = rng.normal(0, 1);
    r.th_d_pa = rng.normal(0, 1);
    r.th_a_pa = rng.normal(0, 1);
    r.dth_d_pk = rng.normal(0, 3);
    r.dth_a_pk = rng.normal(0, 3);
    r.dth_d_pa = rng.normal(0, 3);
    r.dth_a_pa = rng.normal(0, 3);
    r.e_pk = rng.normal(0, 0.1);
    r.e_pa = rng.normal(0, 0.1);
    r.de_pk = rng.normal(0, 1);
    r.de_pa = rng.normal(0, 1);
    r.s = (i % 3 == 0) ? 0.0 : 1.0;
    r.tau_pk = rng.normal(0, 10);
    r.tau_pa = rng.normal(0, 10);
    log.ticks.push_back(r);
  }
  const auto path = tmp / "walk.csv";
  save_runlog(log, path);
  REQUIRE(std::filesystem::exists(meta_path_for(path)));

  const RunLog back = load_runlog(path);
  REQUIRE(back.ticks.size() == log.ticks.size());
  for (std::size_t i = 0; i < log.ticks.size(); ++i) {
    CHECK(std::memcmp(&back.ticks[i], &log.ticks[i], sizeof(TickRecord)) == 0);
  }
  CHECK(back.meta.controller_id == "rnn_fx");
  CHECK(back.meta.slope_preset == "uphill");
  CHECK(back.meta.seed == 12345);
  CHECK(back.meta.config_hash == "deadbeef01234567");
}

TEST_CASE("run log header line is part of the format") {
  TmpDir tmp("runlog2");
  const auto path = tmp / "walk.csv";
  std::ofstream(path) << "time, knee\n0, 1\n";
  CHECK_THROWS_AS(load_runlog(path), std::runtime_error);

  const auto path2 = tmp / "short.csv";
  std::ofstream(path2) << kRunLogHeader << "\n0, 1, 2\n";
  CHECK_THROWS_AS(load_runlog(path2), std::runtime_error);
}

TEST_CASE("saving a run twice produces byte-identical files") {
  TmpDir tmp("runlog3");
  RunLog log;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    TickRecord r;
    r.t = i * kControlDt;
    r.tau_pk = rng.normal(0, 5);
    log.ticks.push_back(r);
  }
  save_runlog(log, tmp / "a.csv");
  save_runlog(log, tmp / "b.csv");
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  CHECK(slurp(tmp / "a.csv") == slurp(tmp / "b.csv"));
  CHECK(slurp(tmp / "a.csv.meta.ini") == slurp(tmp / "b.csv.meta.ini"));
}
