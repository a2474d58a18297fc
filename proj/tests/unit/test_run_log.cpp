#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "semswarm/run_log.hpp"
#include "test_support.hpp"

using namespace semswarm;
using semswarm::testing::TempDir;

namespace {

const RunHistory& five_generation_run() {
  static const RunHistory h = [] {
    OracleEmbedder e;
    auto cfg = semswarm::testing::tiny_config(5);
    cfg.run_seed = 11;
    RunContext ctx("cluster and spin", cfg, semswarm::testing::oracle_mapping(),
                   std::make_shared<OracleEmbedder>(), "run-5");
    ctx.run_generation();
    ctx.run_generation();
    ctx.refine_prompt("scatter", semswarm::testing::oracle_mapping());
    while (!ctx.finished()) ctx.run_generation();
    return ctx.history();
  }();
  return h;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST(RunLog, RoundTripsFiveGenerations) {
  const auto& h = five_generation_run();
  const std::string text = serialize_run(h);
  const auto back = parse_run(text);
  EXPECT_EQ(back.run_id, h.run_id);
  EXPECT_EQ(back.prompt, h.prompt);
  EXPECT_EQ(back.prompt_revisions, h.prompt_revisions);
  EXPECT_EQ(back.theta_init, h.theta_init);
  EXPECT_EQ(back.theta_prompt, h.theta_prompt);
  EXPECT_EQ(back.records, h.records);
  EXPECT_EQ(back.rng_algorithm_id, "mt19937_64+polar/v1");
  EXPECT_EQ(back.embedder_id, "oracle/v1");
  EXPECT_EQ(config_to_json(back.config), config_to_json(h.config));
  EXPECT_EQ(serialize_run(back), text);
}

TEST(RunLog, OneHeaderThenOneLinePerGeneration) {
  const auto lines = lines_of(serialize_run(five_generation_run()));
  ASSERT_EQ(lines.size(), 6u);
  EXPECT_EQ(nlohmann::json::parse(lines[0])["type"], "header");
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto j = nlohmann::json::parse(lines[i]);
    EXPECT_EQ(j["type"], "generation");
    EXPECT_EQ(j["generation"], i - 1);
    EXPECT_EQ(j["losses"].size(), 16u);
    EXPECT_TRUE(j["best_frame_digest"].is_string());
  }
}

TEST(RunLog, WallTimeCanBeOmitted) {
  const auto text = serialize_run(five_generation_run(), false);
  EXPECT_EQ(text.find("wall_ms"), std::string::npos);
  const auto back = parse_run(text);
  for (const auto& r : back.records) EXPECT_EQ(r.wall_ms, 0);
}

TEST(RunLog, TruncatedLastLineNamesTheLine) {
  std::string text = serialize_run(five_generation_run());
  text.resize(text.size() - 40);
  try {
    parse_run(text);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 6u);
    EXPECT_NE(std::string(e.what()).find("line 6"), std::string::npos);
  }
}

TEST(RunLog, MalformedInputs) {
  EXPECT_THROW(parse_run(""), ParseError);
  EXPECT_THROW(parse_run("{\"type\": \"generation\"}\n"), ParseError);
  const auto lines = lines_of(serialize_run(five_generation_run()));
  // A generation record that skips ahead.
  try {
    parse_run(lines[0] + "\n" + lines[1] + "\n" + lines[3] + "\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(RunLog, BranchOriginSurvives) {
  auto h = five_generation_run();
  h.parent = BranchOrigin{"parent-run", 3, 9};
  const auto back = parse_run(serialize_run(h));
  ASSERT_TRUE(back.parent);
  EXPECT_EQ(*back.parent, *h.parent);
}

TEST(RunStoreFiles, PersistAndLoad) {
  TempDir dir("runlog");
  const auto& h = five_generation_run();
  EXPECT_EQ(persist_run(h, dir.path()), "run-5");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "run-5.jsonl"));
  EXPECT_FALSE(std::filesystem::exists(dir.path() / "run-5.jsonl.tmp"));
  EXPECT_EQ(load_run(dir.path(), "run-5").records, h.records);
}

TEST(RunStoreFiles, UnknownOrInvalidIds) {
  TempDir dir("runlog_empty");
  EXPECT_THROW(load_run(dir.path(), "missing"), NotFound);
  EXPECT_THROW(load_run(dir.path(), "../etc/passwd"), NotFound);
  auto h = five_generation_run();
  h.run_id = "bad/id";
  EXPECT_THROW(persist_run(h, dir.path()), InvalidParameter);
}

TEST(RunStoreFiles, CorruptFileIsParseError) {
  TempDir dir("runlog_corrupt");
  std::ofstream(dir.path() / "broken.jsonl") << "not json\n";
  EXPECT_THROW(load_run(dir.path(), "broken"), ParseError);
}

TEST(RunId, Validation) {
  EXPECT_TRUE(valid_run_id("abc-DEF_123"));
  EXPECT_FALSE(valid_run_id(""));
  EXPECT_FALSE(valid_run_id("a b"));
  EXPECT_FALSE(valid_run_id("a.b"));
  EXPECT_TRUE(valid_run_id(std::string(128, 'x')));
  EXPECT_FALSE(valid_run_id(std::string(129, 'x')));
}

TEST(ConfigJson, OverridesAndErrors) {
  const auto c = config_from_json(nlohmann::json::parse(
      R"({"n_agents": 64, "cma": {"sigma0": 0.2}, "embedder": {"kind": "remote", "endpoint": "http://x"}, "extra": 1})"));
  EXPECT_EQ(c.n_agents, 64u);
  EXPECT_EQ(c.sim_steps, EvolutionConfig{}.sim_steps);
  EXPECT_EQ(c.cma.sigma0, 0.2);
  EXPECT_EQ(c.embedder.kind, EmbedderKind::kRemote);
  EXPECT_EQ(c.embedder.endpoint, "http://x");

  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"n_agents": "many"})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"([1, 2])")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"cma": 3})")), ConfigError);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"embedder": {"kind": "magic"}})")),
               ConfigError);
  EXPECT_EQ(config_to_json(config_from_json(config_to_json(c))), config_to_json(c));
}
