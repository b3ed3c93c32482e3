#include <catch2/catch_amalgamated.hpp>

#include <sstream>
#include <string>

#include "vcat/config.hpp"

using namespace vcat;

namespace {

ParsedConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_ini(in, "test.ini");
}

RunConfig from(const std::string& text) { return run_config_from(parse(text)); }

} // namespace

TEST_CASE("ini parsing handles sections, comments, and whitespace") {
    const ParsedConfig cfg = parse(
        "# leading comment\n"
        "\n"
        "[run]\r\n"
        "  seeds = 1, 2, 3  \n"
        "; alt comment style\n"
        "out_dir = some/dir\n"
        "[ eval ]\n"
        "episodes = 150\n");

    REQUIRE(cfg.sections.count("run") == 1);
    REQUIRE(cfg.sections.count("eval") == 1);
    CHECK(cfg.sections.at("run").at("seeds") == "1, 2, 3");
    CHECK(cfg.sections.at("run").at("out_dir") == "some/dir");
    CHECK(cfg.sections.at("eval").at("episodes") == "150");
}

TEST_CASE("ini values may contain an equals sign") {
    const ParsedConfig cfg = parse("[paths]\nvictim_ckpt = a=b.bin\n");
    CHECK(cfg.sections.at("paths").at("victim_ckpt") == "a=b.bin");
}

TEST_CASE("ini structural errors are rejected with the line number") {
    CHECK_THROWS_AS(parse("key = 1\n"), ConfigError);           // before any section
    CHECK_THROWS_AS(parse("[run\nseeds = 1\n"), ConfigError);   // unclosed header
    CHECK_THROWS_AS(parse("[]\n"), ConfigError);                // empty section
    CHECK_THROWS_AS(parse("[run]\nno equals here\n"), ConfigError);
    CHECK_THROWS_AS(parse("[run]\n= 5\n"), ConfigError);        // empty key
    CHECK_THROWS_AS(parse("[run]\nseeds = 1\nseeds = 2\n"), ConfigError);

    try {
        parse("[run]\nbad line\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("test.ini:2") != std::string::npos);
    }
}

TEST_CASE("run config picks up every section") {
    const RunConfig rc = from(
        "[run]\n"
        "scenario = sjrt\n"
        "method = ppo-va\n"
        "seeds = 7, 8\n"
        "out_dir = /tmp/x\n"
        "timing = true\n"
        "[ppo]\n"
        "gamma = 0.9\n"
        "lr_policy = 1e-3\n"
        "buffer_capacity = 640\n"
        "[rewards]\n"
        "lambda2 = 0.25\n"
        "[attack]\n"
        "episode_budget = 50\n"
        "[defense]\n"
        "early_stop = off\n"
        "[pretrain]\n"
        "demo_samples = 500\n"
        "clone_epochs = 3\n"
        "goal_rate_floor = 0\n"
        "[eval]\n"
        "episodes = 120\n"
        "[paths]\n"
        "victim_ckpt = v.bin\n");

    CHECK(rc.scenario == ScenarioId::sjrt);
    CHECK(rc.method == AttackMethod::ppo_va);
    CHECK(rc.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(rc.out_dir == "/tmp/x");
    CHECK(rc.timing);
    CHECK(rc.ppo.gamma == 0.9);
    CHECK(rc.ppo.lr_policy == 1e-3);
    CHECK(rc.ppo.buffer_capacity == 640);
    CHECK(rc.weights.lambda2 == 0.25);
    CHECK(rc.attack_episode_budget == 50);
    CHECK_FALSE(rc.defense_early_stop);
    CHECK(rc.pretrain_demo_samples == 500);
    CHECK(rc.pretrain_clone_epochs == 3);
    CHECK(rc.pretrain_goal_rate_floor == 0.0);
    CHECK(rc.eval_episodes == 120);
    CHECK(rc.victim_ckpt == "v.bin");
}

TEST_CASE("omitted sections keep their defaults") {
    const RunConfig rc = from("[eval]\nepisodes = 200\n");
    const RunConfig def;
    CHECK(rc.scenario == def.scenario);
    CHECK(rc.method == def.method);
    CHECK(rc.seeds == def.seeds);
    CHECK(rc.ppo.gamma == def.ppo.gamma);
    CHECK(rc.ppo.buffer_capacity == def.ppo.buffer_capacity);
    CHECK(rc.pretrain_demo_samples == def.pretrain_demo_samples);
    CHECK(rc.pretrain_goal_rate_floor == def.pretrain_goal_rate_floor);
}

TEST_CASE("unknown sections, keys, and bad values fail fast") {
    CHECK_THROWS_AS(from("[nope]\nx = 1\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\ntypo_key = 1\n"), ConfigError);
    CHECK_THROWS_AS(from("[ppo]\ngamma = fast\n"), ConfigError);
    CHECK_THROWS_AS(from("[eval]\nepisodes = 3.5\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\ntiming = maybe\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\nseeds = 1,,2\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\nseeds = 1, two\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\nscenario = highway\n"), ConfigError);
    CHECK_THROWS_AS(from("[run]\nmethod = ddpg\n"), ConfigError);
}

TEST_CASE("run config validation guards the reported-rate floor") {
    CHECK_THROWS_AS(from("[eval]\nepisodes = 99\n"), ConfigError);
    CHECK_NOTHROW(from("[eval]\nepisodes = 100\n"));

    RunConfig rc;
    rc.seeds.clear();
    CHECK_THROWS_AS(rc.validate(), ConfigError);

    rc = RunConfig{};
    rc.pretrain_goal_rate_floor = 1.5;
    CHECK_THROWS_AS(rc.validate(), ConfigError);

    rc = RunConfig{};
    rc.pretrain_clone_lr = 0.0;
    CHECK_THROWS_AS(rc.validate(), ConfigError);

    rc = RunConfig{};
    rc.attack_episode_budget = 0;
    CHECK_THROWS_AS(rc.validate(), ConfigError);
}

TEST_CASE("config hash is stable and sensitive to training fields") {
    const RunConfig a;
    const RunConfig b;
    CHECK(config_hash(a) == config_hash(b));

    RunConfig c;
    c.ppo.gamma = 0.9;
    CHECK(config_hash(c) != config_hash(a));

    RunConfig d;
    d.seeds = {1, 2, 3, 4, 6};
    CHECK(config_hash(d) != config_hash(a));

    RunConfig e;
    e.pretrain_demo_noise = 0.31;
    CHECK(config_hash(e) != config_hash(a));

    // output location does not change the fingerprint; the artifacts are
    // relocatable
    RunConfig f;
    f.out_dir = "elsewhere";
    f.victim_ckpt = "v.bin";
    CHECK(config_hash(f) == config_hash(a));
}
