#include <filesystem>

#include "doctest.h"
#include "surgkin/config.hpp"

using namespace surgkin;

TEST_CASE("parse, serialize, parse is an identity") {
    const std::string text =
        "[dataset]\n"
        "reps_per_cell = 3\n"
        "seed = 7\n"
        "\n"
        "[train]\n"
        "batch_size = 16\n"
        "max_epochs = 2\n";
    Config a = Config::parse(text);
    std::string s1 = a.serialize();
    Config b = Config::parse(s1);
    CHECK(b.serialize() == s1);
    CHECK(a.entries() == b.entries());
    CHECK(a.get_int("dataset.reps_per_cell", 0) == 3);
    CHECK(a.get_u64("dataset.seed", 0) == 7);
    CHECK(a.get_int("train.batch_size", 0) == 16);
}

TEST_CASE("comments, blanks and whitespace are tolerated") {
    Config c = Config::parse(
        "# header comment\n"
        "\n"
        "[encode]\n"
        "  fraction =  0.25  \n"
        "# trailing comment\n"
        "mode = raw\n");
    CHECK(c.get_double("encode.fraction", 0.0) == 0.25);
    CHECK(c.get_string("encode.mode", "") == "raw");
    CHECK(c.get_string("missing.key", "fallback") == "fallback");
}

TEST_CASE("malformed input raises ConfigError") {
    CHECK_THROWS_AS(Config::parse("[unclosed\nkey = 1\n"), ConfigError);
    CHECK_THROWS_AS(Config::parse("[s]\nno_equals_here\n"), ConfigError);
    CHECK_THROWS_AS(Config::load("/nonexistent/config.cfg"), ConfigError);
    Config c;
    CHECK_THROWS_AS(c.apply_override("missing_equals"), ConfigError);
    c.set("train.batch_size", "abc");
    CHECK_THROWS_AS(c.get_int("train.batch_size", 0), ConfigError);
}

TEST_CASE("command-line overrides replace file values") {
    Config c = Config::parse("[train]\nbatch_size = 8\n");
    c.apply_override("train.batch_size=64");
    c.apply_override("output.dir=/tmp/x");
    CHECK(c.get_int("train.batch_size", 0) == 64);
    CHECK(c.get_string("output.dir", "") == "/tmp/x");
}

TEST_CASE("run config defaults and round-trip") {
    RunConfig def;
    Config c = def.to_config();
    RunConfig back = RunConfig::from_config(c);
    CHECK(back.reps_per_cell == def.reps_per_cell);
    CHECK(back.dataset_seed == 42);
    CHECK(back.model_kind == ModelKind::LSTM);
    CHECK(back.target == LabelTarget::Task);
    CHECK(back.encode.fraction == 0.5);
    CHECK(back.encode.window_length == 40);
    CHECK(back.train.batch_size == def.train.batch_size);
    CHECK(back.sim.steps == def.sim.steps);
    CHECK(back.ablation_seeds == def.ablation_seeds);
    CHECK(back.output_dir == def.output_dir);

    // to_config -> from_config -> to_config is stable text
    CHECK(back.to_config().serialize() == c.serialize());
}

TEST_CASE("run config validation rejects bad values") {
    auto with = [](const std::string& key, const std::string& value) {
        Config c = RunConfig().to_config();
        c.set(key, value);
        return c;
    };
    CHECK_THROWS_AS(RunConfig::from_config(with("encode.fraction", "0")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("encode.fraction", "1.5")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("encode.window_length", "1")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("encode.stride", "0")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("snn.steps", "0")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("snn.dt", "-0.001")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("model.kind", "transformer")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("model.target", "patient")),
                    ConfigError);
    CHECK_THROWS_AS(RunConfig::from_config(with("encode.mode", "fourier")),
                    ConfigError);
}

TEST_CASE("config files persist to disk") {
    namespace fs = std::filesystem;
    fs::path path = fs::temp_directory_path() / "surgkin_cfg_rt.cfg";
    Config c = Config::parse("[output]\ndir = artifacts\n");
    c.save(path.string());
    Config d = Config::load(path.string());
    fs::remove(path);
    CHECK(d.get_string("output.dir", "") == "artifacts");
}
