#include <cstdlib>
#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "vrftlab/config.hpp"
#include "vrftlab/error.hpp"

using namespace vrftlab;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error thrown");
    return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("defaults describe the full study") {
    const ExperimentConfig cfg;
    CHECK(cfg.n_seeds == 50);
    CHECK(cfg.n_points == std::vector<std::size_t>{100, 1000});
    CHECK(cfg.scenarios.size() == 2);
    CHECK(cfg.validation.steps == 2240);
    CHECK(cfg.attack.y_reference == BudgetReference::input_norm);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("INI sections override the defaults") {
    const auto cfg = parse_config(R"(
; comment
[study]
master_seed = 42
n_seeds = 3
scenarios = B
n_points = 100, 250
shared_weather = true

[plant]
q_max = 350

[attack]
grid = 0:0, 0.1:0.2
budget_y_reference = output_norm
)");
    CHECK(cfg.master_seed == 42);
    CHECK(cfg.n_seeds == 3);
    CHECK(cfg.scenarios == std::vector<Scenario>{Scenario::B});
    CHECK(cfg.n_points == std::vector<std::size_t>{100, 250});
    CHECK(cfg.shared_weather);
    CHECK(cfg.plant.q_max == 350.0);
    REQUIRE(cfg.attack.grid.size() == 2);
    CHECK(cfg.attack.grid[1] == std::pair{0.1, 0.2});
    CHECK(cfg.attack.y_reference == BudgetReference::output_norm);
}

TEST_CASE("bad configs are config errors") {
    CHECK(kind_of([] { (void)parse_config("[study]\nn_seeds = 0\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[study]\nunknown = 1\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[nope]\nx = 1\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[study]\nscenarios = C\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[plant]\nc_air = warm\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[attack]\ngrid = 0.1:1.5\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[attack]\ngrid = 0.1\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)parse_config("[study\n"); }) == ErrorKind::ConfigError);
    CHECK(kind_of([] { (void)load_config("/nonexistent/vrftlab.ini"); }) == ErrorKind::ConfigError);
}

TEST_CASE("hash ignores the output location but not the study") {
    ExperimentConfig a;
    ExperimentConfig b;
    b.output_dir = "/elsewhere";
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash(a).size() == 64);
    b.master_seed = 2;
    CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("SHA-256 of a known message") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("output directory can be redirected from the environment") {
    const auto path = std::filesystem::temp_directory_path() / "vrftlab_config_env.ini";
    std::ofstream(path) << "[study]\noutput_dir = from-file\n";
    ::unsetenv("VRFT_LAB_OUTPUT_DIR");
    CHECK(load_config(path).output_dir == "from-file");
    ::setenv("VRFT_LAB_OUTPUT_DIR", "/tmp/from-env", 1);
    CHECK(load_config(path).output_dir == "/tmp/from-env");
    CHECK(default_config().output_dir == "/tmp/from-env");
    ::unsetenv("VRFT_LAB_OUTPUT_DIR");
}

TEST_CASE("shipped default config matches the built-in defaults") {
    ::unsetenv("VRFT_LAB_OUTPUT_DIR");
    const auto cfg = load_config(std::filesystem::path(VRFTLAB_SOURCE_DIR) / "configs" / "default.ini");
    CHECK(config_hash(cfg) == config_hash(ExperimentConfig{}));
}
