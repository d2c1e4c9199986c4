#include <gtest/gtest.h>

#include <filesystem>
#include <functional>
#include <string>

#include "assembly/config.hpp"

using namespace assembly;

namespace {

std::string error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(ConfigDefaults, MatchReferenceExperiment) {
    const ExperimentConfig cfg;
    EXPECT_EQ(cfg.params.n_particles, 30);
    EXPECT_EQ(cfg.params.damping, 2.0);
    EXPECT_EQ(cfg.params.lj_depth, 3.0);
    EXPECT_EQ(cfg.params.lj_rmin, 2.0);
    EXPECT_EQ(cfg.horizon, 10.0);
    EXPECT_EQ(cfg.steps, 100u);
    EXPECT_DOUBLE_EQ(cfg.grid().dt(), 0.1);
    EXPECT_EQ(cfg.u_min, 0.0);
    EXPECT_EQ(cfg.u_max, 50.0);
    EXPECT_TRUE(cfg.monotone);
    EXPECT_EQ(cfg.samples, 100u);
    EXPECT_EQ(cfg.init.box_lo, 0.0);
    EXPECT_EQ(cfg.init.box_hi, 10.0);
    EXPECT_EQ(cfg.init.vel_variance, 4.0);
    EXPECT_NEAR(cfg.cooling_rate(), 0.4605170186, 1e-10);
    EXPECT_NO_THROW(cfg.validate());
}

TEST(ConfigParse, ReadsKeysCommentsAndBlankLines) {
    const auto cfg = parse_config(R"(
# cluster run
system.n = 20
system.b = 1   # damping
lj.epsilon = 1
grid.steps = 10000
grid.horizon = 100
init.velocity = uniform
init.vel_range = 0, 1
sim.noise = false
control.source = constant:2.5
)");
    EXPECT_EQ(cfg.params.n_particles, 20);
    EXPECT_EQ(cfg.params.damping, 1.0);
    EXPECT_EQ(cfg.steps, 10000u);
    EXPECT_EQ(cfg.init.velocity, VelocityLaw::uniform);
    EXPECT_EQ(cfg.init.vel_hi, 1.0);
    EXPECT_FALSE(cfg.noise);
    EXPECT_EQ(cfg.source.kind, SourceKind::constant);
    EXPECT_EQ(cfg.source.argument, "2.5");
}

TEST(ConfigParse, RoundTripIsIdempotent) {
    ExperimentConfig cfg;
    apply_override(cfg, "system.n=7");
    apply_override(cfg, "lj.rmin=1.5");
    apply_override(cfg, "init.box=-1,4");
    apply_override(cfg, "control.newton_rate=0.3");
    apply_override(cfg, "solver.variable=sqrt");
    apply_override(cfg, "compare.a=constant:0.1");
    apply_override(cfg, "seed.train=123456789012345");
    const std::string once = serialize_config(cfg);
    const auto back = parse_config(once);
    EXPECT_EQ(back, cfg);
    EXPECT_EQ(serialize_config(back), once);
    EXPECT_EQ(parse_config(serialize_config(ExperimentConfig{})), ExperimentConfig{});
}

TEST(ConfigParse, ErrorsNameLineAndKey) {
    const std::string unknown = error_of([] { parse_config("system.n = 3\nsystem.q = 1\n", "run.cfg"); });
    EXPECT_NE(unknown.find("run.cfg:2"), std::string::npos) << unknown;
    EXPECT_NE(unknown.find("system.q"), std::string::npos) << unknown;

    const std::string bad_value = error_of([] { parse_config("\n\ngrid.steps = many\n", "run.cfg"); });
    EXPECT_NE(bad_value.find("run.cfg:3"), std::string::npos) << bad_value;
    EXPECT_NE(bad_value.find("grid.steps"), std::string::npos) << bad_value;

    const std::string no_eq = error_of([] { parse_config("system.n 3\n", "run.cfg"); });
    EXPECT_NE(no_eq.find("run.cfg:1"), std::string::npos) << no_eq;

    EXPECT_NE(error_of([] { parse_config("sim.noise = maybe\n"); }).find("sim.noise"), std::string::npos);
    EXPECT_NE(error_of([] { parse_config("system.n = -2\n"); }).find("system.n"), std::string::npos);
    EXPECT_NE(error_of([] { parse_config("init.box = 3\n"); }).find("init.box"), std::string::npos);
    EXPECT_NE(error_of([] { parse_config("control.source = annealing\n"); }).find("control.source"),
              std::string::npos);
}

TEST(ConfigValidate, ReportsOffendingField) {
    const auto invalid = [](const std::string& assignment) {
        ExperimentConfig cfg;
        apply_override(cfg, assignment);
        return error_of([&] { cfg.validate(); });
    };
    EXPECT_NE(invalid("seed.holdout=1").find("seed.holdout"), std::string::npos);
    EXPECT_NE(invalid("control.umin=60").find("control.umax"), std::string::npos);
    EXPECT_NE(invalid("grid.horizon=0").find("grid.horizon"), std::string::npos);
    EXPECT_NE(invalid("eval.holdout=0").find("eval.holdout"), std::string::npos);
    EXPECT_NE(invalid("solver.samples=0").find("solver.samples"), std::string::npos);
    EXPECT_NE(invalid("init.file=/nonexistent/state.csv").find("init.file"), std::string::npos);
    EXPECT_NE(invalid("control.source=file:/nonexistent/u.csv").find("control.file"), std::string::npos);
    EXPECT_NE(invalid("lj.epsilon=0").find("system/lj"), std::string::npos);
}

TEST(ConfigOverride, AppliesInOrderAndRejectsMalformed) {
    ExperimentConfig cfg = parse_config("system.n = 4\n");
    apply_override(cfg, "system.n=9");
    apply_override(cfg, " grid.steps = 50 ");
    EXPECT_EQ(cfg.params.n_particles, 9);
    EXPECT_EQ(cfg.steps, 50u);
    EXPECT_THROW(apply_override(cfg, "system.n"), ConfigError);
    EXPECT_NE(error_of([&] { apply_override(cfg, "bogus=1"); }).find("--set"), std::string::npos);
}

TEST(ConfigLoad, MissingFileIsConfigError) {
    EXPECT_THROW(load_config("/nonexistent/dir/run.cfg"), ConfigError);
}

TEST(ConfigLoad, ReadsFromDisk) {
    const auto path = std::filesystem::temp_directory_path() / "assembly_test_config.cfg";
    io::write_text_file(path, "system.n = 5\nsolver.samples = 12\n");
    const auto cfg = load_config(path);
    EXPECT_EQ(cfg.params.n_particles, 5);
    EXPECT_EQ(cfg.samples, 12u);
    std::filesystem::remove(path);
}

TEST(ScheduleSourceTest, ParsesAndPrints) {
    EXPECT_EQ(ScheduleSource::parse("newton").kind, SourceKind::newton);
    EXPECT_EQ(ScheduleSource::parse("file:u.csv").argument, "u.csv");
    EXPECT_EQ(ScheduleSource::parse("constant:3").str(), "constant:3");
    EXPECT_THROW(ScheduleSource::parse("optimize:1"), ConfigError);
    EXPECT_THROW(ScheduleSource::parse("linear"), ConfigError);
}
