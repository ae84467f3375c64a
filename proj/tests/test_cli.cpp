#include <gtest/gtest.h>

#include <csignal>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

#include "pfb/cli.hpp"
#include "pfb/config.hpp"
#include "pfb/trial_log.hpp"
#include "test_support.hpp"

namespace pfb {
namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli_main(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json first_error(const Run& r) {
    return nlohmann::json::parse(r.err.substr(0, r.err.find('\n')));
}

TEST(Cli, ProtocolWritesLogsSnapshotAndReport) {
    test::TempDir dir;
    const auto r = cli({"protocol", "--seed", "7", "--out", dir / "runs"});
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"training.log", "no_feedback.log", "reactive.log", "predictive.log", "snapshot.json",
                          "report.json", "bins.csv"})
        EXPECT_TRUE(std::filesystem::exists(dir.path() / "runs" / f)) << f;
}

TEST(Cli, ReplayMatchesLiveMetrics) {
    test::TempDir dir;
    ASSERT_EQ(cli({"protocol", "--seed", "7", "--out", dir / "runs"}).code, 0);
    const auto report = nlohmann::json::parse(test::slurp(dir / "runs/report.json"));
    for (const char* task : {"training", "no_feedback", "reactive", "predictive"}) {
        const auto r = cli({"replay", (dir.path() / "runs" / (std::string(task) + ".log")).string()});
        ASSERT_EQ(r.code, 0) << r.err;
        EXPECT_EQ(nlohmann::json::parse(r.out), report["tasks"][task]) << task;
    }
}

TEST(Cli, SimulatePredictiveWithoutTrainingIsNoSnapshot) {
    test::TempDir dir;
    const auto r = cli({"simulate", "--task", "predictive", "--out", dir / "fresh"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(first_error(r)["error"], "no_snapshot");
}

TEST(Cli, SimulateTrainingThenPredictiveUsesSnapshot) {
    test::TempDir dir;
    ASSERT_EQ(cli({"simulate", "--task", "training", "--seed", "3", "--out", dir / "o"}).code, 0);
    const auto r = cli({"simulate", "--task", "predictive", "--seed", "3", "--out", dir / "o"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "o/predictive.log"));
}

TEST(Cli, UnknownFlagIsUsageError) {
    const auto r = cli({"simulate", "--frobnicate"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(first_error(r)["error"], "usage");
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
    EXPECT_EQ(cli({}).code, 1);
    EXPECT_EQ(cli({"dance"}).code, 1);
}

TEST(Cli, ConfigErrorsExitOneWithField) {
    const auto r = cli({"simulate", "--set", "sim.max_flex_deg=-2"});
    EXPECT_EQ(r.code, 1);
    EXPECT_EQ(first_error(r)["error"], "config_error");
    EXPECT_EQ(first_error(r)["field"], "sim.max_flex_deg");
    EXPECT_EQ(cli({"simulate", "--task", "napping"}).code, 1);
}

TEST(Cli, OverridePrecedence) {
    test::TempDir dir;
    std::ofstream(dir / "c.json") << R"({"duration_ticks": 300, "user": {"reaction_latency_ms": 300}})";
    // --set beats the file; the file beats the default.
    auto r = cli({"simulate", "--config", dir / "c.json", "--set", "duration_ticks=120", "--out", dir / "a"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_log_file(dir / "a/training.log").records.size(), 120u);
    r = cli({"simulate", "--config", dir / "c.json", "--out", dir / "b"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_log_file(dir / "b/training.log").records.size(), 300u);
    // --duration-ticks is shorthand for the same override.
    r = cli({"simulate", "--config", dir / "c.json", "--duration-ticks", "50", "--out", dir / "c"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(load_log_file(dir / "c/training.log").records.size(), 50u);
}

TEST(Cli, MultipleSeedsGetSeparateDirectories) {
    test::TempDir dir;
    ASSERT_EQ(cli({"protocol", "--seed", "1", "--seed", "2", "--duration-ticks", "400", "--out", dir / "m"}).code, 0);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "m/seed-1/report.json"));
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "m/seed-2/report.json"));

    const auto r = cli({"report", dir / "m", "--out", dir / "table"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto csv = test::slurp(dir / "table/comparison.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 4);
    const auto summary = nlohmann::json::parse(test::slurp(dir / "table/summary.json"));
    EXPECT_EQ(summary["seeds"], 2);
}

TEST(Cli, ReplayOfCorruptLogIsRuntimeError) {
    test::TempDir dir;
    std::ofstream(dir / "x.log") << "{\"schema\":\"pfb.trial_log\"\n";
    const auto r = cli({"replay", dir / "x.log"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(first_error(r)["error"], "bad_log");
}

TEST(Cli, ServeRunsUntilSignalled) {
    int out_pipe[2];
    ASSERT_EQ(pipe(out_pipe), 0);
    const pid_t pid = fork();
    ASSERT_GE(pid, 0);
    if (pid == 0) {
        dup2(out_pipe[1], STDOUT_FILENO);
        close(out_pipe[0]);
        execl(PFB_CLI_BINARY, PFB_CLI_BINARY, "serve", "--bind", "127.0.0.1:0", static_cast<char*>(nullptr));
        _exit(127);
    }
    close(out_pipe[1]);
    std::string line;
    char c;
    while (read(out_pipe[0], &c, 1) == 1 && c != '\n') line += c;
    const auto hello = nlohmann::json::parse(line);
    EXPECT_EQ(hello["listening"].get<std::string>().rfind("127.0.0.1:", 0), 0u);
    kill(pid, SIGTERM);
    int status = 0;
    waitpid(pid, &status, 0);
    close(out_pipe[0]);
    ASSERT_TRUE(WIFEXITED(status));
    EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Cli, ServeBindFailureExitsTwo) {
    const auto r = cli({"serve", "--bind", "256.0.0.1:1"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(first_error(r)["error"], "bind_failed");
}

}  // namespace
}  // namespace pfb
