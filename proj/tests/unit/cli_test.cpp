#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "genius/app/cli.hpp"
#include "support/temp_dir.hpp"

namespace genius::app {
namespace {

namespace fs = std::filesystem;
using genius::testing::TempDir;

const fs::path kDemo = GENIUS_DEMO_DIR;

struct Result {
    int code;
    std::string out, err;
};

Result genius(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

nlohmann::json summary(const fs::path& dir) { return nlohmann::json::parse(slurp(dir / "summary.json")); }

void spit(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

/// Every regular file under `a` exists under `b` with the same bytes.
void expect_same_tree(const fs::path& a, const fs::path& b) {
    int files = 0;
    for (const auto& e : fs::recursive_directory_iterator(a)) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto rel = fs::relative(e.path(), a);
        EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
    }
    EXPECT_GT(files, 0);
}

std::vector<std::string> demo_score(const fs::path& out) {
    return {"score", "--manifest", (kDemo / "manifest.json").string(), "--generations", (kDemo / "gen").string(),
            "--fixture", (kDemo / "judge_fixture.json").string(), "--out", out.string()};
}

TEST(Verify, FixedSeedIsByteIdentical) {
    TempDir t;
    const auto a = genius({"verify-theorems", "--trials", "1", "--chains", "2", "--seed", "42", "--out", (t / "a").string()});
    const auto b = genius({"verify-theorems", "--trials", "1", "--chains", "2", "--seed", "42", "--out", (t / "b").string()});
    ASSERT_EQ(a.code, kExitOk) << a.err;
    ASSERT_EQ(b.code, kExitOk);
    expect_same_tree(t / "a", t / "b");
    const auto s = summary(t / "a");
    EXPECT_EQ(s["equivalence"]["seed"], 42);
    EXPECT_EQ(s["descent"]["seed"], 43);
    EXPECT_EQ(s["status"], "ok");
}

TEST(Verify, CorruptControlFailsWithSeeds) {
    TempDir t;
    const auto r = genius({"verify-theorems", "--corrupt", "--trials", "5", "--chains", "1", "--out", t.path().string()});
    EXPECT_EQ(r.code, kExitCheckFailed);
    EXPECT_NE(r.err.find("equivalence failing seeds:"), std::string::npos);
    const auto s = summary(t.path());
    EXPECT_EQ(s["status"], "failed");
    EXPECT_EQ(s["equivalence"]["failing_seeds"].size(), 5u);
    EXPECT_TRUE(s["descent"]["passed"].get<bool>());
}

TEST(SteerDemo, LambdaZeroGivesIdenticalTraces) {
    TempDir t;
    const auto r = genius({"steer-demo", "--lambda", "0", "--out", t.path().string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(slurp(t / "before.csv"), slurp(t / "after.csv"));
    EXPECT_EQ(slurp(t / "before.pgm"), slurp(t / "after.pgm"));
    EXPECT_EQ(summary(t.path())["check"], "traces identical");
}

TEST(SteerDemo, EmptySelectionGivesIdenticalTraces) {
    TempDir t;
    const auto r = genius({"steer-demo", "--steer-steps", "none", "--out", t.path().string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(slurp(t / "before.csv"), slurp(t / "after.csv"));
    EXPECT_EQ(summary(t.path())["steered_fragments"], 0);
}

TEST(SteerDemo, SteeringRaisesTopMassAndRepeats) {
    TempDir t;
    const auto a = genius({"steer-demo", "--out", (t / "a").string()});
    const auto b = genius({"steer-demo", "--out", (t / "b").string()});
    ASSERT_EQ(a.code, kExitOk) << a.out << a.err;
    const auto s = summary(t / "a");
    EXPECT_GT(s["mass_after"].get<double>(), s["mass_before"].get<double>());
    EXPECT_NE(slurp(t / "a" / "before.csv"), slurp(t / "a" / "after.csv"));
    expect_same_tree(t / "a", t / "b");
}

TEST(SteerDemo, InvalidSelectionIsConfigError) {
    TempDir t;
    const auto r = genius({"steer-demo", "--steer-heads", "1,x", "--out", t.path().string()});
    EXPECT_EQ(r.code, kExitUsage);
    const auto s = summary(t.path());
    EXPECT_EQ(s["status"], "error");
    EXPECT_NE(s["error"].get<std::string>().find("selection"), std::string::npos);
}

TEST(Score, DemoMatchesHandComputedReport) {
    TempDir t;
    const auto r = genius(demo_score(t.path()));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    // ip-001: RC runs 2,1,2 and AQ 1,2,2 -> 83.33; VC 2 -> 100; (6*83.33+3.5*100+0.5*83.33)/10
    // sc-001: copied reference, VC forced to 0; RC 1 -> 50, AQ 2 -> 100; (300+50)/10
    // ms-001: no VC; RC 0,1,2 -> 50, AQ 1 -> 50; renormalized over 6.5
    EXPECT_EQ(slurp(t / "report.csv"),
              "task,samples,rc_pct,vc_pct,aq_pct,overall\n"
              "ImplicitPattern,1,83.333333,100.000000,83.333333,89.166667\n"
              "SymbolicConstraint,1,50.000000,0.000000,100.000000,35.000000\n"
              "MultiSemantic,1,50.000000,,50.000000,50.000000\n"
              "Overall,3,61.111111,50.000000,77.777778,58.055556\n");
    const auto s = summary(t.path());
    EXPECT_EQ(s["runs_ok"], 9);
    EXPECT_EQ(s["backend"], "demo-fixture");
}

TEST(Score, WorkerCountDoesNotChangeArtifacts) {
    TempDir t;
    auto a = demo_score(t / "a");
    a.insert(a.end(), {"--workers", "1"});
    auto b = demo_score(t / "b");
    b.insert(b.end(), {"--workers", "3"});
    ASSERT_EQ(genius(a).code, kExitOk);
    ASSERT_EQ(genius(b).code, kExitOk);
    expect_same_tree(t / "a", t / "b");
}

TEST(Score, MissingGenerationIsListedAndExcluded) {
    TempDir t;
    fs::create_directories(t / "gen");
    fs::copy_file(kDemo / "gen" / "ip-001.ppm", t / "gen" / "ip-001.ppm");
    auto args = demo_score(t / "out");
    args[4] = (t / "gen").string();
    const auto r = genius(args);
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.err.find("ms-001"), std::string::npos);
    const auto s = summary(t / "out");
    EXPECT_EQ(s["missing"], nlohmann::json({"sc-001", "ms-001"}));  // manifest order
    EXPECT_EQ(s["total"]["samples"], 1);
}

TEST(Score, ConfigEnvFlagPrecedence) {
    TempDir t;
    spit(t / "cfg.json", R"({"score": {"model": "from-config", "workers": 2}})");
    auto model_of = [&](const fs::path& out) {
        return nlohmann::json::parse(slurp(out / "verdicts.jsonl").substr(0, slurp(out / "verdicts.jsonl").find('\n')))["model"];
    };
    auto args = demo_score(t / "c");
    args.insert(args.end(), {"--config", (t / "cfg.json").string()});
    ASSERT_EQ(genius(args).code, kExitOk);
    EXPECT_EQ(model_of(t / "c"), "from-config");

    ::setenv("GENIUS_MODEL", "from-env", 1);
    args = demo_score(t / "e");
    args.insert(args.end(), {"--config", (t / "cfg.json").string()});
    ASSERT_EQ(genius(args).code, kExitOk);
    args = demo_score(t / "f");
    args.insert(args.end(), {"--config", (t / "cfg.json").string(), "--model", "from-flag"});
    ASSERT_EQ(genius(args).code, kExitOk);
    ::unsetenv("GENIUS_MODEL");
    EXPECT_EQ(model_of(t / "e"), "from-env");
    EXPECT_EQ(model_of(t / "f"), "from-flag");
}

TEST(Score, BadConfigAndFlagsAreUsageErrors) {
    TempDir t;
    spit(t / "cfg.json", R"({"score": {"token": "secret"}})");
    EXPECT_EQ(genius({"score", "--config", (t / "cfg.json").string()}).code, kExitUsage);
    EXPECT_EQ(genius({"score", "--no-such-flag"}).code, kExitUsage);
    auto args = demo_score(t / "w");
    args.insert(args.end(), {"--weights", "6,3.5"});
    EXPECT_EQ(genius(args).code, kExitUsage);
    EXPECT_EQ(summary(t / "w")["status"], "error");
}

TEST(Score, HttpTokenComesFromConfiguredVariable) {
    TempDir t;
    spit(t / "cfg.json", R"({"token_env": "GENIUS_TEST_UNSET_TOKEN"})");
    ::unsetenv("GENIUS_TEST_UNSET_TOKEN");
    auto args = demo_score(t / "o");
    args.insert(args.end(), {"--backend", "http", "--endpoint", "http://127.0.0.1:9", "--config", (t / "cfg.json").string()});
    const auto r = genius(args);
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_NE(r.err.find("GENIUS_TEST_UNSET_TOKEN"), std::string::npos);
}

const char* kVerdicts =
    R"({"sample_id":"a","model":"m","task":"ImplicitPattern","dimension":"ImplicitPatternInduction","run":1,"status":"ok","rc":2,"vc":[1],"aq":0,"vc_copied":[false]}
{"sample_id":"b","model":"m","task":"MultiSemantic","dimension":"ContextualKnowledgeAdaptation","run":1,"status":"ok","rc":0,"vc":[],"aq":2,"vc_copied":[]}
{"sample_id":"c","model":"m","task":"SymbolicConstraint","dimension":"AdHocConstraintExecution","run":1,"status":"ok","rc":1,"vc":[2],"aq":1,"vc_copied":[false]}
)";

TEST(Agree, HumanEqualsJudge) {
    TempDir t;
    spit(t / "v.jsonl", kVerdicts);
    spit(t / "h.csv", "sample_id,metric,score\na,rc,2\na,vc,1\na,aq,0\nb,rc,0\nb,aq,2\nc,rc,1\nc,vc,2\nc,aq,1\n");
    const auto r = genius({"agree", "--verdicts", (t / "v.jsonl").string(), "--human", (t / "h.csv").string(), "--out",
                           (t / "o").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    for (const auto& row : summary(t / "o")["rows"]) {
        EXPECT_DOUBLE_EQ(row["mae"].get<double>(), 0.0) << row;
        if (!row["pearson"].is_null()) EXPECT_NEAR(row["pearson"].get<double>(), 1.0, 1e-12) << row;
    }
    EXPECT_NEAR(summary(t / "o")["rows"].back()["pearson"].get<double>(), 1.0, 1e-12);
}

TEST(Agree, DisjointIdsFail) {
    TempDir t;
    spit(t / "v.jsonl", kVerdicts);
    spit(t / "h.csv", "sample_id,metric,score\nz,rc,2\n");
    const auto r = genius({"agree", "--verdicts", (t / "v.jsonl").string(), "--human", (t / "h.csv").string(), "--out",
                           (t / "o").string()});
    EXPECT_EQ(r.code, kExitRuntime);
    EXPECT_EQ(summary(t / "o")["status"], "error");
}

TEST(Report, CombinesVerdictFiles) {
    TempDir t;
    spit(t / "v.jsonl", kVerdicts);
    std::string other = kVerdicts;
    for (std::size_t p; (p = other.find("\"model\":\"m\"")) != std::string::npos;) other.replace(p, 11, "\"model\":\"n\"");
    spit(t / "w.jsonl", other);
    const auto r = genius({"report", "--verdicts", (t / "v.jsonl").string(), (t / "w.jsonl").string(), "--group", "model",
                           "--out", (t / "o").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto s = summary(t / "o");
    ASSERT_EQ(s["rows"].size(), 2u);
    EXPECT_EQ(s["rows"][0]["key"], "m");
    EXPECT_EQ(s["total"]["samples"], 6);
}

}  // namespace
}  // namespace genius::app
