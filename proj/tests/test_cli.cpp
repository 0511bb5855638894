#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "helpers.hpp"

namespace liketrack {
namespace {

namespace fs = std::filesystem;

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "liketrack");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const fs::path kSpecs = LIKETRACK_SPEC_DIR;
const fs::path kConfig = fs::path(LIKETRACK_CONFIG_DIR) / "default.cfg";

TEST(Cli, SynthTrackEvalOnEasySequence) {
    testing::TempDir dir("cli");
    const auto seq = dir / "easy";
    const auto synth = run({"synth", (kSpecs / "easy" / "linear.spec").string(), "--out", seq.string(), "--seed", "1"});
    ASSERT_EQ(synth.code, 0) << synth.err;
    EXPECT_TRUE(fs::exists(seq / "img" / "0100.ppm"));

    const auto track = run({"track", seq.string(), "--config", kConfig.string(), "--out", (dir / "out").string(),
                            "--overlays"});
    ASSERT_EQ(track.code, 0) << track.err;
    EXPECT_TRUE(fs::exists(dir / "out" / "results.csv"));
    EXPECT_TRUE(fs::exists(dir / "out" / "overlays" / "0001.ppm"));

    const auto eval = run({"eval", seq.string(), "--config", kConfig.string(), "--results",
                           (dir / "out" / "results.csv").string(), "--curves", (dir / "curves.csv").string()});
    ASSERT_EQ(eval.code, 0) << eval.err;
    EXPECT_NE(eval.out.find("precision_at_20 = 1.0000"), std::string::npos) << eval.out;
    EXPECT_TRUE(fs::exists(dir / "curves.csv"));
}

TEST(Cli, MissingConfigIsDataError) {
    testing::TempDir dir("cli");
    const auto missing = (dir / "nowhere.cfg").string();
    const auto r = run({"track", (kSpecs / "easy" / "linear.spec").string(), "--config", missing, "--out", dir.path().string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find(missing), std::string::npos) << r.err;
}

TEST(Cli, MissingInputIsDataError) {
    testing::TempDir dir("cli");
    const auto r = run({"track", (dir / "nope").string(), "--config", kConfig.string(), "--out",
                        (dir / "out").string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("nope"), std::string::npos);
}

TEST(Cli, SameSeedGivesIdenticalResults) {
    testing::TempDir dir("cli");
    const auto spec = (kSpecs / "easy" / "linear.spec").string();
    for (const char* leaf : {"a", "b"}) {
        const auto r = run({"track", spec, "--config", kConfig.string(), "--out", (dir / leaf).string(), "--seed", "7"});
        ASSERT_EQ(r.code, 0) << r.err;
    }
    const auto a = read_text(dir / "a" / "results.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, read_text(dir / "b" / "results.csv"));
}

TEST(Cli, UsageErrors) {
    const auto unknown = run({"track", "x", "--config", "c", "--out", "o", "--frobnicate"});
    EXPECT_EQ(unknown.code, 1);
    EXPECT_NE(unknown.err.find("Usage"), std::string::npos) << unknown.err;
    EXPECT_TRUE(unknown.out.empty());

    EXPECT_EQ(run({}).code, 1);
    EXPECT_EQ(run({"dance"}).code, 1);
    EXPECT_EQ(run({"track", "x"}).code, 1);  // required options missing
    EXPECT_EQ(run({"compare", "x", "--config", kConfig.string(), "--seeds", "1,x"}).code, 1);

    const auto help = run({"--help"});
    EXPECT_EQ(help.code, 0);
    EXPECT_NE(help.out.find("synth"), std::string::npos);
}

TEST(Cli, CompareWritesReport) {
    testing::TempDir dir("cli");
    fs::create_directories(dir / "suite");
    std::ofstream(dir / "suite" / "short.spec") << "name = short\nframes = 10\ncanvas = 160x120\n"
                                                   "target_size = 24x24\nwaypoint = 0,50,60\nwaypoint = 9,80,60\n";
    const auto r = run({"compare", (dir / "suite").string(), "--config", kConfig.string(), "--seeds", "1,2",
                        "--report", (dir / "report.csv").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("short"), std::string::npos);
    const auto csv = read_text(dir / "report.csv");
    EXPECT_NE(csv.find("short,easy,likelihood,"), std::string::npos);
    EXPECT_NE(csv.find("short,easy,transition,"), std::string::npos);

    fs::create_directories(dir / "empty");
    EXPECT_EQ(run({"compare", (dir / "empty").string(), "--config", kConfig.string(), "--seeds", "1"}).code, 2);
}

}  // namespace
}  // namespace liketrack
