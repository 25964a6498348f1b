#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "sliceprop/io.hpp"

using namespace sliceprop;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("sliceprop_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run(const std::string& args) {
    const std::string cmd =
        std::string(SLICEPROP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("phantom then segment produces masks and a report") {
    TempDir tmp;
    const std::string p = (tmp.path / "p").string();
    REQUIRE(run("phantom --out " + p + " --seed 42 --slices 5 --size 64") == 0);
    REQUIRE(fs::exists(tmp.path / "p/slices/slice_0001.pgm"));
    REQUIRE(fs::exists(tmp.path / "p/gt/lv_0001.pgm"));

    const std::string out = (tmp.path / "o").string();
    const std::string report = (tmp.path / "r.json").string();
    REQUIRE(run("segment --stack " + p + "/slices --first-mask " + p +
                "/gt/lv_0001.pgm --mode full --gt " + p + "/gt --out " + out +
                " --trees 20 --seed 42 --report " + report) == 0);
    for (int k = 2; k <= 5; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "lv_%04d.pgm", k);
        CHECK(fs::exists(tmp.path / "o" / name));
    }
    const SegmentationReport rep = read_report(report);
    CHECK(rep.config.mode == "full");
    CHECK(rep.config.trees == 20);
    CHECK(rep.per_slice.size() == 4);
    CHECK(rep.overall_mean.combined > 0.5);
    CHECK(fs::exists(tmp.path / "r.csv"));
}

TEST_CASE("missing required flag exits with usage code 2") {
    TempDir tmp;
    CHECK(run("segment --stack nowhere --out " + (tmp.path / "x").string()) == 2);
    CHECK(run("bogus-subcommand") == 2);
    CHECK(run("") == 2);
}

TEST_CASE("I/O failures exit with code 3") {
    TempDir tmp;
    CHECK(run("segment --stack /nonexistent-dir --first-mask nope.pgm --out " +
              (tmp.path / "o").string()) == 3);
}

TEST_CASE("eval on pred == gt reports all-ones dice") {
    TempDir tmp;
    const std::string p = (tmp.path / "p").string();
    REQUIRE(run("phantom --out " + p + " --seed 7 --slices 4 --size 64") == 0);
    const std::string report = (tmp.path / "eval.json").string();
    REQUIRE(run("eval --pred " + p + "/gt --gt " + p + "/gt --report " + report) ==
            0);
    const SegmentationReport rep = read_report(report);
    CHECK(rep.per_slice.size() == 4);
    for (const SliceDice& row : rep.per_slice) CHECK(row.dice_combined == 1.0);
    CHECK(rep.overall_mean.combined == 1.0);
}

TEST_CASE("identical argv and seed give byte-identical outputs") {
    TempDir tmp;
    const std::string p = (tmp.path / "p").string();
    REQUIRE(run("phantom --out " + p + " --seed 3 --slices 3 --size 64") == 0);
    const std::string out1 = (tmp.path / "o1").string();
    const std::string out2 = (tmp.path / "o2").string();
    const std::string args = "/slices --first-mask " + p +
                             "/gt/lv_0001.pgm --mode post --trees 15 --seed 5 --out ";
    REQUIRE(run("segment --stack " + p + args + out1) == 0);
    REQUIRE(run("segment --stack " + p + args + out2) == 0);
    for (int k = 2; k <= 3; ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "lv_%04d.pgm", k);
        CHECK(load_mask(tmp.path / "o1" / name) == load_mask(tmp.path / "o2" / name));
    }
}

TEST_CASE("SLICEPROP_SEED is the fallback seed") {
    TempDir tmp;
    const std::string p1 = (tmp.path / "p1").string();
    const std::string p2 = (tmp.path / "p2").string();
    const std::string p3 = (tmp.path / "p3").string();
    const std::string prefix = "SLICEPROP_SEED=99 " + std::string(SLICEPROP_CLI_PATH);
    REQUIRE(WEXITSTATUS(std::system((prefix + " phantom --out " + p1 +
                                     " --slices 3 --size 64 >/dev/null 2>&1")
                                        .c_str())) == 0);
    REQUIRE(run("phantom --out " + p2 + " --seed 99 --slices 3 --size 64") == 0);
    REQUIRE(run("phantom --out " + p3 + " --seed 100 --slices 3 --size 64") == 0);
    const CineStack a = load_stack(tmp.path / "p1/slices");
    const CineStack b = load_stack(tmp.path / "p2/slices");
    const CineStack c = load_stack(tmp.path / "p3/slices");
    CHECK(a.slices[0].intensities == b.slices[0].intensities);
    CHECK(a.slices[0].intensities != c.slices[0].intensities);
}

TEST_CASE("--strict escalates pipeline warnings to exit 4") {
    TempDir tmp;
    // degenerate stack: 2-pixel LV on slice 1, all-dark later slices;
    // inference goes all-background and the pipeline warns
    ImageSlice dark;
    dark.width = 24;
    dark.height = 24;
    dark.bit_depth = 8;
    dark.intensities.assign(24 * 24, 0);
    ImageSlice first = dark;
    BinaryMask first_lv = BinaryMask::zeros(24, 24);
    for (int x = 22; x <= 23; ++x) {
        first_lv.set(x, 23, 1);
        first.intensities[static_cast<std::size_t>(23) * 24 + x] = 255;
    }
    fs::create_directories(tmp.path / "slices");
    save_pgm(first, tmp.path / "slices/slice_0001.pgm");
    save_pgm(dark, tmp.path / "slices/slice_0002.pgm");
    save_pgm(dark, tmp.path / "slices/slice_0003.pgm");
    save_mask(first_lv, tmp.path / "first.pgm");

    const std::string base = "segment --stack " + (tmp.path / "slices").string() +
                             " --first-mask " + (tmp.path / "first.pgm").string() +
                             " --seed 7 --out " + (tmp.path / "o").string();
    CHECK(run(base + " --mode basic --strict") == 4);
    CHECK(run(base + " --mode basic") == 0);  // warnings stay exit 0 by default
}

TEST_CASE("experiments writes per-mode reports and a comparison table") {
    TempDir tmp;
    const std::string p = (tmp.path / "p").string();
    REQUIRE(run("phantom --out " + p + " --seed 11 --slices 4 --size 64") == 0);
    const std::string report = (tmp.path / "exp.json").string();
    REQUIRE(run("experiments --stack " + p + "/slices --first-mask " + p +
                "/gt/lv_0001.pgm --gt " + p + "/gt --trees 15 --seed 2 --report " +
                report) == 0);
    CHECK(fs::exists(tmp.path / "exp_basic.json"));
    CHECK(fs::exists(tmp.path / "exp_post.json"));
    CHECK(fs::exists(tmp.path / "exp_full.json"));
    CHECK(fs::exists(tmp.path / "exp_table.csv"));
    const SegmentationReport basic = read_report(tmp.path / "exp_basic.json");
    CHECK(basic.config.mode == "basic");
}
