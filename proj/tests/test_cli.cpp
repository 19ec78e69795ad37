// Exercises the installed binary end to end: exit codes, file formats and
// byte-level reproducibility.
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "invkit/image_io.hpp"
#include "invkit/phantoms.hpp"

#ifndef INVKIT_CLI_PATH
#error "INVKIT_CLI_PATH must point at the invkit binary"
#endif

namespace fs = std::filesystem;
using namespace invkit;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args) {
    std::string cmd = std::string(INVKIT_CLI_PATH) + " " + args + " 2>&1";
    std::array<char, 256> buf{};
    std::string out;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
    int status = pclose(pipe);
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.output = out;
    return r;
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f.good());
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

void write_config(const std::string& path, const std::string& body) {
    std::ofstream f(path);
    f << body;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate writes byte-identical measurements for identical config and seed") {
    TempDir dir("invkit_cli_sim");
    Image x = bench::make_phantom(bench::PhantomKind::shapes, 16, 16, 3);
    io::write_raw_image(x, dir.str() + "/input.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nnoise_sigma = 0.05\nseed = 9\n");
    auto r1 = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/a " + dir.str() + "/input.ivk1");
    CHECK(r1.exit_code == 0);
    auto r2 = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/b " + dir.str() + "/input.ivk1");
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.str() + "/a/measurement.ivk1") == read_file(dir.str() + "/b/measurement.ivk1"));
    CHECK(fs::exists(dir.str() + "/a/resolved.ini"));
}

TEST_CASE("simulate with the identity operator and zero noise reproduces the input values") {
    TempDir dir("invkit_cli_sim_id");
    Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 12, 12, 5);
    io::write_raw_image(x, dir.str() + "/input.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 12\nwidth = 12\n[scenario]\nnoise_sigma = 0\nseed = 1\n");
    auto r = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/input.ivk1");
    CHECK(r.exit_code == 0);
    auto y = io::read_measurement(dir.str() + "/measurement.ivk1");
    CHECK(y.data == x.data);
}

TEST_CASE("missing input file exits 3 with a diagnostic") {
    TempDir dir("invkit_cli_missing");
    write_config(dir.str() + "/cfg.ini", "[operator]\nkind = identity\nheight = 8\nwidth = 8\n");
    auto r = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/nope.ivk1");
    CHECK(r.exit_code == 3);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("invalid config exits 2") {
    TempDir dir("invkit_cli_badcfg");
    write_config(dir.str() + "/cfg.ini", "[operator]\nbogus_key = 1\n");
    Image x(8, 8, 0.5);
    io::write_raw_image(x, dir.str() + "/input.ivk1");
    auto r = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/input.ivk1");
    CHECK(r.exit_code == 2);
}

TEST_CASE("reconstruct on a noiseless identity measurement recovers the input") {
    TempDir dir("invkit_cli_rec");
    Image x = bench::make_phantom(bench::PhantomKind::shapes, 16, 16, 7);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 16\nwidth = 16\n"
                 "[scenario]\nmethod = ml\nnoise_sigma = 0\nseed = 2\n"
                 "[solver]\niters = 200\ntol = 1e-14\n");
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    auto r = run_cli("reconstruct --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() +
                     "/measurement.ivk1 --truth " + dir.str() + "/truth.ivk1");
    CHECK(r.exit_code == 0);
    Image recon = io::read_raw_image(dir.str() + "/reconstruction.ivk1");
    double maxdiff = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) maxdiff = std::max(maxdiff, std::abs(recon.data[i] - x.data[i]));
    CHECK(maxdiff <= 1e-12);

    std::string pgm = read_file(dir.str() + "/reconstruction.pgm");
    CHECK(pgm.rfind("P5\n16 16\n255\n", 0) == 0);
    std::string metrics = read_file(dir.str() + "/metrics.csv");
    CHECK(metrics.find("psnr_db") != std::string::npos);
    CHECK(metrics.find("inf") != std::string::npos);
}

TEST_CASE("reconstruct rejects method and input mismatches with exit 2") {
    TempDir dir("invkit_cli_rec_bad");
    Image x(8, 8, 0.3);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 8\nwidth = 8\n"
                 "[scenario]\nmethod = csgm\nnoise_sigma = 0\n");
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    // csgm without a generator checkpoint names the missing requirement
    auto r = run_cli("reconstruct --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() +
                     "/measurement.ivk1");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("checkpoint") != std::string::npos);
}

TEST_CASE("solver divergence exits 4") {
    TempDir dir("invkit_cli_diverge");
    Image x = bench::make_phantom(bench::PhantomKind::shapes, 16, 16, 11);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nmethod = pgd\nnoise_sigma = 0\nseed = 1\n"
                 "[regularizer]\nreg = zero:0\n"
                 "[solver]\neta = 1e8\niters = 400\n");  // absurd step size forces non-finite iterates
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    auto r = run_cli("reconstruct --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() +
                     "/measurement.ivk1");
    CHECK(r.exit_code == 4);
    CHECK(r.output.find("non-finite") != std::string::npos);
}

TEST_CASE("dip method with a single iteration runs and writes a file") {
    TempDir dir("invkit_cli_dip");
    Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 16, 16, 9);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 16\nwidth = 16\n"
                 "[scenario]\nmethod = dip\nnoise_sigma = 0\nseed = 4\n"
                 "[model]\nstages = 2\nchannels = 4\ndip_iters = 1\n");
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    auto r = run_cli("reconstruct --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() +
                     "/measurement.ivk1");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.str() + "/reconstruction.ivk1"));
}

TEST_CASE("train writes a checkpoint, loss csv and reruns byte-identically") {
    TempDir dir("invkit_cli_train");
    fs::create_directories(dir.str() + "/ds");
    for (int i = 0; i < 4; ++i) {
        Image x = bench::make_phantom(bench::PhantomKind::shapes, 12, 12, 100 + i);
        auto y = add_noise(MeasurementVector(x.data), NoiseModel{0.1, static_cast<std::uint64_t>(i)});
        char xs[64], ys[64];
        std::snprintf(xs, sizeof xs, "/ds/img%03d.x.ivk1", i);
        std::snprintf(ys, sizeof ys, "/ds/img%03d.y.ivk1", i);
        io::write_raw_image(x, dir.str() + xs);
        io::write_measurement(y, dir.str() + ys);
    }
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 12\nwidth = 12\n"
                 "[training]\nregime = paired_xy\nepochs = 1\nlr = 0.001\n"
                 "[model]\nchannels = 4\ndepth = 2\n[scenario]\nseed = 21\n");
    auto r1 = run_cli("train --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/t1 " + dir.str() + "/ds");
    CHECK(r1.exit_code == 0);
    std::string loss = read_file(dir.str() + "/t1/loss.csv");
    CHECK(loss.rfind("epoch,loss\n", 0) == 0);
    CHECK(std::count(loss.begin(), loss.end(), '\n') == 2);  // header + one epoch
    auto r2 = run_cli("train --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/t2 " + dir.str() + "/ds");
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.str() + "/t1/model.ivkw") == read_file(dir.str() + "/t2/model.ivkw"));

    // sure regime without sigma -> exit 2
    write_config(dir.str() + "/bad.ini",
                 "[operator]\nkind = identity\nheight = 12\nwidth = 12\n[training]\nregime = y_only_sure\n");
    auto r3 = run_cli("train --config " + dir.str() + "/bad.ini --out " + dir.str() + "/t3 " + dir.str() + "/ds");
    CHECK(r3.exit_code == 2);
}

TEST_CASE("trained checkpoint reconstructs through the denoiser method") {
    TempDir dir("invkit_cli_trainrec");
    fs::create_directories(dir.str() + "/ds");
    for (int i = 0; i < 6; ++i) {
        Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 12, 12, 200 + i);
        auto y = add_noise(MeasurementVector(x.data), NoiseModel{0.1, static_cast<std::uint64_t>(50 + i)});
        char xs[64], ys[64];
        std::snprintf(xs, sizeof xs, "/ds/img%03d.x.ivk1", i);
        std::snprintf(ys, sizeof ys, "/ds/img%03d.y.ivk1", i);
        io::write_raw_image(x, dir.str() + xs);
        io::write_measurement(y, dir.str() + ys);
    }
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = identity\nheight = 12\nwidth = 12\n"
                 "[training]\nregime = paired_xy\nepochs = 6\nlr = 0.003\n"
                 "[model]\nchannels = 4\ndepth = 2\n[scenario]\nmethod = denoiser\nnoise_sigma = 0.1\nseed = 31\n");
    auto t = run_cli("train --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/m " + dir.str() + "/ds");
    REQUIRE(t.exit_code == 0);

    Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 12, 12, 999);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    write_config(dir.str() + "/rec.ini",
                 "[operator]\nkind = identity\nheight = 12\nwidth = 12\n"
                 "[scenario]\nmethod = denoiser\nnoise_sigma = 0.1\nseed = 31\n"
                 "[model]\ncheckpoint = " + dir.str() + "/m/model.ivkw\nmanifest = " + dir.str() + "/m/model.manifest\n");
    auto r = run_cli("reconstruct --config " + dir.str() + "/rec.ini --out " + dir.str() + "/rout " + dir.str() +
                     "/measurement.ivk1 --truth " + dir.str() + "/truth.ivk1");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.str() + "/rout/metrics.csv"));
}

TEST_CASE("benchmark requires a nonempty scenario list and reruns byte-identically") {
    TempDir dir("invkit_cli_bench");
    write_config(dir.str() + "/empty.ini", "[scenario]\nmethods = \n");
    auto r0 = run_cli("benchmark --config " + dir.str() + "/empty.ini --out " + dir.str() + "/o0");
    CHECK(r0.exit_code == 2);

    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nid = bench1\nmethods = ml\nn_train = 1\nn_test = 2\nnoise_sigma = 0.02\nseed = 13\n"
                 "[solver]\niters = 50\n");
    auto r1 = run_cli("benchmark --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/o1");
    CHECK(r1.exit_code == 0);
    auto r2 = run_cli("benchmark --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/o2");
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir.str() + "/o1/report.csv") == read_file(dir.str() + "/o2/report.csv"));
    CHECK(read_file(dir.str() + "/o1/aggregate.csv") == read_file(dir.str() + "/o2/aggregate.csv"));
    CHECK(read_file(dir.str() + "/o1/panel_bench1_ml_0.pgm") == read_file(dir.str() + "/o2/panel_bench1_ml_0.pgm"));

    std::string agg = read_file(dir.str() + "/o1/aggregate.csv");
    CHECK(std::count(agg.begin(), agg.end(), '\n') == 2);  // header + single scenario row
}

TEST_CASE("benchmark flushes partial results before a failure exit") {
    TempDir dir("invkit_cli_partial");
    // the second method is invalid for the configured operator, so the run
    // fails after the first scenario completed
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nid = partial\nmethods = ml,sure\nregime = y_only_sure\nn_train = 1\nn_test = 2\n"
                 "noise_sigma = 0.05\nseed = 3\n[solver]\niters = 40\n");
    auto r = run_cli("benchmark --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/o");
    CHECK(r.exit_code == 2);
    std::string report = read_file(dir.str() + "/o/report.csv");
    CHECK(report.find("partial,ml,0") != std::string::npos);  // first scenario's rows survived
}

TEST_CASE("residual checkpoint round-trips through train and reconstruct") {
    TempDir dir("invkit_cli_residual");
    fs::create_directories(dir.str() + "/ds");
    std::string op_cfg = "[operator]\nkind = convolution\nheight = 12\nwidth = 12\nkernel_size = 3\nblur_sigma = 1.0\n";
    auto op = ForwardOperator::convolution(12, 12, make_gaussian_kernel(3, 1.0), 3, 3);
    for (int i = 0; i < 4; ++i) {
        Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 12, 12, 400 + i);
        auto y = add_noise(op.apply(x), NoiseModel{0.05, static_cast<std::uint64_t>(i)});
        char xs[64], ys[64];
        std::snprintf(xs, sizeof xs, "/ds/img%03d.x.ivk1", i);
        std::snprintf(ys, sizeof ys, "/ds/img%03d.y.ivk1", i);
        io::write_raw_image(x, dir.str() + xs);
        io::write_measurement(y, dir.str() + ys);
    }
    write_config(dir.str() + "/cfg.ini",
                 op_cfg + "[training]\nregime = paired_xy\nepochs = 2\nlr = 0.002\n[model]\nchannels = 4\ndepth = 2\n"
                          "[scenario]\nseed = 5\nnoise_sigma = 0.05\n");
    auto t = run_cli("train --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/m " + dir.str() + "/ds");
    REQUIRE(t.exit_code == 0);

    Image x = bench::make_phantom(bench::PhantomKind::smooth_bump, 12, 12, 777);
    io::write_raw_image(x, dir.str() + "/truth.ivk1");
    auto s = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + " " + dir.str() + "/truth.ivk1");
    REQUIRE(s.exit_code == 0);
    write_config(dir.str() + "/rec.ini",
                 op_cfg + "[scenario]\nmethod = residual\nseed = 5\n[model]\ncheckpoint = " + dir.str() +
                     "/m/model.ivkw\nmanifest = " + dir.str() + "/m/model.manifest\n");
    auto r = run_cli("reconstruct --config " + dir.str() + "/rec.ini --out " + dir.str() + "/rout " + dir.str() +
                     "/measurement.ivk1");
    CHECK(r.exit_code == 0);
    CHECK(fs::exists(dir.str() + "/rout/reconstruction.ivk1"));
}

TEST_CASE("simulate reruns identically from its own resolved config") {
    TempDir dir("invkit_cli_sim_resolved");
    Image x = bench::make_phantom(bench::PhantomKind::shapes, 16, 16, 12);
    io::write_raw_image(x, dir.str() + "/input.ivk1");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nnoise_sigma = 0.05\nseed = 23\n");
    auto r1 = run_cli("simulate --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/a " + dir.str() + "/input.ivk1");
    REQUIRE(r1.exit_code == 0);
    auto r2 = run_cli("simulate --config " + dir.str() + "/a/resolved.ini --out " + dir.str() + "/b " + dir.str() +
                      "/input.ivk1");
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(dir.str() + "/a/measurement.ivk1") == read_file(dir.str() + "/b/measurement.ivk1"));
}

TEST_CASE("resolved config reruns to identical outputs") {
    TempDir dir("invkit_cli_resolved");
    write_config(dir.str() + "/cfg.ini",
                 "[operator]\nkind = convolution\nheight = 16\nwidth = 16\nkernel_size = 3\nblur_sigma = 1.0\n"
                 "[scenario]\nid = res1\nmethods = pgd\nn_train = 1\nn_test = 2\nnoise_sigma = 0.02\nseed = 17\n"
                 "[regularizer]\nreg = tv:0.01\n[solver]\niters = 40\n");
    auto r1 = run_cli("benchmark --config " + dir.str() + "/cfg.ini --out " + dir.str() + "/o1");
    REQUIRE(r1.exit_code == 0);
    auto r2 = run_cli("benchmark --config " + dir.str() + "/o1/resolved.ini --out " + dir.str() + "/o2");
    REQUIRE(r2.exit_code == 0);
    CHECK(read_file(dir.str() + "/o1/report.csv") == read_file(dir.str() + "/o2/report.csv"));
}

}  // TEST_SUITE
