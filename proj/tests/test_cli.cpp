// End-to-end tests of the command-line tool: exit codes, config echo,
// decompose/reconstruct round trips, a tiny train/evaluate/report chain, and
// rejection of malformed input. Each invocation shells out to the real
// binary (path injected by the build).

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#ifndef WAVPOOL_CLI_PATH
#error "WAVPOOL_CLI_PATH must point at the wavpool binary"
#endif

namespace {

struct TempDir {
    std::string path;
    TempDir() {
        static int counter = 0;
        path = "/tmp/wavpool_cli_test_" + std::to_string(::getpid()) + "_" +
               std::to_string(counter++);
        std::system(("mkdir -p " + path).c_str());
    }
    ~TempDir() { std::system(("rm -rf " + path).c_str()); }
};

struct RunResult {
    int exit_code = -1;
    std::string out, err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const TempDir& dir) {
    const std::string out_path = dir.path + "/stdout.txt";
    const std::string err_path = dir.path + "/stderr.txt";
    const std::string cmd =
        std::string(WAVPOOL_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int status = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

// Deterministic little test image, binary P5.
void write_pgm(const std::string& path, int height, int width, unsigned seed_byte) {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n" << width << " " << height << "\n255\n";
    unsigned x = seed_byte * 2654435761u + 1;
    for (int i = 0; i < height * width; ++i) {
        x = x * 1664525u + 1013904223u;
        out.put(static_cast<char>((x >> 16) & 0xff));
    }
}

std::string data_dir() {
    const char* env = std::getenv("WAVPOOL_DATA_DIR");
    REQUIRE_MESSAGE(env != nullptr, "WAVPOOL_DATA_DIR must point at the dataset root");
    return env;
}

}  // namespace

TEST_CASE("bad invocations exit with code 2") {
    TempDir dir;
    CHECK(run_cli("", dir).exit_code == 2);                      // missing subcommand
    CHECK(run_cli("frobnicate", dir).exit_code == 2);            // unknown subcommand
    CHECK(run_cli("decompose", dir).exit_code == 2);             // missing required options
    CHECK(run_cli("decompose --input a --out b --wat 1", dir).exit_code == 2);  // unknown flag
    CHECK(run_cli("train --task mars --arch mlp --out x", dir).exit_code == 2); // bad choice
    CHECK(run_cli("hpo --task mnist --arch mlp --strategy bogus --out x", dir).exit_code == 2);
    CHECK(run_cli("--help", dir).exit_code == 0);
}

TEST_CASE("decompose then reconstruct round trips a pgm") {
    TempDir dir;
    write_pgm(dir.path + "/img.pgm", 28, 25, 7);

    RunResult dec = run_cli("decompose --input " + dir.path + "/img.pgm --out " + dir.path +
                                "/mrd",
                            dir);
    CHECK(dec.exit_code == 0);
    // every run starts by echoing its resolved configuration
    CHECK(contains(dec.out, "--- decompose ---"));
    CHECK(contains(dec.out, "input = " + dir.path + "/img.pgm"));
    CHECK(contains(dec.out, "levels = all"));
    CHECK(contains(dec.out, "round-trip max abs error"));
    CHECK(slurp(dir.path + "/mrd/manifest.json").size() > 0);

    RunResult rec = run_cli("reconstruct --in " + dir.path + "/mrd --out " + dir.path +
                                "/rec.grid --reference " + dir.path + "/img.pgm",
                            dir);
    CHECK(rec.exit_code == 0);
    CHECK(contains(rec.out, "max abs error vs reference"));
}

TEST_CASE("truncated decomposition also reconstructs") {
    TempDir dir;
    write_pgm(dir.path + "/img.pgm", 32, 32, 3);
    CHECK(run_cli("decompose --input " + dir.path + "/img.pgm --out " + dir.path +
                      "/mrd --levels 2",
                  dir)
              .exit_code == 0);
    RunResult rec = run_cli("reconstruct --in " + dir.path + "/mrd --out " + dir.path +
                                "/rec.grid --reference " + dir.path + "/img.pgm",
                            dir);
    CHECK(rec.exit_code == 0);

    // out-of-range level request is a usage error
    CHECK(run_cli("decompose --input " + dir.path + "/img.pgm --out " + dir.path +
                      "/mrd9 --levels 99",
                  dir)
              .exit_code == 2);
}

TEST_CASE("reconstruct against the wrong reference exits 3") {
    TempDir dir;
    write_pgm(dir.path + "/a.pgm", 16, 16, 1);
    write_pgm(dir.path + "/b.pgm", 16, 16, 2);
    REQUIRE(run_cli("decompose --input " + dir.path + "/a.pgm --out " + dir.path + "/mrd", dir)
                .exit_code == 0);
    RunResult rec = run_cli("reconstruct --in " + dir.path + "/mrd --out " + dir.path +
                                "/rec.grid --reference " + dir.path + "/b.pgm",
                            dir);
    CHECK(rec.exit_code == 3);
    CHECK(contains(rec.err, "numerical failure"));
}

TEST_CASE("train, evaluate, and report chain on a small config") {
    TempDir dir;
    const std::string data = data_dir();
    {
        std::ofstream cfg(dir.path + "/mlp.cfg");
        cfg << "# tiny smoke configuration\n"
            << "max_epochs = 2\npatience = 1\nlearning_rate = 0.05\n"
            << "hidden1 = 48\nhidden2 = 24\n";
    }
    const std::string train_args = "train --task mnist --arch mlp --seed 3 --trials 2 --config " +
                                   dir.path + "/mlp.cfg --data-dir " + data + " --out ";

    RunResult tr = run_cli(train_args + dir.path + "/run", dir);
    CHECK(tr.exit_code == 0);
    CHECK(contains(tr.out, "--- train ---"));
    CHECK(contains(tr.out, "seed = 3"));
    CHECK(contains(tr.out, "hidden1 = 48"));
    CHECK(contains(tr.out, "max_epochs = 2"));
    CHECK(contains(tr.out, "seed 3:"));
    CHECK(contains(tr.out, "seed 4:"));
    for (const std::string f :
         {"/summary.json", "/trial_seed3/report.json", "/trial_seed3/curves.csv",
          "/trial_seed3/confusion.csv", "/trial_seed3/checkpoint/manifest.json",
          "/trial_seed4/report.json"})
        CHECK_MESSAGE(slurp(dir.path + "/run" + f).size() > 0, f);

    // identical invocation reproduces identical training curves
    RunResult tr2 = run_cli(train_args + dir.path + "/run2", dir);
    REQUIRE(tr2.exit_code == 0);
    const std::string c1 = slurp(dir.path + "/run/trial_seed3/curves.csv");
    const std::string c2 = slurp(dir.path + "/run2/trial_seed3/curves.csv");
    CHECK(c1.size() > 0);
    CHECK(c1 == c2);

    RunResult ev = run_cli("evaluate --checkpoint " + dir.path +
                               "/run/trial_seed3/checkpoint --task mnist --split val --data-dir " +
                               data + " --out " + dir.path + "/eval",
                           dir);
    CHECK(ev.exit_code == 0);
    CHECK(contains(ev.out, "mnist val (2000 examples)"));
    CHECK(slurp(dir.path + "/eval/metrics.json").size() > 0);
    CHECK(slurp(dir.path + "/eval/confusion.csv").size() > 0);

    // evaluated loss must agree with the trained report's final_val loss
    {
        const std::string report = slurp(dir.path + "/run/trial_seed3/report.json");
        const std::string metrics = slurp(dir.path + "/eval/metrics.json");
        std::size_t pos = metrics.find("\"loss\"");
        REQUIRE(pos != std::string::npos);
        const std::string loss_digits = metrics.substr(pos + 8, 10);
        CHECK_MESSAGE(contains(report, loss_digits.substr(0, 8)), loss_digits);
    }

    RunResult rp = run_cli("report --in " + dir.path + "/run --format csv", dir);
    CHECK(rp.exit_code == 0);
    CHECK(contains(rp.out, "run,arch,task,accuracy,roc_auc,f1,loss"));
    CHECK(contains(rp.out, "mlp,mnist"));
    // no wavpool run available: the relative table is skipped with a warning
    CHECK(contains(rp.err, "no wavpool run"));

    RunResult rj = run_cli("report --in " + dir.path + "/run --format json --out " + dir.path +
                               "/report.json",
                           dir);
    CHECK(rj.exit_code == 0);
    CHECK(contains(slurp(dir.path + "/report.json"), "\"arch\": \"mlp\""));
}

TEST_CASE("config file mistakes are rejected") {
    TempDir dir;
    const std::string data = data_dir();
    auto try_cfg = [&](const std::string& body) {
        std::ofstream(dir.path + "/bad.cfg") << body;
        return run_cli("train --task mnist --arch mlp --config " + dir.path +
                           "/bad.cfg --data-dir " + data + " --out " + dir.path + "/run",
                       dir);
    };
    RunResult unknown = try_cfg("max_epochs = 2\nnonsense_knob = 5\n");
    CHECK(unknown.exit_code == 2);
    CHECK(contains(unknown.err, "nonsense_knob"));
    CHECK(try_cfg("input_size = 99\n").exit_code == 2);   // shape keys come from the task
    CHECK(try_cfg("max_epochs = 2\nmax_epochs = 3\n").exit_code == 2);  // duplicate
    CHECK(try_cfg("max_epochs two\n").exit_code == 2);    // no '='
    CHECK(try_cfg("max_epochs = two\n").exit_code == 2);  // not an integer
    CHECK(try_cfg("base_hidden = 64\n").exit_code == 2);  // wavpool knob on an mlp run
}

TEST_CASE("report refuses directories without results") {
    TempDir dir;
    std::system(("mkdir -p " + dir.path + "/empty").c_str());
    CHECK(run_cli("report --in " + dir.path + "/empty", dir).exit_code == 2);
    CHECK(run_cli("report --in " + dir.path + "/does_not_exist", dir).exit_code == 2);
}
