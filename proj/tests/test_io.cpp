#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "oracles.hpp"
#include "wavpool/errors.hpp"
#include "wavpool/io.hpp"
#include "wavpool/train.hpp"

using namespace wavpool;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("wavpool_io_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

void write_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("float grid round trip is exact") {
    TempDir tmp;
    SeededRng rng(3);
    Tensor grid = oracle::random_tensor({7, 5}, rng, -100.0, 100.0);
    grid.at(0, 0) = 1.0 / 3.0;  // value needing all 17 digits
    write_float_grid(tmp.file("g.grid"), grid);
    Tensor back = read_float_grid(tmp.file("g.grid"));
    REQUIRE(back.dim(0) == 7);
    REQUIRE(back.dim(1) == 5);
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(back[i] == grid[i]);
}

TEST_CASE("float grid error paths") {
    TempDir tmp;
    CHECK_THROWS_WITH_AS(read_float_grid(tmp.file("missing.grid")),
                         doctest::Contains("missing.grid"), FormatError);
    write_bytes(tmp.file("ragged.grid"), "1 2 3\n4 5\n");
    CHECK_THROWS_AS(read_float_grid(tmp.file("ragged.grid")), FormatError);
    write_bytes(tmp.file("junk.grid"), "1 2\n3 potato\n");
    CHECK_THROWS_WITH_AS(read_float_grid(tmp.file("junk.grid")), doctest::Contains("potato"),
                         FormatError);
    write_bytes(tmp.file("empty.grid"), "\n\n");
    CHECK_THROWS_AS(read_float_grid(tmp.file("empty.grid")), FormatError);
    CHECK_THROWS_AS(write_float_grid(tmp.file("bad.grid"), Tensor({4})), DimensionError);
}

TEST_CASE("ascii pgm with comments parses and normalizes") {
    TempDir tmp;
    write_bytes(tmp.file("a.pgm"), "P2\n# a comment\n3 2\n# another\n4\n0 1 2\n3 4 0\n");
    Tensor img = read_pgm(tmp.file("a.pgm"));
    REQUIRE(img.dim(0) == 2);
    REQUIRE(img.dim(1) == 3);
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(0, 1) == 0.25);
    CHECK(img.at(1, 1) == 1.0);
}

TEST_CASE("binary pgm: one and two byte samples") {
    TempDir tmp;
    write_bytes(tmp.file("b.pgm"), std::string("P5\n2 2\n255\n") +
                                       std::string({'\x00', '\x80', '\xff', '\x40'}));
    Tensor img = read_pgm(tmp.file("b.pgm"));
    CHECK(img.at(0, 0) == 0.0);
    CHECK(img.at(0, 1) == 128.0 / 255.0);
    CHECK(img.at(1, 0) == 1.0);

    // maxval 65535: big-endian two-byte samples
    write_bytes(tmp.file("wide.pgm"),
                std::string("P5\n1 2\n65535\n") + std::string({'\xff', '\xff', '\x01', '\x00'}));
    Tensor wide = read_pgm(tmp.file("wide.pgm"));
    CHECK(wide.at(0, 0) == 1.0);
    CHECK(wide.at(1, 0) == 256.0 / 65535.0);
}

TEST_CASE("pgm error paths") {
    TempDir tmp;
    write_bytes(tmp.file("p3.pgm"), "P3\n1 1\n255\n0 0 0\n");
    CHECK_THROWS_WITH_AS(read_pgm(tmp.file("p3.pgm")), doctest::Contains("P3"), FormatError);
    write_bytes(tmp.file("short.pgm"), "P5\n4 4\n255\nab");
    CHECK_THROWS_AS(read_pgm(tmp.file("short.pgm")), FormatError);
    write_bytes(tmp.file("hdr.pgm"), "P2\n3\n");
    CHECK_THROWS_AS(read_pgm(tmp.file("hdr.pgm")), FormatError);
    write_bytes(tmp.file("over.pgm"), "P2\n1 1\n4\n9\n");
    CHECK_THROWS_AS(read_pgm(tmp.file("over.pgm")), FormatError);
    CHECK_THROWS_WITH_AS(read_pgm(tmp.file("nope.pgm")), doctest::Contains("nope.pgm"),
                         FormatError);
}

TEST_CASE("read_image_grid dispatches on the magic") {
    TempDir tmp;
    write_bytes(tmp.file("img.pgm"), "P2\n1 1\n2\n1\n");
    CHECK(read_image_grid(tmp.file("img.pgm")).at(0, 0) == 0.5);
    write_bytes(tmp.file("img.txt"), "0.5 0.25\n");
    CHECK(read_image_grid(tmp.file("img.txt")).at(0, 1) == 0.25);
}

TEST_CASE("mrd directory round trip reconstructs exactly") {
    TempDir tmp;
    SeededRng rng(11);
    Tensor img = oracle::random_tensor({25, 28}, rng);  // odd height forces padding
    WaveletFilters2D filters = haar_filters_2d();
    MRDecomposition mrd = decompose(img, filters);

    const std::string dir = tmp.file("mrd");
    write_mrd(dir, mrd);
    CHECK(fs::exists(dir + "/manifest.json"));
    CHECK(fs::exists(dir + "/smooth.grid"));
    CHECK(fs::exists(dir + "/level1_v.grid"));

    MRDecomposition back = read_mrd(dir);
    CHECK(back.levels.size() == mrd.levels.size());
    CHECK(back.input_shape == mrd.input_shape);
    REQUIRE(back.pad_log.size() == mrd.pad_log.size());
    for (std::size_t l = 0; l < mrd.pad_log.size(); ++l) {
        CHECK(back.pad_log[l].rows == mrd.pad_log[l].rows);
        CHECK(back.pad_log[l].cols == mrd.pad_log[l].cols);
    }
    Tensor rec = reconstruct(back, filters);
    CHECK(oracle::max_abs_diff(rec, img) <= 1e-10);
}

TEST_CASE("mrd manifest errors") {
    TempDir tmp;
    CHECK_THROWS_AS(read_mrd(tmp.file("absent")), FormatError);
    fs::create_directories(tmp.file("broken"));
    write_bytes(tmp.file("broken") + "/manifest.json", "{not json");
    CHECK_THROWS_AS(read_mrd(tmp.file("broken")), FormatError);
    write_bytes(tmp.file("broken") + "/manifest.json", "{\"format\": \"other\"}");
    CHECK_THROWS_AS(read_mrd(tmp.file("broken")), FormatError);
}

TEST_CASE("checkpoint round trip restores every architecture bit-exactly") {
    TempDir tmp;
    SeededRng data_rng(5);
    Tensor x = oracle::random_tensor({3, 8, 8}, data_rng);

    auto roundtrip = [&](std::unique_ptr<Model> model, const std::string& sub) {
        // perturb running state for the cnn case: one training pass
        model->forward(x, true);
        Tensor before = model->forward(x, false);
        const std::string dir = tmp.file(sub);
        save_checkpoint(dir, *model, 42, 17);
        Checkpoint ck = load_checkpoint(dir);
        CHECK(ck.seed == 42);
        CHECK(ck.epoch == 17);
        CHECK(ck.model->arch() == model->arch());
        Tensor after = ck.model->forward(x, false);
        CHECK(oracle::max_abs_diff(before, after) == 0.0);
    };

    SeededRng rng(9);
    WavPoolConfig wc;
    wc.height = 8;
    wc.width = 8;
    wc.base_hidden = 10;
    wc.num_classes = 3;
    roundtrip(build_wavpool(wc, rng), "wp");

    MLPConfig mc;
    mc.input_size = 64;
    mc.hidden1 = 7;
    mc.hidden2 = 5;
    mc.num_classes = 3;
    roundtrip(build_mlp(mc, rng), "mlp");

    CNNConfig cc;
    cc.height = 8;
    cc.width = 8;
    cc.kernel_size = 3;
    cc.hidden_channels_1 = 2;
    cc.hidden_channels_2 = 2;
    cc.num_classes = 3;
    roundtrip(build_cnn(cc, rng), "cnn");
}

TEST_CASE("checkpoint corruption is detected") {
    TempDir tmp;
    SeededRng rng(1);
    MLPConfig mc;
    mc.input_size = 16;
    mc.hidden1 = 4;
    mc.hidden2 = 4;
    mc.num_classes = 2;
    auto model = build_mlp(mc, rng);
    const std::string dir = tmp.file("ck");
    save_checkpoint(dir, *model, 0, 1);

    // truncate one blob
    const std::string blob = dir + "/fc1.W.bin";
    REQUIRE(fs::exists(blob));
    fs::resize_file(blob, 8);
    CHECK_THROWS_AS(load_checkpoint(dir), CorruptionError);
    fs::resize_file(blob, 16 * 4 * 8 + 8);  // too long now
    CHECK_THROWS_AS(load_checkpoint(dir), CorruptionError);

    save_checkpoint(dir, *model, 0, 1);
    fs::remove(dir + "/fc2.b.bin");
    CHECK_THROWS_AS(load_checkpoint(dir), FormatError);
}

TEST_CASE("kv config files parse with comments, strip, and duplicate detection") {
    TempDir tmp;
    write_bytes(tmp.file("c.cfg"),
                "# training setup\n"
                "  max_epochs = 50\n"
                "batch_size=32\n"
                "\n"
                "optimizer = adam \n");
    auto kv = read_kv_config(tmp.file("c.cfg"));
    CHECK(kv.size() == 3);
    CHECK(kv["max_epochs"] == "50");
    CHECK(kv["batch_size"] == "32");
    CHECK(kv["optimizer"] == "adam");

    write_bytes(tmp.file("dup.cfg"), "a=1\na=2\n");
    CHECK_THROWS_WITH_AS(read_kv_config(tmp.file("dup.cfg")), doctest::Contains("duplicate"),
                         ConfigError);
    write_bytes(tmp.file("noeq.cfg"), "just words\n");
    CHECK_THROWS_AS(read_kv_config(tmp.file("noeq.cfg")), ConfigError);
    CHECK_THROWS_AS(read_kv_config(tmp.file("missing.cfg")), FormatError);
}

TEST_CASE("build_model_from_kv rejects incomplete configs") {
    SeededRng rng(1);
    std::map<std::string, std::string> kv = {{"arch", "mlp"}, {"input_size", "16"}};
    CHECK_THROWS_WITH_AS(build_model_from_kv(kv, rng), doctest::Contains("hidden1"), ConfigError);
    kv = {{"arch", "transformer"}};
    CHECK_THROWS_AS(build_model_from_kv(kv, rng), ConfigError);
    kv = {{"arch", "mlp"},       {"input_size", "16"},  {"hidden1", "four"},
          {"hidden2", "4"},      {"num_classes", "2"}};
    CHECK_THROWS_AS(build_model_from_kv(kv, rng), ConfigError);
}
