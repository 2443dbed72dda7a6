#include "wavpool/io.hpp"

#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wavpool/errors.hpp"

namespace fs = std::filesystem;

namespace wavpool {

namespace {

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
std::string pgm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw FormatError("truncated pgm header in " + path);
    return tok;
}

std::size_t parse_count(const std::string& tok, const std::string& what,
                        const std::string& path) {
    try {
        const long v = std::stol(tok);
        if (v <= 0) throw std::invalid_argument("non-positive");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw FormatError("bad pgm " + what + " '" + tok + "' in " + path);
    }
}

}  // namespace

Tensor read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open image file: " + path);
    const std::string magic = pgm_token(in, path);
    if (magic != "P2" && magic != "P5")
        throw FormatError("unsupported graymap magic '" + magic + "' in " + path);
    const std::size_t width = parse_count(pgm_token(in, path), "width", path);
    const std::size_t height = parse_count(pgm_token(in, path), "height", path);
    const std::size_t maxval = parse_count(pgm_token(in, path), "maxval", path);
    if (maxval > 65535) throw FormatError("pgm maxval too large in " + path);

    Tensor img({height, width});
    if (magic == "P2") {
        for (std::size_t i = 0; i < img.size(); ++i) {
            const std::string tok = pgm_token(in, path);
            std::size_t v;
            try {
                v = static_cast<std::size_t>(std::stoul(tok));
            } catch (const std::exception&) {
                throw FormatError("bad pgm sample '" + tok + "' in " + path);
            }
            if (v > maxval) throw FormatError("pgm sample exceeds maxval in " + path);
            img[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    } else {
        // P5: exactly one whitespace byte after maxval, then raw samples
        // (two-byte big-endian when maxval > 255).
        const std::size_t bytes_per = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(img.size() * bytes_per);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (static_cast<std::size_t>(in.gcount()) != raw.size())
            throw FormatError("truncated pgm pixel data in " + path);
        for (std::size_t i = 0; i < img.size(); ++i) {
            std::size_t v = raw[i * bytes_per];
            if (bytes_per == 2) v = (v << 8) | raw[i * 2 + 1];
            if (v > maxval) throw FormatError("pgm sample exceeds maxval in " + path);
            img[i] = static_cast<double>(v) / static_cast<double>(maxval);
        }
    }
    return img;
}

Tensor read_float_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open grid file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<double> row;
        double v;
        while (ls >> v) row.push_back(v);
        if (ls.fail() && !ls.eof()) {
            ls.clear();
            std::string trailing;
            ls >> trailing;
            throw FormatError("non-numeric token '" + trailing + "' on line " +
                              std::to_string(lineno) + " of " + path);
        }
        if (row.empty()) continue;  // blank line
        if (!rows.empty() && row.size() != rows.front().size())
            throw FormatError("ragged grid at line " + std::to_string(lineno) + " of " + path +
                              ": expected " + std::to_string(rows.front().size()) +
                              " values, got " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw FormatError("empty grid file: " + path);
    Tensor grid({rows.size(), rows.front().size()});
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j) grid.at(i, j) = rows[i][j];
    return grid;
}

void write_float_grid(const std::string& path, const Tensor& grid) {
    if (grid.rank() != 2)
        throw DimensionError("write_float_grid expects a 2-d tensor, got " + grid.shape_str());
    std::ofstream out(path);
    if (!out) throw FormatError("cannot write grid file: " + path);
    char buf[64];
    for (std::size_t i = 0; i < grid.dim(0); ++i) {
        for (std::size_t j = 0; j < grid.dim(1); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", grid.at(i, j));
            out << (j ? " " : "") << buf;
        }
        out << "\n";
    }
    if (!out) throw FormatError("write failed for " + path);
}

Tensor read_image_grid(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw FormatError("cannot open input image: " + path);
    char m[2] = {0, 0};
    probe.read(m, 2);
    probe.close();
    if (m[0] == 'P' && (m[1] == '2' || m[1] == '5')) return read_pgm(path);
    return read_float_grid(path);
}

// --- MRD directories --------------------------------------------------------

void write_mrd(const std::string& dir, const MRDecomposition& mrd) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "wavpool-mrd-v1";
    manifest["input_shape"] = {mrd.input_shape.first, mrd.input_shape.second};
    manifest["level_count"] = mrd.levels.size();
    manifest["level_order"] = "finest-first";
    manifest["normalization"] = "orthonormal: each 1-d filter tap is 1/sqrt(2)";
    manifest["vanishing_moments"] = 1;
    nlohmann::json pads = nlohmann::json::array();
    for (const PadRecord& p : mrd.pad_log) pads.push_back({p.rows, p.cols});
    manifest["pad_log"] = pads;

    write_float_grid(dir + "/smooth.grid", mrd.smooth);
    manifest["smooth"] = {{"file", "smooth.grid"},
                          {"shape", {mrd.smooth.dim(0), mrd.smooth.dim(1)}}};
    nlohmann::json levels = nlohmann::json::array();
    for (std::size_t l = 0; l < mrd.levels.size(); ++l) {
        const DetailTriple& t = mrd.levels[l];
        const std::string stem = "level" + std::to_string(l + 1);
        write_float_grid(dir + "/" + stem + "_v.grid", t.v);
        write_float_grid(dir + "/" + stem + "_h.grid", t.h);
        write_float_grid(dir + "/" + stem + "_d.grid", t.d);
        levels.push_back({{"level", l + 1},
                          {"shape", {t.v.dim(0), t.v.dim(1)}},
                          {"v", stem + "_v.grid"},
                          {"h", stem + "_h.grid"},
                          {"d", stem + "_d.grid"}});
    }
    manifest["levels"] = levels;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

MRDecomposition read_mrd(const std::string& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("bad mrd manifest in " + dir + ": " + e.what());
    }
    if (manifest.value("format", "") != "wavpool-mrd-v1")
        throw FormatError("unrecognized mrd manifest format in " + dir);

    MRDecomposition mrd;
    mrd.input_shape = {manifest.at("input_shape")[0].get<std::size_t>(),
                       manifest.at("input_shape")[1].get<std::size_t>()};
    for (const auto& p : manifest.at("pad_log")) {
        PadRecord rec;
        rec.rows = p[0].get<std::size_t>();
        rec.cols = p[1].get<std::size_t>();
        mrd.pad_log.push_back(rec);
    }
    auto load = [&](const std::string& file, const nlohmann::json& shape) {
        Tensor t = read_float_grid(dir + "/" + file);
        if (t.dim(0) != shape[0].get<std::size_t>() || t.dim(1) != shape[1].get<std::size_t>())
            throw DataConsistencyError("grid " + file + " does not match its manifest shape");
        return t;
    };
    mrd.smooth = load(manifest.at("smooth").at("file"), manifest.at("smooth").at("shape"));
    for (const auto& lv : manifest.at("levels")) {
        DetailTriple t;
        t.v = load(lv.at("v"), lv.at("shape"));
        t.h = load(lv.at("h"), lv.at("shape"));
        t.d = load(lv.at("d"), lv.at("shape"));
        mrd.levels.push_back(std::move(t));
    }
    if (mrd.levels.size() != manifest.at("level_count").get<std::size_t>() ||
        mrd.levels.size() != mrd.pad_log.size())
        throw DataConsistencyError("mrd manifest level bookkeeping is inconsistent in " + dir);
    return mrd;
}

// --- checkpoints ------------------------------------------------------------

namespace {

void write_blob(const std::string& path, const Tensor& t) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write tensor blob: " + path);
    out.write(reinterpret_cast<const char*>(t.data()), static_cast<std::streamsize>(8 * t.size()));
    if (!out) throw FormatError("write failed for " + path);
}

void read_blob(const std::string& path, Tensor& t) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("missing tensor blob: " + path);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(8 * t.size()));
    if (static_cast<std::size_t>(in.gcount()) != 8 * t.size() || in.peek() != EOF)
        throw CorruptionError("tensor blob " + path + " does not hold exactly " +
                              std::to_string(t.size()) + " float64 values");
}

nlohmann::json tensor_entry(const std::string& name, const Tensor& t, const char* kind) {
    return {{"name", name}, {"file", name + ".bin"}, {"shape", t.shape()}, {"kind", kind}};
}

}  // namespace

void save_checkpoint(const std::string& dir, Model& model, int seed, int epoch) {
    fs::create_directories(dir);
    nlohmann::json manifest;
    manifest["format"] = "wavpool-checkpoint-v1";
    manifest["byte_order"] = "little-endian float64";
    manifest["arch"] = model.arch();
    manifest["seed"] = seed;
    manifest["epoch"] = epoch;
    nlohmann::json cfg;
    for (auto& [k, v] : model.config_kv()) cfg[k] = v;
    manifest["config"] = cfg;

    nlohmann::json tensors = nlohmann::json::array();
    for (Param* p : model.params()) {
        write_blob(dir + "/" + p->name + ".bin", p->value);
        tensors.push_back(tensor_entry(p->name, p->value, "param"));
    }
    for (auto& [name, t] : model.state()) {
        write_blob(dir + "/" + name + ".bin", *t);
        tensors.push_back(tensor_entry(name, *t, "state"));
    }
    manifest["tensors"] = tensors;
    write_text_file(dir + "/manifest.json", manifest.dump(2) + "\n");
}

std::unique_ptr<Model> build_model_from_kv(const std::map<std::string, std::string>& kv,
                                           SeededRng& rng) {
    auto need = [&kv](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw ConfigError("model config is missing key '" + key + "'");
        return it->second;
    };
    auto num = [&need](const std::string& key) {
        const std::string v = need(key);
        try {
            return static_cast<std::size_t>(std::stoul(v));
        } catch (const std::exception&) {
            throw ConfigError("model config key '" + key + "' is not a count: '" + v + "'");
        }
    };
    const std::string arch = need("arch");
    if (arch == "wavpool") {
        WavPoolConfig c;
        c.height = num("height");
        c.width = num("width");
        c.base_hidden = num("base_hidden");
        c.scaling = need("scaling") == "true";
        c.pool_k1 = num("pool_k1");
        c.pool_k2 = num("pool_k2");
        c.num_classes = num("num_classes");
        return build_wavpool(c, rng);
    }
    if (arch == "mlp") {
        MLPConfig c;
        c.input_size = num("input_size");
        c.hidden1 = num("hidden1");
        c.hidden2 = num("hidden2");
        c.num_classes = num("num_classes");
        return build_mlp(c, rng);
    }
    if (arch == "cnn") {
        CNNConfig c;
        c.height = num("height");
        c.width = num("width");
        c.kernel_size = num("kernel_size");
        c.hidden_channels_1 = num("hidden_channels_1");
        c.hidden_channels_2 = num("hidden_channels_2");
        c.num_classes = num("num_classes");
        return build_cnn(c, rng);
    }
    throw ConfigError("unknown architecture '" + arch + "' in model config");
}

Checkpoint load_checkpoint(const std::string& dir) {
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("bad checkpoint manifest in " + dir + ": " + e.what());
    }
    if (manifest.value("format", "") != "wavpool-checkpoint-v1")
        throw FormatError("unrecognized checkpoint format in " + dir);

    Checkpoint ck;
    ck.seed = manifest.value("seed", 0);
    ck.epoch = manifest.value("epoch", 0);
    for (auto& [k, v] : manifest.at("config").items())
        ck.config[k] = v.get<std::string>();

    SeededRng rng(0);  // init values are fully overwritten below
    ck.model = build_model_from_kv(ck.config, rng);

    std::map<std::string, Tensor*> slots;
    for (Param* p : ck.model->params()) slots[p->name] = &p->value;
    for (auto& [name, t] : ck.model->state()) slots[name] = t;

    std::size_t loaded = 0;
    for (const auto& entry : manifest.at("tensors")) {
        const std::string name = entry.at("name").get<std::string>();
        auto it = slots.find(name);
        if (it == slots.end())
            throw CorruptionError("checkpoint tensor '" + name +
                                  "' has no slot in the rebuilt model");
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != it->second->shape())
            throw CorruptionError("checkpoint tensor '" + name + "' shape mismatch");
        read_blob(dir + "/" + entry.at("file").get<std::string>(), *it->second);
        ++loaded;
    }
    if (loaded != slots.size())
        throw CorruptionError("checkpoint in " + dir + " lists " + std::to_string(loaded) +
                              " tensors but the model needs " + std::to_string(slots.size()));
    return ck;
}

// --- small file helpers -----------------------------------------------------

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write file: " + path);
    out << content;
    if (!out) throw FormatError("write failed for " + path);
}

std::map<std::string, std::string> read_kv_config(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto strip = [](std::string s) {
        const char* ws = " \t\r";
        const auto a = s.find_first_not_of(ws);
        if (a == std::string::npos) return std::string();
        const auto b = s.find_last_not_of(ws);
        return s.substr(a, b - a + 1);
    };
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = strip(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected key=value on line " + std::to_string(lineno) + " of " +
                              path);
        const std::string key = strip(t.substr(0, eq));
        const std::string value = strip(t.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key on line " + std::to_string(lineno));
        if (kv.count(key))
            throw ConfigError("duplicate key '" + key + "' on line " + std::to_string(lineno) +
                              " of " + path);
        kv[key] = value;
    }
    return kv;
}

}  // namespace wavpool
