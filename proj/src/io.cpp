#include "sliceprop/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sliceprop/errors.hpp"

namespace fs = std::filesystem;

namespace sliceprop {

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

void write_file(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw ValidationError("write failed for " + path.string());
}

struct PgmScanner {
    const std::string& buf;
    std::size_t pos = 0;

    bool at_end() const { return pos >= buf.size(); }

    void skip_space_and_comments() {
        while (!at_end()) {
            const char c = buf[pos];
            if (c == '#') {
                while (!at_end() && buf[pos] != '\n') ++pos;
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_int(const char* what) {
        skip_space_and_comments();
        if (at_end() || buf[pos] < '0' || buf[pos] > '9')
            throw ParseError(std::string("expected ") + what, pos);
        long v = 0;
        while (!at_end() && buf[pos] >= '0' && buf[pos] <= '9') {
            v = v * 10 + (buf[pos] - '0');
            if (v > std::numeric_limits<int>::max())
                throw ParseError(std::string(what) + " out of range", pos);
            ++pos;
        }
        return static_cast<int>(v);
    }
};

}  // namespace

ImageSlice load_pgm(const fs::path& path) {
    const std::string buf = read_file(path);
    PgmScanner sc{buf};
    if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '5')
        throw ParseError("not a binary PGM (missing P5 magic)", 0);
    sc.pos = 2;
    const int width = sc.read_int("width");
    const int height = sc.read_int("height");
    const int maxval = sc.read_int("maxval");
    if (width <= 0 || height <= 0)
        throw ParseError("non-positive dimensions", sc.pos);
    if (maxval < 1 || maxval > 65535)
        throw ParseError("maxval outside [1,65535]", sc.pos);
    if (sc.at_end() || !(buf[sc.pos] == ' ' || buf[sc.pos] == '\t' ||
                         buf[sc.pos] == '\r' || buf[sc.pos] == '\n'))
        throw ParseError("expected single whitespace before raster", sc.pos);
    ++sc.pos;

    const bool two_byte = maxval > 255;
    const std::size_t count = static_cast<std::size_t>(width) * height;
    const std::size_t need = count * (two_byte ? 2 : 1);
    if (buf.size() - sc.pos < need)
        throw ParseError("raster truncated", buf.size());

    ImageSlice slice;
    slice.width = width;
    slice.height = height;
    slice.bit_depth = two_byte ? 16 : 8;
    slice.intensities.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint16_t v;
        if (two_byte) {
            const auto hi = static_cast<unsigned char>(buf[sc.pos + 2 * i]);
            const auto lo = static_cast<unsigned char>(buf[sc.pos + 2 * i + 1]);
            v = static_cast<std::uint16_t>(hi << 8 | lo);
        } else {
            v = static_cast<unsigned char>(buf[sc.pos + i]);
        }
        if (v > maxval)
            throw ParseError("sample exceeds maxval",
                             sc.pos + i * (two_byte ? 2 : 1));
        slice.intensities[i] = v;
    }
    return slice;
}

void save_pgm(const ImageSlice& slice, const fs::path& path) {
    slice.validate();
    const int maxval = slice.bit_depth == 8 ? 255 : 65535;
    std::string out = "P5\n" + std::to_string(slice.width) + " " +
                      std::to_string(slice.height) + "\n" +
                      std::to_string(maxval) + "\n";
    if (slice.bit_depth == 8) {
        for (std::uint16_t v : slice.intensities)
            out.push_back(static_cast<char>(v));
    } else {
        for (std::uint16_t v : slice.intensities) {
            out.push_back(static_cast<char>(v >> 8));
            out.push_back(static_cast<char>(v & 0xff));
        }
    }
    write_file(path, out);
}

BinaryMask load_mask(const fs::path& path) {
    const ImageSlice img = load_pgm(path);
    if (img.bit_depth != 8)
        throw ValidationError("mask " + path.string() + " must have maxval 255");
    BinaryMask mask = BinaryMask::zeros(img.width, img.height);
    for (std::size_t i = 0; i < img.intensities.size(); ++i) {
        if (img.intensities[i] == 255)
            mask.bits[i] = 1;
        else if (img.intensities[i] != 0)
            throw ValidationError("mask " + path.string() +
                                  " holds values other than {0,255}");
    }
    return mask;
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
    mask.validate();
    ImageSlice img;
    img.width = mask.width;
    img.height = mask.height;
    img.bit_depth = 8;
    img.intensities.resize(mask.bits.size());
    for (std::size_t i = 0; i < mask.bits.size(); ++i)
        img.intensities[i] = mask.bits[i] ? 255 : 0;
    save_pgm(img, path);
}

namespace {

std::vector<fs::path> pgm_files_sorted(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw ValidationError(dir.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".pgm")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                  return a.filename().string() < b.filename().string();
              });
    return files;
}

}  // namespace

CineStack load_stack(const fs::path& dir) {
    const std::vector<fs::path> files = pgm_files_sorted(dir);
    if (files.size() < 2)
        throw ValidationError("stack directory " + dir.string() +
                              " needs at least 2 .pgm slices");
    CineStack stack;
    for (const fs::path& f : files) {
        ImageSlice s = load_pgm(f);
        if (!stack.slices.empty()) {
            const ImageSlice& first = stack.slices.front();
            if (s.width != first.width || s.height != first.height ||
                s.bit_depth != first.bit_depth)
                throw ValidationError("slice " + f.string() +
                                      " disagrees with the stack geometry");
        }
        stack.slices.push_back(std::move(s));
    }
    return stack;
}

std::vector<std::pair<std::string, BinaryMask>> load_mask_dir(const fs::path& dir) {
    std::vector<std::pair<std::string, BinaryMask>> out;
    for (const fs::path& f : pgm_files_sorted(dir))
        out.emplace_back(f.filename().string(), load_mask(f));
    return out;
}

// ---- Model serialization ----

namespace {

constexpr const char* kMagic = "slicepropmodel";
constexpr int kVersion = 1;

std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double parse_double(const std::string& tok) {
    if (tok == "inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    return std::strtod(tok.c_str(), nullptr);
}

void expect(std::istream& in, const char* tok) {
    std::string s;
    if (!(in >> s) || s != tok)
        throw ParseError(std::string("expected token '") + tok + "'", 0);
}

void check_header(std::istream& in, const char* kind) {
    std::string magic, kind_tok;
    int version = 0;
    if (!(in >> magic >> version >> kind_tok) || magic != kMagic)
        throw ParseError("not a sliceprop model file", 0);
    if (version != kVersion)
        throw VersionError("unsupported model file version " +
                           std::to_string(version));
    if (kind_tok != kind)
        throw ValidationError("model file holds a '" + kind_tok +
                              "' model, expected '" + kind + "'");
}

/// Pre-order walk emitting reachable nodes with contiguous indices, so
/// logically equal trees serialize identically regardless of dead slots.
template <typename Node>
std::vector<int> reachable_preorder(const std::vector<Node>& nodes, int root) {
    std::vector<int> order;
    std::vector<int> stack{root};
    while (!stack.empty()) {
        const int j = stack.back();
        stack.pop_back();
        order.push_back(j);
        if (!nodes[j].is_leaf()) {
            stack.push_back(nodes[j].right);
            stack.push_back(nodes[j].left);
        }
    }
    return order;
}

template <typename Node>
std::vector<int> index_remap(const std::vector<Node>& nodes,
                             const std::vector<int>& order) {
    std::vector<int> remap(nodes.size(), -1);
    for (std::size_t i = 0; i < order.size(); ++i)
        remap[order[i]] = static_cast<int>(i);
    return remap;
}

}  // namespace

void serialize_model(const RandomForestModel& model, std::ostream& out) {
    out << kMagic << ' ' << kVersion << " rf\n";
    out << "params " << model.params.n_trees << ' ' << model.params.min_samples_leaf
        << ' ' << model.params.mtry << ' ' << (model.params.bootstrap ? 1 : 0)
        << ' ' << model.params.seed << '\n';
    out << "trees " << model.trees.size() << '\n';
    for (const RFTree& tree : model.trees) {
        const auto order = reachable_preorder(tree.nodes, 0);
        const auto remap = index_remap(tree.nodes, order);
        out << "tree " << order.size() << '\n';
        for (int j : order) {
            const RFNode& n = tree.nodes[j];
            if (n.is_leaf())
                out << "l " << n.class_counts[0] << ' ' << n.class_counts[1] << '\n';
            else
                out << "i " << n.feature << ' ' << fmt_double(n.threshold) << ' '
                    << remap[n.left] << ' ' << remap[n.right] << '\n';
        }
    }
    out << "end\n";
}

RandomForestModel deserialize_rf_model(std::istream& in) {
    check_header(in, "rf");
    RandomForestModel model;
    expect(in, "params");
    int bootstrap = 0;
    in >> model.params.n_trees >> model.params.min_samples_leaf >>
        model.params.mtry >> bootstrap >> model.params.seed;
    model.params.bootstrap = bootstrap != 0;
    expect(in, "trees");
    std::size_t n_trees = 0;
    in >> n_trees;
    for (std::size_t t = 0; t < n_trees; ++t) {
        expect(in, "tree");
        std::size_t n_nodes = 0;
        in >> n_nodes;
        RFTree tree;
        tree.nodes.resize(n_nodes);
        for (std::size_t j = 0; j < n_nodes; ++j) {
            std::string tag;
            in >> tag;
            RFNode& n = tree.nodes[j];
            if (tag == "l") {
                in >> n.class_counts[0] >> n.class_counts[1];
            } else if (tag == "i") {
                std::string thr;
                in >> n.feature >> thr >> n.left >> n.right;
                n.threshold = parse_double(thr);
            } else {
                throw ParseError("unknown node tag '" + tag + "'", 0);
            }
        }
        model.trees.push_back(std::move(tree));
    }
    expect(in, "end");
    if (!in) throw ParseError("model file truncated", 0);
    return model;
}

void serialize_model(const MondrianForestModel& model, std::ostream& out) {
    out << kMagic << ' ' << kVersion << " mf\n";
    out << "params " << model.params.n_trees << ' '
        << fmt_double(model.params.lifetime) << ' '
        << model.params.min_samples_leaf << ' '
        << fmt_double(model.params.smoothing_alpha) << ' ' << model.params.seed
        << '\n';
    out << "points " << model.points.size() << '\n';
    for (const LabeledPoint& p : model.points)
        out << "p " << fmt_double(p.features[0]) << ' ' << fmt_double(p.features[1])
            << ' ' << fmt_double(p.features[2]) << ' ' << int(p.label) << '\n';
    out << "trees " << model.trees.size() << '\n';
    for (const MondrianTree& tree : model.trees) {
        const auto order = reachable_preorder(tree.nodes, tree.root);
        const auto remap = index_remap(tree.nodes, order);
        out << "tree " << order.size() << '\n';
        for (int j : order) {
            const MondrianNode& n = tree.nodes[j];
            out << (n.is_leaf() ? "l " : "i ") << fmt_double(n.split_time);
            for (int d = 0; d < 3; ++d) out << ' ' << fmt_double(n.box_low[d]);
            for (int d = 0; d < 3; ++d) out << ' ' << fmt_double(n.box_high[d]);
            out << ' ' << n.class_counts[0] << ' ' << n.class_counts[1];
            if (n.is_leaf()) {
                out << ' ' << n.leaf_rows.size();
                for (std::uint32_t r : n.leaf_rows) out << ' ' << r;
            } else {
                out << ' ' << n.split_dim << ' ' << fmt_double(n.split_loc) << ' '
                    << remap[n.left] << ' ' << remap[n.right];
            }
            out << '\n';
        }
    }
    out << "end\n";
}

MondrianForestModel deserialize_mf_model(std::istream& in) {
    check_header(in, "mf");
    MondrianForestModel model;
    expect(in, "params");
    std::string lifetime, alpha;
    in >> model.params.n_trees >> lifetime >> model.params.min_samples_leaf >>
        alpha >> model.params.seed;
    model.params.lifetime = parse_double(lifetime);
    model.params.smoothing_alpha = parse_double(alpha);
    expect(in, "points");
    std::size_t n_points = 0;
    in >> n_points;
    model.points.resize(n_points);
    for (std::size_t i = 0; i < n_points; ++i) {
        expect(in, "p");
        std::string f0, f1, f2;
        int label = 0;
        in >> f0 >> f1 >> f2 >> label;
        model.points[i] = LabeledPoint{
            {parse_double(f0), parse_double(f1), parse_double(f2)},
            static_cast<std::uint8_t>(label)};
    }
    expect(in, "trees");
    std::size_t n_trees = 0;
    in >> n_trees;
    for (std::size_t t = 0; t < n_trees; ++t) {
        expect(in, "tree");
        std::size_t n_nodes = 0;
        in >> n_nodes;
        MondrianTree tree;
        tree.rng = Rng(mix64(model.params.seed, t));
        tree.root = 0;
        tree.nodes.resize(n_nodes);
        for (std::size_t j = 0; j < n_nodes; ++j) {
            std::string tag, tok;
            in >> tag;
            MondrianNode& n = tree.nodes[j];
            in >> tok;
            n.split_time = parse_double(tok);
            for (int d = 0; d < 3; ++d) {
                in >> tok;
                n.box_low[d] = parse_double(tok);
            }
            for (int d = 0; d < 3; ++d) {
                in >> tok;
                n.box_high[d] = parse_double(tok);
            }
            in >> n.class_counts[0] >> n.class_counts[1];
            if (tag == "l") {
                std::size_t rows = 0;
                in >> rows;
                n.leaf_rows.resize(rows);
                for (std::size_t r = 0; r < rows; ++r) in >> n.leaf_rows[r];
            } else if (tag == "i") {
                in >> n.split_dim >> tok >> n.left >> n.right;
                n.split_loc = parse_double(tok);
            } else {
                throw ParseError("unknown node tag '" + tag + "'", 0);
            }
        }
        model.trees.push_back(std::move(tree));
    }
    expect(in, "end");
    if (!in) throw ParseError("model file truncated", 0);
    return model;
}

namespace {

template <typename Model>
void save_model_impl(const Model& model, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    serialize_model(model, out);
    if (!out) throw ValidationError("write failed for " + path.string());
}

/// streambuf that hashes everything written to it (FNV-1a 64).
struct HashBuf : std::streambuf {
    std::uint64_t hash = 1469598103934665603ULL;

    void absorb(unsigned char c) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    int_type overflow(int_type c) override {
        if (c != traits_type::eof()) absorb(static_cast<unsigned char>(c));
        return c;
    }
    std::streamsize xsputn(const char* s, std::streamsize n) override {
        for (std::streamsize i = 0; i < n; ++i)
            absorb(static_cast<unsigned char>(s[i]));
        return n;
    }
};

}  // namespace

void save_model(const RandomForestModel& model, const fs::path& path) {
    save_model_impl(model, path);
}
void save_model(const MondrianForestModel& model, const fs::path& path) {
    save_model_impl(model, path);
}

RandomForestModel load_rf_model(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return deserialize_rf_model(in);
}

MondrianForestModel load_mf_model(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return deserialize_mf_model(in);
}

std::uint64_t model_digest(const RandomForestModel& model) {
    HashBuf buf;
    std::ostream out(&buf);
    serialize_model(model, out);
    return buf.hash;
}

std::uint64_t model_digest(const MondrianForestModel& model) {
    HashBuf buf;
    std::ostream out(&buf);
    serialize_model(model, out);
    return buf.hash;
}

// ---- Reports ----

namespace {

using nlohmann::json;

json opt_to_json(const std::optional<double>& v) {
    if (v) return *v;
    return nullptr;
}

std::optional<double> opt_from_json(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

}  // namespace

std::string report_to_json(const SegmentationReport& report) {
    json j;
    j["schema"] = "1";
    j["config"] = {{"mode", report.config.mode},
                   {"trees", report.config.trees},
                   {"min_leaf", report.config.min_leaf},
                   {"seed", report.config.seed}};
    j["per_slice"] = json::array();
    for (const SliceDice& row : report.per_slice)
        j["per_slice"].push_back({{"slice", row.slice},
                                  {"dice_mf", opt_to_json(row.dice_mf)},
                                  {"dice_rf", opt_to_json(row.dice_rf)},
                                  {"dice_combined", row.dice_combined}});
    j["overall_mean"] = {{"mf", opt_to_json(report.overall_mean.mf)},
                         {"rf", opt_to_json(report.overall_mean.rf)},
                         {"combined", report.overall_mean.combined}};
    j["overall_pooled"] = {{"mf", opt_to_json(report.overall_pooled.mf)},
                           {"rf", opt_to_json(report.overall_pooled.rf)},
                           {"combined", report.overall_pooled.combined}};
    j["warnings"] = report.warnings;
    j["elapsed_seconds"] = report.elapsed_seconds;
    return j.dump(2) + "\n";
}

SegmentationReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bad report JSON: ") + e.what(),
                         static_cast<std::size_t>(e.byte));
    }
    if (!j.contains("schema") || j["schema"] != "1")
        throw VersionError("unsupported report schema");
    SegmentationReport rep;
    rep.config.mode = j["config"]["mode"].get<std::string>();
    rep.config.trees = j["config"]["trees"].get<int>();
    rep.config.min_leaf = j["config"]["min_leaf"].get<int>();
    rep.config.seed = j["config"]["seed"].get<std::uint64_t>();
    for (const json& row : j["per_slice"]) {
        SliceDice sd;
        sd.slice = row["slice"].get<int>();
        sd.dice_mf = opt_from_json(row["dice_mf"]);
        sd.dice_rf = opt_from_json(row["dice_rf"]);
        sd.dice_combined = row["dice_combined"].get<double>();
        rep.per_slice.push_back(sd);
    }
    rep.overall_mean.mf = opt_from_json(j["overall_mean"]["mf"]);
    rep.overall_mean.rf = opt_from_json(j["overall_mean"]["rf"]);
    rep.overall_mean.combined = j["overall_mean"]["combined"].get<double>();
    rep.overall_pooled.mf = opt_from_json(j["overall_pooled"]["mf"]);
    rep.overall_pooled.rf = opt_from_json(j["overall_pooled"]["rf"]);
    rep.overall_pooled.combined = j["overall_pooled"]["combined"].get<double>();
    rep.warnings = j["warnings"].get<std::vector<std::string>>();
    rep.elapsed_seconds = j["elapsed_seconds"].get<double>();
    return rep;
}

namespace {

std::string csv_cell(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", *v);
    return buf;
}

}  // namespace

void write_report(const SegmentationReport& report, const fs::path& json_path) {
    write_file(json_path, report_to_json(report));
    fs::path csv_path = json_path;
    csv_path.replace_extension(".csv");
    std::string csv = "slice,dice_mf,dice_rf,dice_combined\n";
    for (const SliceDice& row : report.per_slice) {
        csv += std::to_string(row.slice) + "," + csv_cell(row.dice_mf) + "," +
               csv_cell(row.dice_rf) + "," + csv_cell(row.dice_combined) + "\n";
    }
    write_file(csv_path, csv);
}

SegmentationReport read_report(const fs::path& json_path) {
    return report_from_json(read_file(json_path));
}

}  // namespace sliceprop
