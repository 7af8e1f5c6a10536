#include "eigdist/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "eigdist/error.hpp"

namespace eigdist {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<unsigned char> read_bytes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

std::string at_byte(const fs::path& path, std::size_t offset) {
    return path.filename().string() + ": byte " + std::to_string(offset) + ": ";
}

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f'; }

// PGM header token reader: skips whitespace and '#' comments.
std::size_t read_header_uint(const std::vector<unsigned char>& b, std::size_t& pos, const fs::path& path,
                             const char* what, std::size_t* token_start = nullptr) {
    for (;;) {
        while (pos < b.size() && is_space(b[pos])) ++pos;
        if (pos < b.size() && b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
            continue;
        }
        break;
    }
    const std::size_t start = pos;
    if (token_start != nullptr) *token_start = start;
    std::size_t v = 0;
    while (pos < b.size() && b[pos] >= '0' && b[pos] <= '9') {
        v = v * 10 + static_cast<std::size_t>(b[pos] - '0');
        if (v > (std::size_t{1} << 40)) throw ParseError(at_byte(path, start) + std::string(what) + " too large");
        ++pos;
    }
    if (pos == start) throw ParseError(at_byte(path, start) + "expected " + what);
    return v;
}

Grid2 load_pgm(const fs::path& path, const std::vector<unsigned char>& b) {
    std::size_t pos = 2;
    const std::size_t width = read_header_uint(b, pos, path, "width");
    const std::size_t height = read_header_uint(b, pos, path, "height");
    std::size_t maxval_at = 0;
    const std::size_t maxval = read_header_uint(b, pos, path, "maxval", &maxval_at);
    if (width == 0 || height == 0) throw ParseError(at_byte(path, maxval_at) + "zero image dimension");
    if (maxval != 255 && maxval != 65535) {
        throw ParseError(at_byte(path, maxval_at) + "unsupported maxval " + std::to_string(maxval));
    }
    if (pos >= b.size() || !is_space(b[pos])) throw ParseError(at_byte(path, pos) + "expected whitespace after maxval");
    ++pos;
    const std::size_t bpp = maxval == 255 ? 1 : 2;
    const std::size_t need = width * height * bpp;
    if (b.size() - pos < need) {
        throw ParseError(at_byte(path, pos) + "truncated payload: expected " + std::to_string(need) +
                         " bytes, found " + std::to_string(b.size() - pos));
    }
    Grid2 g(height, width);
    const double scale_by = 1.0 / static_cast<double>(maxval);
    for (std::size_t i = 0; i < width * height; ++i) {
        const std::size_t v = bpp == 1 ? b[pos + i] : (std::size_t{b[pos + 2 * i]} << 8) | b[pos + 2 * i + 1];
        g.values()[i] = static_cast<double>(v) * scale_by;
    }
    return g;
}

Grid2 load_raw(const fs::path& path, const std::vector<unsigned char>& b) {
    const json side = read_json(sidecar_path(path));
    std::size_t h = 0, w = 0, c = 0;
    try {
        h = side.at("height").get<std::size_t>();
        w = side.at("width").get<std::size_t>();
        c = side.at("channels").get<std::size_t>();
        if (side.at("order").get<std::string>() != "row-major") throw ParseError("sidecar order must be row-major");
        if (side.at("endianness").get<std::string>() != "little") throw ParseError("sidecar endianness must be little");
    } catch (const json::exception& e) {
        throw ParseError(sidecar_path(path).filename().string() + ": " + e.what());
    }
    if (c != 1) throw ParseError(sidecar_path(path).filename().string() + ": only single-channel grids are supported");
    if (h == 0 || w == 0) throw ParseError(sidecar_path(path).filename().string() + ": zero image dimension");
    const std::size_t need = h * w * 4;
    if (b.size() < need) {
        throw ParseError(at_byte(path, b.size()) + "truncated payload: expected " + std::to_string(need) + " bytes");
    }
    if (b.size() > need) throw ParseError(at_byte(path, need) + "trailing bytes after payload");
    Grid2 g(h, w);
    for (std::size_t i = 0; i < h * w; ++i) {
        std::uint32_t bits = 0;
        for (std::size_t k = 0; k < 4; ++k) bits |= std::uint32_t{b[4 * i + k]} << (8 * k);
        const float f = std::bit_cast<float>(bits);
        if (!std::isfinite(f)) throw ParseError(at_byte(path, 4 * i) + "non-finite sample");
        g.values()[i] = static_cast<double>(f);
    }
    return g;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, e = s.size();
    while (a < e && is_space(static_cast<unsigned char>(s[a]))) ++a;
    while (e > a && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(a, e - a);
}

std::string line_prefix(const fs::path& path, std::size_t line) {
    return path.filename().string() + ": line " + std::to_string(line) + ": ";
}

}  // namespace

ImageFormat parse_image_format(const std::string& name) {
    if (name == "pgm8") return ImageFormat::pgm8;
    if (name == "pgm16") return ImageFormat::pgm16;
    if (name == "raw" || name == "raw-f32") return ImageFormat::raw_f32;
    throw ParseError("unknown image format '" + name + "' (pgm8, pgm16, raw)");
}

std::string to_string(ImageFormat format) {
    switch (format) {
        case ImageFormat::pgm8: return "pgm8";
        case ImageFormat::pgm16: return "pgm16";
        case ImageFormat::raw_f32: return "raw";
    }
    return "?";
}

fs::path sidecar_path(const fs::path& raw) { return fs::path(raw.string() + ".json"); }

Grid2 load_image(const fs::path& path) {
    const std::vector<unsigned char> b = read_bytes(path);
    if (b.size() >= 2 && b[0] == 'P' && b[1] == '5') return load_pgm(path, b);
    if (fs::exists(sidecar_path(path))) return load_raw(path, b);
    throw ParseError(at_byte(path, 0) + "neither a P5 PGM header nor a RAW-F32 file with a sidecar");
}

std::size_t count_out_of_range(const Grid2& grid) {
    std::size_t n = 0;
    for (double v : grid.values()) n += (v < 0.0 || v > 1.0) ? 1 : 0;
    return n;
}

SaveReport save_image(const Grid2& grid, const fs::path& path, ImageFormat format, const json& metadata) {
    if (!grid.all_finite()) throw InputDomainError("cannot save a grid with non-finite values");
    SaveReport rep;
    std::string bytes;
    if (format == ImageFormat::raw_f32) {
        bytes.resize(grid.size() * 4);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(grid.values()[i]));
            for (std::size_t k = 0; k < 4; ++k) bytes[4 * i + k] = static_cast<char>((bits >> (8 * k)) & 0xffu);
        }
        write_bytes(path, bytes);
        json side = {{"height", grid.height()},
                     {"width", grid.width()},
                     {"channels", 1},
                     {"order", "row-major"},
                     {"endianness", "little"},
                     {"dtype", "float32"},
                     {"gamma_note", "normalized luminance in [0, 1]; display calibration 5-300 cd/m^2, gamma 2.4, "
                                    "recorded as metadata only"}};
        if (!metadata.empty()) side["metadata"] = metadata;
        write_json(sidecar_path(path), side);
        return rep;
    }
    const std::size_t maxval = format == ImageFormat::pgm8 ? 255 : 65535;
    std::ostringstream head;
    head << "P5\n" << grid.width() << ' ' << grid.height() << '\n' << maxval << '\n';
    bytes = head.str();
    for (double v : grid.values()) {
        if (v < 0.0 || v > 1.0) ++rep.clipped;
        const auto q = static_cast<std::uint32_t>(std::rint(std::clamp(v, 0.0, 1.0) * static_cast<double>(maxval)));
        if (maxval == 255) {
            bytes.push_back(static_cast<char>(q));
        } else {
            bytes.push_back(static_cast<char>(q >> 8));
            bytes.push_back(static_cast<char>(q & 0xffu));
        }
    }
    write_bytes(path, bytes);
    return rep;
}

RenderResult render_distorted(const Grid2& x, const Grid2& e, double alpha, const fs::path& dir,
                              const std::string& stem) {
    if (x.height() != e.height() || x.width() != e.width()) throw ShapeError("render: image and vector sizes differ");
    if (!std::isfinite(alpha)) throw ParameterDomainError("render: alpha must be finite");
    Grid2 y = x;
    axpy(alpha, e.values(), y.values());
    RenderResult r;
    r.clipped = count_out_of_range(y);
    r.clipped_path = dir / (stem + ".pgm");
    r.raw_path = dir / (stem + ".raw");
    save_image(y, r.clipped_path, ImageFormat::pgm8);
    save_image(y, r.raw_path, ImageFormat::raw_f32, {{"alpha", alpha}, {"clipped_count", r.clipped}});
    return r;
}

std::vector<fs::path> render_gallery(const Grid2& x, const Grid2& e_max, const Grid2& e_min, const fs::path& dir) {
    std::vector<fs::path> out;
    const std::pair<const char*, std::pair<const Grid2*, double>> items[] = {
        {"max", {&e_max, kGalleryAlphaMax}}, {"min", {&e_min, kGalleryAlphaMin}}};
    for (const auto& [name, item] : items) {
        const auto& [vec, alpha] = item;
        Grid2 iso(x.height(), x.width(), 0.5);
        axpy(alpha, vec->values(), iso.values());
        const fs::path iso_path = dir / (std::string("isolated_") + name + ".pgm");
        save_image(iso, iso_path, ImageFormat::pgm8);
        out.push_back(iso_path);
        const RenderResult r = render_distorted(x, *vec, alpha, dir, std::string("superimposed_") + name);
        out.push_back(r.clipped_path);
        out.push_back(r.raw_path);
    }
    return out;
}

Manifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    Manifest m;
    bool polarity_seen = false, header_seen = false;
    std::map<std::pair<std::string, std::string>, std::size_t> seen;
    std::map<std::string, Grid2> cache;
    auto image = [&](const std::string& rel, std::size_t line) -> const Grid2& {
        auto it = cache.find(rel);
        if (it != cache.end()) return it->second;
        try {
            return cache.emplace(rel, load_image(path.parent_path() / rel)).first->second;
        } catch (const ParseError& e) {
            throw ParseError(line_prefix(path, line) + e.what());
        } catch (const IoError& e) {
            throw IoError(line_prefix(path, line) + e.what());
        }
    };
    std::string raw;
    std::size_t line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty()) continue;
        if (s[0] == '#') {
            if (s.rfind("#polarity=", 0) == 0) {
                if (polarity_seen) throw ParseError(line_prefix(path, line) + "second polarity line");
                if (header_seen) throw ParseError(line_prefix(path, line) + "polarity line must precede the header");
                const std::string v = s.substr(10);
                if (v == "quality") {
                    m.polarity = Polarity::quality;
                } else if (v == "distortion") {
                    m.polarity = Polarity::distortion;
                } else {
                    throw ParseError(line_prefix(path, line) + "polarity must be quality or distortion");
                }
                polarity_seen = true;
            }
            continue;
        }
        if (!header_seen) {
            if (s != "ref,dist,score") throw ParseError(line_prefix(path, line) + "expected header 'ref,dist,score'");
            header_seen = true;
            continue;
        }
        std::vector<std::string> fields;
        std::stringstream ss(s);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(trim(f));
        if (!s.empty() && s.back() == ',') fields.emplace_back();
        if (fields.size() != 3) throw ParseError(line_prefix(path, line) + "expected 3 fields");
        if (fields[0].empty() || fields[1].empty()) throw ParseError(line_prefix(path, line) + "empty path");
        char* end = nullptr;
        const double score = std::strtod(fields[2].c_str(), &end);
        if (fields[2].empty() || end != fields[2].c_str() + fields[2].size()) {
            throw ParseError(line_prefix(path, line) + "score is not a number");
        }
        if (!std::isfinite(score)) throw ParseError(line_prefix(path, line) + "non-finite score");
        const auto key = std::make_pair(fields[0], fields[1]);
        if (auto it = seen.find(key); it != seen.end()) {
            throw ParseError(line_prefix(path, line) + "duplicate pair (" + fields[0] + ", " + fields[1] +
                             ") first seen on line " + std::to_string(it->second));
        }
        seen.emplace(key, line);
        DatasetRecord rec{image(fields[0], line), image(fields[1], line),
                          m.polarity == Polarity::quality ? -score : score};
        if (rec.reference.height() != rec.distorted.height() || rec.reference.width() != rec.distorted.width()) {
            throw ShapeError(line_prefix(path, line) + "reference and distorted sizes differ");
        }
        m.ref_paths.push_back(fields[0]);
        m.dist_paths.push_back(fields[1]);
        m.records.push_back(std::move(rec));
    }
    if (!header_seen) throw ParseError(path.filename().string() + ": missing header 'ref,dist,score'");
    return m;
}

void save_manifest(const fs::path& path, const Manifest& manifest) {
    if (manifest.ref_paths.size() != manifest.records.size() || manifest.dist_paths.size() != manifest.records.size()) {
        throw ShapeError("manifest paths and records differ in length");
    }
    std::string out = manifest.polarity == Polarity::quality ? "#polarity=quality\n" : "#polarity=distortion\n";
    out += "ref,dist,score\n";
    char buf[64];
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const double s = manifest.polarity == Polarity::quality ? -manifest.records[i].score : manifest.records[i].score;
        std::snprintf(buf, sizeof buf, "%.17g", s);
        out += manifest.ref_paths[i] + "," + manifest.dist_paths[i] + "," + buf + "\n";
    }
    write_bytes(path, out);
}

json params_to_json(const ZooModel& model) {
    json j = {{"model_type", to_string(model.type())}, {"version", kParamsVersion}, {"theta", model.theta()}};
    if (model.type() == ModelType::cnn) j["norm_divisors"] = model.norm_divisors();
    return j;
}

ParamsFile params_from_json(const json& j) {
    ParamsFile p;
    try {
        p.type = parse_model_type(j.at("model_type").get<std::string>());
        p.version = j.at("version").get<int>();
        p.theta = j.at("theta").get<std::vector<double>>();
        if (j.contains("norm_divisors")) p.norm_divisors = j.at("norm_divisors").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("params: ") + e.what());
    }
    if (p.version != kParamsVersion) throw ParseError("params: unsupported version " + std::to_string(p.version));
    if (p.theta.size() != theta_size(p.type)) {
        throw ParseError("params: theta has " + std::to_string(p.theta.size()) + " entries, " + to_string(p.type) +
                         " needs " + std::to_string(theta_size(p.type)));
    }
    if (p.type != ModelType::cnn && !p.norm_divisors.empty()) throw ParseError("params: norm_divisors only apply to cnn");
    if (p.type == ModelType::cnn && !p.norm_divisors.empty() && p.norm_divisors.size() != kCnnLayers) {
        throw ParseError("params: cnn needs " + std::to_string(kCnnLayers) + " norm_divisors");
    }
    return p;
}

ParamsFile load_params(const fs::path& path) { return params_from_json(read_json(path)); }

void save_params(const fs::path& path, const ZooModel& model) { write_json(path, params_to_json(model)); }

ZooModel model_for(ModelType type, std::size_t height, std::size_t width, const ParamsFile* params) {
    if (params == nullptr) return ZooModel::make_default(type, height, width);
    if (params->type != type) {
        throw ParseError("params file holds a " + to_string(params->type) + " model, expected " + to_string(type));
    }
    return ZooModel(type, height, width, params->theta, params->norm_divisors);
}

json json_number(double v) {
    if (std::isfinite(v)) return v;
    if (std::isnan(v)) return "nan";
    return v > 0 ? "inf" : "-inf";
}

std::string config_hash(const json& config) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : config.dump()) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void add_provenance(json& j, std::uint64_t seed, const json& config) {
    j["tool_version"] = kToolVersion;
    j["seed"] = seed;
    j["config_hash"] = config_hash(config);
}

json eigen_result_to_json(const EigenResult& r) {
    const auto ratio = predicted_log_threshold_ratio(r);
    return {{"lambda_max", json_number(r.lambda_max)},
            {"lambda_min", json_number(r.lambda_min)},
            {"iterations", {{"max", r.iterations_max}, {"min", r.iterations_min}}},
            {"residuals", {{"max", json_number(r.residual_max)}, {"min", json_number(r.residual_min)}}},
            {"converged", {{"max", r.converged_max}, {"min", r.converged_min}}},
            {"flags",
             {{"rank_deficient", r.rank_deficient},
              {"degenerate_spectrum", r.degenerate_spectrum},
              {"multiplicity_warning", r.multiplicity_warning}}},
            {"rayleigh_min", json_number(r.rayleigh_min)},
            {"lambda_min_uncertainty", json_number(r.lambda_min_uncertainty)},
            {"predicted_log_threshold_ratio", ratio ? json_number(*ratio) : json("inf")},
            {"tol", r.tol},
            {"max_iters", r.max_iters},
            {"seed", r.seed}};
}

void write_json(const fs::path& path, const json& j) { write_bytes(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
    const std::vector<unsigned char> b = read_bytes(path);
    try {
        return json::parse(b.begin(), b.end());
    } catch (const json::parse_error& e) {
        throw ParseError(path.filename().string() + ": byte " + std::to_string(e.byte) + ": invalid JSON");
    }
}

}  // namespace eigdist
