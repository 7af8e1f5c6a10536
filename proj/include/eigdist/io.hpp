#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "eigdist/fisher.hpp"
#include "eigdist/trainer.hpp"
#include "eigdist/zoo.hpp"

namespace eigdist {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kParamsVersion = 1;

enum class ImageFormat { pgm8, pgm16, raw_f32 };

ImageFormat parse_image_format(const std::string& name);
std::string to_string(ImageFormat format);

/// Loads a PGM (P5, maxval 255 or 65535) or a RAW-F32 grid. RAW-F32 is
/// recognized by its `<path>.json` sidecar. PGM values map to v / maxval.
Grid2 load_image(const std::filesystem::path& path);

struct SaveReport {
    /// Pixels outside [0, 1] before clipping (PGM only).
    std::size_t clipped = 0;
};

/// PGM: clip to [0, 1], scale by maxval, round half to even; 16-bit samples
/// are big-endian. RAW-F32: little-endian float32 plus a JSON sidecar that
/// also carries `metadata` when given.
SaveReport save_image(const Grid2& grid, const std::filesystem::path& path, ImageFormat format,
                      const nlohmann::json& metadata = nlohmann::json::object());

/// Sidecar path of a RAW-F32 file.
std::filesystem::path sidecar_path(const std::filesystem::path& raw);

/// Number of entries of x + alpha e outside [0, 1].
std::size_t count_out_of_range(const Grid2& grid);

struct RenderResult {
    std::filesystem::path clipped_path;  // PGM, presentation
    std::filesystem::path raw_path;      // RAW-F32, unclipped
    std::size_t clipped = 0;
};

/// Writes x + alpha e clipped to [0, 1] as `<stem>.pgm` and unclipped as
/// `<stem>.raw`; the clipping count is stored in the raw sidecar.
RenderResult render_distorted(const Grid2& x, const Grid2& e, double alpha, const std::filesystem::path& dir,
                              const std::string& stem);

inline constexpr double kGalleryAlphaMax = 4.0;
inline constexpr double kGalleryAlphaMin = 30.0;

/// Six images per base image: for each of (e_max, 4) and (e_min, 30) the
/// isolated distortion 0.5 + alpha e, the superimposed x + alpha e (both
/// 8-bit PGM, clipped) and the unclipped raw x + alpha e. Returns the image
/// paths; raw sidecars are written alongside.
std::vector<std::filesystem::path> render_gallery(const Grid2& x, const Grid2& e_max, const Grid2& e_min,
                                                  const std::filesystem::path& dir);

enum class Polarity { distortion, quality };

struct Manifest {
    Polarity polarity = Polarity::distortion;
    std::vector<std::string> ref_paths;
    std::vector<std::string> dist_paths;
    /// Scores canonicalized so that larger means more distorted.
    std::vector<DatasetRecord> records;
};

/// CSV with header `ref,dist,score`, paths relative to the manifest file, and
/// an optional `#polarity=quality|distortion` line. Quality scores are
/// negated. Duplicate (ref, dist) pairs and non-finite scores are rejected
/// with their line number.
Manifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const Manifest& manifest);

struct ParamsFile {
    ModelType type = ModelType::mse;
    int version = kParamsVersion;
    std::vector<double> theta;
    std::vector<double> norm_divisors;
};

nlohmann::json params_to_json(const ZooModel& model);
ParamsFile params_from_json(const nlohmann::json& j);
ParamsFile load_params(const std::filesystem::path& path);
void save_params(const std::filesystem::path& path, const ZooModel& model);
/// Model of `type` for an image size: parameters from `params` when given,
/// otherwise the fixture defaults. Throws ParseError on a type mismatch.
ZooModel model_for(ModelType type, std::size_t height, std::size_t width, const ParamsFile* params);

/// Finite numbers as JSON numbers; infinities and NaN as "inf", "-inf", "nan".
nlohmann::json json_number(double v);

/// 64-bit FNV-1a of the compact JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// {tool_version, seed, config_hash} merged into `j`.
void add_provenance(nlohmann::json& j, std::uint64_t seed, const nlohmann::json& config);

nlohmann::json eigen_result_to_json(const EigenResult& r);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace eigdist
