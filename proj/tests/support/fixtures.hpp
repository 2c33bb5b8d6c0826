#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gcp/raster.hpp"

namespace gcp::fixtures {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "gcp");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

enum class Shape { disc, square, diamond, ellipse, triangle };

BinaryMask shape_mask(Shape shape, Size size, int cx, int cy, int radius);

/// Thick straight segment from (x0, y0) to (x1, y1).
BinaryMask segment_mask(Size size, double x0, double y0, double x1, double y1, double half_width);

/// Deterministic noisy image so that any changed pixel is detectable.
RgbImage textured_image(Size size, std::uint64_t seed, std::uint8_t r, std::uint8_t g, std::uint8_t b);

struct CorpusSpec {
    int canvases = 50;
    int groups = 5;
    Size size{224, 224};
    std::uint64_t seed = 7;
};

/// Small compact objects near the corners, far from the frame: synthesis
/// passes QC on the first try nearly always.
std::filesystem::path write_benign_corpus(const std::filesystem::path& dir, const CorpusSpec& spec = {});

/// Long thin bars crossing most of the frame: nearly any paste occludes
/// them, so QC retries and rejections are common.
std::filesystem::path write_slender_corpus(const std::filesystem::path& dir, const CorpusSpec& spec = {});

/// 8 groups of 30 small samples.
std::filesystem::path write_msrc_like(const std::filesystem::path& dir);

std::vector<std::string> group_names(int groups);

} // namespace gcp::fixtures
