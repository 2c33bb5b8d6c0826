#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>
#include <unistd.h>

#include "gcp/imaging.hpp"

namespace fs = std::filesystem;

namespace gcp::fixtures {

TempDir::TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

BinaryMask shape_mask(Shape shape, Size size, int cx, int cy, int r) {
    BinaryMask m(size);
    for (int y = 0; y < size.height; ++y)
        for (int x = 0; x < size.width; ++x) {
            const int dx = x - cx, dy = y - cy;
            bool in = false;
            switch (shape) {
            case Shape::disc: in = dx * dx + dy * dy <= r * r; break;
            case Shape::square: in = std::abs(dx) <= r * 3 / 4 && std::abs(dy) <= r * 3 / 4; break;
            case Shape::diamond: in = std::abs(dx) + std::abs(dy) <= r; break;
            case Shape::ellipse: in = dx * dx * 4 + dy * dy * 16 <= 4 * r * r; break;
            case Shape::triangle: in = dy <= r / 2 && dy >= -r && 2 * std::abs(dx) <= dy + r; break;
            }
            m.set(x, y, in);
        }
    return m;
}

BinaryMask segment_mask(Size size, double x0, double y0, double x1, double y1, double half_width) {
    BinaryMask m(size);
    const double vx = x1 - x0, vy = y1 - y0;
    const double len2 = vx * vx + vy * vy;
    for (int y = 0; y < size.height; ++y)
        for (int x = 0; x < size.width; ++x) {
            const double t = std::clamp(((x - x0) * vx + (y - y0) * vy) / len2, 0.0, 1.0);
            const double px = x0 + t * vx - x, py = y0 + t * vy - y;
            m.set(x, y, px * px + py * py <= half_width * half_width);
        }
    return m;
}

RgbImage textured_image(Size size, std::uint64_t seed, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::mt19937_64 gen(seed);
    RgbImage img(size);
    for (int y = 0; y < size.height; ++y)
        for (int x = 0; x < size.width; ++x) {
            const int noise = static_cast<int>(gen() % 64) - 32;
            const std::uint8_t base[3] = {r, g, b};
            for (int c = 0; c < 3; ++c)
                img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(base[c] + noise, 0, 255));
        }
    return img;
}

std::vector<std::string> group_names(int groups) {
    static const char* names[] = {"apple", "bear", "car", "duck", "eagle", "fern", "guitar", "horse",
                                  "iris", "jeep", "kite", "lamp"};
    std::vector<std::string> out;
    for (int g = 0; g < groups; ++g)
        out.push_back(g < 12 ? names[g] : "group" + std::to_string(g));
    return out;
}

namespace {

struct Writer {
    fs::path dir;
    std::ofstream manifest;

    explicit Writer(const fs::path& d, const std::string& name) : dir(d) {
        fs::create_directories(dir / "images");
        fs::create_directories(dir / "masks");
        manifest.open(dir / name, std::ios::trunc);
    }

    void add(const std::string& id, const std::string& label, const RgbImage& image, const BinaryMask& mask) {
        write_png(dir / "images" / (id + ".png"), image);
        write_png(dir / "masks" / (id + ".png"), mask.to_gray());
        manifest << nlohmann::json{{"id", id},
                                   {"image_path", "images/" + id + ".png"},
                                   {"mask_path", "masks/" + id + ".png"},
                                   {"label", label}}
                        .dump()
                 << '\n';
    }
};

// Object colour differs from the background so composites are visible.
RgbImage with_object(RgbImage img, const BinaryMask& mask, int g, std::uint64_t seed) {
    const RgbImage obj = textured_image(img.size(), seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint8_t>(40 + 50 * g % 200),
                                        static_cast<std::uint8_t>(220 - 30 * g % 180), 90);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x)
            if (mask.at(x, y))
                for (int c = 0; c < 3; ++c)
                    img.at(x, y, c) = obj.at(x, y, c);
    return img;
}

} // namespace

fs::path write_benign_corpus(const fs::path& dir, const CorpusSpec& spec) {
    Writer w(dir, "manifest.jsonl");
    const auto names = group_names(spec.groups);
    const Size s = spec.size;
    const int margin = std::max(12, s.width / 7);
    for (int i = 0; i < spec.canvases; ++i) {
        const int g = i % spec.groups;
        const int corner = (i / spec.groups) % 4;
        const int cx = corner % 2 == 0 ? margin : s.width - 1 - margin;
        const int cy = corner / 2 == 0 ? margin : s.height - 1 - margin;
        const int r = std::max(6, s.width / 14) + i % 3;
        const auto mask = shape_mask(static_cast<Shape>(g % 5), s, cx, cy, r);
        const std::uint64_t seed = spec.seed * 1000003ULL + static_cast<std::uint64_t>(i);
        auto img = textured_image(s, seed, 120, 130, static_cast<std::uint8_t>(140 + 10 * g));
        const std::string id = names[g] + "_" + std::to_string(i);
        w.add(id, names[g], with_object(std::move(img), mask, g, seed), mask);
    }
    return dir / "manifest.jsonl";
}

fs::path write_slender_corpus(const fs::path& dir, const CorpusSpec& spec) {
    Writer w(dir, "manifest.jsonl");
    const auto names = group_names(spec.groups);
    const double W = spec.size.width, H = spec.size.height;
    const double m = std::max(6.0, W / 12.0);
    for (int i = 0; i < spec.canvases; ++i) {
        const int g = i % spec.groups;
        // Each group gets its own direction; jitter the ends per sample.
        const double j = (i / spec.groups) % 5 * 2.0;
        BinaryMask mask;
        switch (g % 4) {
        case 0: mask = segment_mask(spec.size, m + j, m, W - 1 - m, H - 1 - m - j, 6.0); break;
        case 1: mask = segment_mask(spec.size, W - 1 - m - j, m, m, H - 1 - m - j, 6.0); break;
        case 2: mask = segment_mask(spec.size, m, H / 2 + j, W - 1 - m, H / 2 - j, 6.0); break;
        default: mask = segment_mask(spec.size, W / 2 - j, m, W / 2 + j, H - 1 - m, 6.0); break;
        }
        const std::uint64_t seed = spec.seed * 1000003ULL + 77 + static_cast<std::uint64_t>(i);
        auto img = textured_image(spec.size, seed, 100, 110, 120);
        const std::string id = names[g] + "_" + std::to_string(i);
        w.add(id, names[g], with_object(std::move(img), mask, g, seed), mask);
    }
    return dir / "manifest.jsonl";
}

fs::path write_msrc_like(const fs::path& dir) {
    Writer w(dir, "msrc_like.jsonl");
    const auto names = group_names(8);
    const Size s{32, 32};
    for (int g = 0; g < 8; ++g)
        for (int k = 0; k < 30; ++k) {
            const auto mask = shape_mask(static_cast<Shape>(g % 5), s, 16, 16, 6 + k % 4);
            const auto seed = static_cast<std::uint64_t>(g * 100 + k);
            w.add(names[g] + "_" + std::to_string(k), names[g], with_object(textured_image(s, seed, 90, 90, 90), mask, g, seed),
                  mask);
        }
    return dir / "msrc_like.jsonl";
}

} // namespace gcp::fixtures
