#include "gcp/imaging.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "gcp/error.hpp"

namespace gcp {

namespace {

// Non-owning OpenCV header over a raster.
template <typename T, int C>
cv::Mat view(const Raster<T, C>& r) {
    static_assert(std::is_same_v<T, std::uint8_t>);
    return cv::Mat(r.height(), r.width(), CV_8UC(C), const_cast<T*>(r.data()));
}

RgbImage from_bgr(const cv::Mat& bgr) {
    RgbImage out(bgr.cols, bgr.rows);
    cv::Mat dst = view(out);
    cv::cvtColor(bgr, dst, cv::COLOR_BGR2RGB);
    return out;
}

cv::Mat to_bgr(const RgbImage& image) {
    cv::Mat bgr;
    cv::cvtColor(view(image), bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

const std::vector<int> kPngParams = {cv::IMWRITE_PNG_COMPRESSION, 6};

void write_mat(const std::filesystem::path& path, const cv::Mat& mat) {
    bool ok = false;
    try {
        ok = cv::imwrite(path.string(), mat, kPngParams);
    } catch (const cv::Exception& e) {
        throw IoError("cannot write " + path.string() + ": " + e.what());
    }
    if (!ok)
        throw IoError("cannot write " + path.string());
}

std::vector<std::uint8_t> encode_mat(const cv::Mat& mat) {
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".png", mat, bytes, kPngParams))
        throw IoError("PNG encoding failed");
    return bytes;
}

} // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty())
        throw IoError("cannot read image " + path.string());
    return from_bgr(bgr);
}

GrayImage read_gray(const std::filesystem::path& path) {
    cv::Mat gray = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (gray.empty())
        throw IoError("cannot read image " + path.string());
    GrayImage out(gray.cols, gray.rows);
    gray.copyTo(view(out));
    return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) { write_mat(path, to_bgr(image)); }

void write_png(const std::filesystem::path& path, const GrayImage& image) { write_mat(path, view(image)); }

std::vector<std::uint8_t> encode_png(const RgbImage& image) { return encode_mat(to_bgr(image)); }

std::vector<std::uint8_t> encode_png(const GrayImage& image) { return encode_mat(view(image)); }

RgbImage decode_rgb(std::span<const std::uint8_t> bytes) {
    cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
    cv::Mat bgr = cv::imdecode(buf, cv::IMREAD_COLOR);
    if (bgr.empty())
        throw IoError("cannot decode image bytes");
    return from_bgr(bgr);
}

RgbImage resize_bilinear(const RgbImage& image, Size size) {
    RgbImage out(size);
    cv::Mat dst = view(out);
    cv::resize(view(image), dst, cv::Size(size.width, size.height), 0, 0, cv::INTER_LINEAR);
    return out;
}

BinaryMask resize_nearest(const BinaryMask& mask, Size size) {
    // Integer nearest neighbour: dst (x, y) samples src (x * w / W, y * h / H).
    BinaryMask out(size);
    for (int y = 0; y < size.height; ++y) {
        const int sy = static_cast<int>(static_cast<long long>(y) * mask.height() / size.height);
        for (int x = 0; x < size.width; ++x) {
            const int sx = static_cast<int>(static_cast<long long>(x) * mask.width() / size.width);
            out.set(x, y, mask.at(sx, sy));
        }
    }
    return out;
}

} // namespace gcp
