#include "gcp/raster.hpp"

#include <algorithm>
#include <stdexcept>

namespace gcp {

BinaryMask BinaryMask::from_gray(const GrayImage& gray, std::uint8_t threshold) {
    BinaryMask mask(gray.size());
    auto src = gray.pixels();
    std::transform(src.begin(), src.end(), mask.bits_.pixels().begin(),
                   [threshold](std::uint8_t v) -> std::uint8_t { return v >= threshold ? 1 : 0; });
    return mask;
}

std::size_t BinaryMask::count() const {
    auto b = bits_.pixels();
    return static_cast<std::size_t>(std::count(b.begin(), b.end(), std::uint8_t{1}));
}

bool BinaryMask::any() const {
    auto b = bits_.pixels();
    return std::find(b.begin(), b.end(), std::uint8_t{1}) != b.end();
}

double BinaryMask::fraction() const {
    const auto n = size().area();
    return n == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(n);
}

GrayImage BinaryMask::to_gray() const {
    GrayImage gray(size());
    auto b = bits_.pixels();
    std::transform(b.begin(), b.end(), gray.pixels().begin(),
                   [](std::uint8_t v) -> std::uint8_t { return v ? 255 : 0; });
    return gray;
}

namespace {

void require_same_size(const BinaryMask& a, const BinaryMask& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("mask dimensions differ");
}

template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
    require_same_size(a, b);
    BinaryMask out(a.size());
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x)
            out.set(x, y, op(a.at(x, y), b.at(x, y)));
    return out;
}

} // namespace

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, [](bool p, bool q) { return p && q; });
}

BinaryMask and_not(const BinaryMask& a, const BinaryMask& b) {
    return combine(a, b, [](bool p, bool q) { return p && !q; });
}

BinaryMask operator~(const BinaryMask& m) {
    BinaryMask out(m.size());
    for (int y = 0; y < m.height(); ++y)
        for (int x = 0; x < m.width(); ++x)
            out.set(x, y, !m.at(x, y));
    return out;
}

std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b) {
    require_same_size(a, b);
    auto pa = a.bits();
    auto pb = b.bits();
    std::size_t n = 0;
    for (std::size_t i = 0; i < pa.size(); ++i)
        n += static_cast<std::size_t>(pa[i] & pb[i]);
    return n;
}

BinaryMask flip_horizontal(const BinaryMask& in) {
    BinaryMask out(in.size());
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x)
            out.set(in.width() - 1 - x, y, in.at(x, y));
    return out;
}

} // namespace gcp
