#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace gcp {

struct Size {
    int width = 0;
    int height = 0;

    [[nodiscard]] std::size_t area() const { return static_cast<std::size_t>(width) * height; }
    friend bool operator==(const Size&, const Size&) = default;
};

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
    friend auto operator<=>(const Point&, const Point&) = default;
};

/// Dense row-major raster with interleaved channels and value semantics.
template <typename T, int Channels>
class Raster {
public:
    static_assert(Channels >= 1);
    using value_type = T;
    static constexpr int channels = Channels;

    Raster() = default;
    Raster(int width, int height, T fill = T{})
        : size_{width, height}, data_(checked_count(width, height), fill) {}
    explicit Raster(Size size, T fill = T{}) : Raster(size.width, size.height, fill) {}

    [[nodiscard]] int width() const { return size_.width; }
    [[nodiscard]] int height() const { return size_.height; }
    [[nodiscard]] Size size() const { return size_; }
    [[nodiscard]] bool empty() const { return data_.empty(); }
    [[nodiscard]] bool contains(int x, int y) const {
        return x >= 0 && y >= 0 && x < size_.width && y < size_.height;
    }

    T& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

    [[nodiscard]] std::span<T> row(int y) {
        return {data_.data() + static_cast<std::size_t>(y) * size_.width * Channels,
                static_cast<std::size_t>(size_.width) * Channels};
    }
    [[nodiscard]] std::span<const T> row(int y) const {
        return {data_.data() + static_cast<std::size_t>(y) * size_.width * Channels,
                static_cast<std::size_t>(size_.width) * Channels};
    }

    [[nodiscard]] std::span<T> pixels() { return data_; }
    [[nodiscard]] std::span<const T> pixels() const { return data_; }
    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    static std::size_t checked_count(int width, int height) {
        if (width < 0 || height < 0)
            throw std::invalid_argument("raster dimensions must be non-negative");
        return static_cast<std::size_t>(width) * height * Channels;
    }
    [[nodiscard]] std::size_t index(int x, int y, int c) const {
        return (static_cast<std::size_t>(y) * size_.width + x) * Channels + c;
    }

    Size size_{};
    std::vector<T> data_;
};

using RgbImage = Raster<std::uint8_t, 3>;
using GrayImage = Raster<std::uint8_t, 1>;
using RealImage = Raster<double, 1>;

/// Hard 0/1 mask. Kept distinct from GrayImage so an 8-bit map is never
/// silently treated as already binarized.
class BinaryMask {
public:
    static constexpr std::uint8_t kThreshold = 128;

    BinaryMask() = default;
    BinaryMask(int width, int height, bool fill = false) : bits_(width, height, fill ? 1 : 0) {}
    explicit BinaryMask(Size size, bool fill = false) : BinaryMask(size.width, size.height, fill) {}

    /// Foreground iff gray >= threshold.
    static BinaryMask from_gray(const GrayImage& gray, std::uint8_t threshold = kThreshold);

    [[nodiscard]] int width() const { return bits_.width(); }
    [[nodiscard]] int height() const { return bits_.height(); }
    [[nodiscard]] Size size() const { return bits_.size(); }
    [[nodiscard]] bool contains(int x, int y) const { return bits_.contains(x, y); }

    [[nodiscard]] bool at(int x, int y) const { return bits_.at(x, y) != 0; }
    void set(int x, int y, bool value = true) { bits_.at(x, y) = value ? 1 : 0; }
    /// Out-of-frame pixels read as background.
    [[nodiscard]] bool at_or_background(int x, int y) const { return contains(x, y) && at(x, y); }

    [[nodiscard]] std::size_t count() const;
    [[nodiscard]] bool any() const;
    [[nodiscard]] double fraction() const;

    /// {0, 255} grayscale rendering.
    [[nodiscard]] GrayImage to_gray() const;

    [[nodiscard]] std::span<const std::uint8_t> bits() const { return bits_.pixels(); }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

private:
    Raster<std::uint8_t, 1> bits_;
};

BinaryMask operator&(const BinaryMask& a, const BinaryMask& b);
BinaryMask operator~(const BinaryMask& m);
BinaryMask and_not(const BinaryMask& a, const BinaryMask& b);
std::size_t intersection_count(const BinaryMask& a, const BinaryMask& b);

template <typename T, int C>
Raster<T, C> flip_horizontal(const Raster<T, C>& in) {
    Raster<T, C> out(in.size());
    for (int y = 0; y < in.height(); ++y)
        for (int x = 0; x < in.width(); ++x)
            for (int c = 0; c < C; ++c)
                out.at(in.width() - 1 - x, y, c) = in.at(x, y, c);
    return out;
}

BinaryMask flip_horizontal(const BinaryMask& in);

} // namespace gcp
