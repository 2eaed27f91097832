#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace lmatch {

// Multi-channel raster, channel-planar, row-major within a plane.
class Image {
public:
    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f);
    Image(int width, int height, int channels, std::vector<float> data);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }
    bool empty() const { return data_.empty(); }

    float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
    float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

    std::span<float> plane(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
    std::span<const float> plane(int c) const { return {data_.data() + c * plane_size(), plane_size()}; }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    bool operator==(const Image&) const = default;

private:
    std::size_t index(int c, int y, int x) const
    {
        return (static_cast<std::size_t>(c) * height_ + y) * width_ + x;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 0;
    std::vector<float> data_;
};

struct PixelCoord {
    int x = 0;
    int y = 0;
    bool operator==(const PixelCoord&) const = default;
};

// Axis-aligned rectangle placed relative to an anchor pixel: the top-left
// corner sits at anchor + (dx, dy).
struct Rectangle {
    int dx = 0;
    int dy = 0;
    int w = 1;
    int h = 1;
    bool empty() const { return w <= 0 || h <= 0; }
    bool operator==(const Rectangle&) const = default;
};

// Half-open rectangle in cell coordinates of an IntegralGrid.
struct CellRect {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
    bool empty() const { return x1 <= x0 || y1 <= y0; }
};

// Mirror index into [0, n) without repeating the edge sample (…2 1 0 1 2…).
int reflect_index(int i, int n);

// Cumulative-sum form of a multi-channel raster, optionally sub-sampled by an
// integer factor k. Pixels are accumulated into k x k cells; trailing pixels
// that do not fill a whole cell are merged into the last cell of that row or
// column, so every source pixel contributes exactly once.
class IntegralGrid {
public:
    IntegralGrid() = default;

    static IntegralGrid build(const Image& src, int factor = 1);

    int factor() const { return factor_; }
    int channels() const { return channels_; }
    int cells_x() const { return cells_x_; }
    int cells_y() const { return cells_y_; }
    int source_width() const { return width_; }
    int source_height() const { return height_; }

    // Sum of channel c over the (already clipped) cell rectangle.
    double sum(int c, const CellRect& r) const
    {
        if (r.empty()) return 0.0;
        const std::size_t stride = static_cast<std::size_t>(cells_x_) + 1;
        const double* p = sums_.data() + static_cast<std::size_t>(c) * stride * (cells_y_ + 1);
        return p[r.y1 * stride + r.x1] - p[r.y0 * stride + r.x1] - p[r.y1 * stride + r.x0] +
               p[r.y0 * stride + r.x0];
    }

    // Snaps a rectangle placed at anchor to the cell lattice and clips it to
    // the grid. For k > 1 the absolute top-left corner and the size are each
    // rounded to the nearest multiple of k (size at least one cell).
    CellRect snap(PixelCoord anchor, const Rectangle& r) const;

    // Number of source pixels covered by a clipped cell rectangle.
    long pixel_area(const CellRect& r) const;

    // Pixel-space rectangle (relative to anchor) covered by a cell rectangle.
    Rectangle to_pixels(PixelCoord anchor, const CellRect& r) const;

private:
    int pixel_begin_x(int cx) const { return cx * factor_; }
    int pixel_end_x(int cx) const { return cx >= cells_x_ ? width_ : cx * factor_; }
    int pixel_begin_y(int cy) const { return cy * factor_; }
    int pixel_end_y(int cy) const { return cy >= cells_y_ ? height_ : cy * factor_; }

    int factor_ = 1;
    int channels_ = 0;
    int width_ = 0;
    int height_ = 0;
    int cells_x_ = 0;
    int cells_y_ = 0;
    std::vector<double> sums_;
};

inline IntegralGrid build_integral(const Image& src, int factor) { return IntegralGrid::build(src, factor); }

struct RectSum {
    std::vector<double> sums; // one per channel
    Rectangle used;           // clipped/snapped rectangle relative to anchor; empty if nothing left
    long area = 0;            // covered source pixels
};

// Per-channel sum over the intersection of the placed rectangle with the
// image (snapped to the cell grid for sub-sampled grids).
RectSum rect_sum(const IntegralGrid& g, PixelCoord anchor, const Rectangle& r);

// sRGB in [0,1] to CIE L*a*b* (D65 white).
Image to_cielab(const Image& rgb);

} // namespace lmatch
