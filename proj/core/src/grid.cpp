#include "lmatch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmatch/error.hpp"

namespace lmatch {

Image::Image(int width, int height, int channels, float fill)
    : width_(width), height_(height), channels_(channels),
      data_(static_cast<std::size_t>(width) * height * channels, fill)
{
    if (width < 0 || height < 0 || channels < 0) throw ShapeError("negative image dimensions");
}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data))
{
    if (data_.size() != static_cast<std::size_t>(width) * height * channels)
        throw ShapeError("image data length " + std::to_string(data_.size()) + " does not match " +
                         std::to_string(width) + "x" + std::to_string(height) + "x" +
                         std::to_string(channels));
}

int reflect_index(int i, int n)
{
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

namespace {

int floor_div(int a, int b)
{
    int q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

// Nearest multiple of k, expressed in units of k; halves round up.
int round_to_cells(int v, int k) { return floor_div(2 * v + k, 2 * k); }

} // namespace

IntegralGrid IntegralGrid::build(const Image& src, int factor)
{
    if (factor < 1) throw ParameterError("integral grid factor must be >= 1, got " + std::to_string(factor));
    IntegralGrid g;
    g.factor_ = factor;
    g.channels_ = src.channels();
    g.width_ = src.width();
    g.height_ = src.height();
    g.cells_x_ = src.width() == 0 ? 0 : std::max(1, src.width() / factor);
    g.cells_y_ = src.height() == 0 ? 0 : std::max(1, src.height() / factor);

    const std::size_t stride = static_cast<std::size_t>(g.cells_x_) + 1;
    const std::size_t plane = stride * (g.cells_y_ + 1);
    g.sums_.assign(plane * g.channels_, 0.0);

    std::vector<int> cell_of_x(g.width_), cell_of_y(g.height_);
    for (int x = 0; x < g.width_; ++x) cell_of_x[x] = std::min(x / factor, g.cells_x_ - 1);
    for (int y = 0; y < g.height_; ++y) cell_of_y[y] = std::min(y / factor, g.cells_y_ - 1);

    for (int c = 0; c < g.channels_; ++c) {
        double* p = g.sums_.data() + c * plane;
        // Accumulate cell totals at (cy+1, cx+1), then prefix-sum in place.
        for (int y = 0; y < g.height_; ++y) {
            double* row = p + (cell_of_y[y] + 1) * stride;
            for (int x = 0; x < g.width_; ++x) row[cell_of_x[x] + 1] += src.at(c, y, x);
        }
        for (int cy = 1; cy <= g.cells_y_; ++cy) {
            double run = 0.0;
            for (int cx = 1; cx <= g.cells_x_; ++cx) {
                run += p[cy * stride + cx];
                p[cy * stride + cx] = run + p[(cy - 1) * stride + cx];
            }
        }
    }
    return g;
}

CellRect IntegralGrid::snap(PixelCoord anchor, const Rectangle& r) const
{
    CellRect out;
    if (r.empty()) return out;
    if (factor_ == 1) {
        out.x0 = anchor.x + r.dx;
        out.y0 = anchor.y + r.dy;
        out.x1 = out.x0 + r.w;
        out.y1 = out.y0 + r.h;
    } else {
        out.x0 = round_to_cells(anchor.x + r.dx, factor_);
        out.y0 = round_to_cells(anchor.y + r.dy, factor_);
        out.x1 = out.x0 + std::max(1, round_to_cells(r.w, factor_));
        out.y1 = out.y0 + std::max(1, round_to_cells(r.h, factor_));
    }
    out.x0 = std::clamp(out.x0, 0, cells_x_);
    out.x1 = std::clamp(out.x1, 0, cells_x_);
    out.y0 = std::clamp(out.y0, 0, cells_y_);
    out.y1 = std::clamp(out.y1, 0, cells_y_);
    return out;
}

long IntegralGrid::pixel_area(const CellRect& r) const
{
    if (r.empty()) return 0;
    return static_cast<long>(pixel_end_x(r.x1) - pixel_begin_x(r.x0)) *
           (pixel_end_y(r.y1) - pixel_begin_y(r.y0));
}

Rectangle IntegralGrid::to_pixels(PixelCoord anchor, const CellRect& r) const
{
    if (r.empty()) return {0, 0, 0, 0};
    const int x0 = pixel_begin_x(r.x0);
    const int y0 = pixel_begin_y(r.y0);
    return {x0 - anchor.x, y0 - anchor.y, pixel_end_x(r.x1) - x0, pixel_end_y(r.y1) - y0};
}

RectSum rect_sum(const IntegralGrid& g, PixelCoord anchor, const Rectangle& r)
{
    RectSum out;
    out.sums.assign(g.channels(), 0.0);
    const CellRect cr = g.snap(anchor, r);
    out.used = g.to_pixels(anchor, cr);
    if (cr.empty()) return out;
    out.area = g.pixel_area(cr);
    for (int c = 0; c < g.channels(); ++c) out.sums[c] = g.sum(c, cr);
    return out;
}

namespace {

double srgb_to_linear(double v)
{
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double lab_f(double t)
{
    constexpr double eps = 216.0 / 24389.0;
    constexpr double kappa = 24389.0 / 27.0;
    return t > eps ? std::cbrt(t) : (kappa * t + 16.0) / 116.0;
}

} // namespace

Image to_cielab(const Image& rgb)
{
    if (rgb.channels() != 3)
        throw ShapeError("to_cielab expects 3 channels, got " + std::to_string(rgb.channels()));
    // D65 reference white.
    constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
    Image lab(rgb.width(), rgb.height(), 3);
    const auto r = rgb.plane(0), g = rgb.plane(1), b = rgb.plane(2);
    auto L = lab.plane(0), A = lab.plane(1), B = lab.plane(2);
    for (std::size_t i = 0; i < rgb.plane_size(); ++i) {
        const double rl = srgb_to_linear(r[i]);
        const double gl = srgb_to_linear(g[i]);
        const double bl = srgb_to_linear(b[i]);
        const double X = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl;
        const double Y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl;
        const double Z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl;
        const double fx = lab_f(X / xn), fy = lab_f(Y / yn), fz = lab_f(Z / zn);
        L[i] = static_cast<float>(116.0 * fy - 16.0);
        A[i] = static_cast<float>(500.0 * (fx - fy));
        B[i] = static_cast<float>(200.0 * (fy - fz));
    }
    return lab;
}

} // namespace lmatch
