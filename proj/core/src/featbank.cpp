#include "lmatch/featbank.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"

namespace lmatch {

std::string_view to_string(DescriptorKind kind)
{
    switch (kind) {
    case DescriptorKind::FilterBank17: return "filterbank17";
    case DescriptorKind::DenseSift: return "sift";
    case DescriptorKind::Lqtp: return "lqtp";
    case DescriptorKind::SelfSimilarity: return "selfsim";
    }
    return "unknown";
}

DescriptorKind descriptor_kind_from_string(std::string_view name)
{
    for (auto k : {DescriptorKind::FilterBank17, DescriptorKind::DenseSift, DescriptorKind::Lqtp,
                   DescriptorKind::SelfSimilarity})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown descriptor kind '" + std::string(name) + "'");
}

DescriptorField::DescriptorField(int width, int height, int dim, DescriptorKind kind)
    : width_(width), height_(height), dim_(dim), kind_(kind),
      data_(static_cast<std::size_t>(width) * height * dim, 0.0f)
{
}

Image DescriptorField::to_image() const
{
    Image img(width_, height_, dim_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x) {
            const auto v = at(x, y);
            for (int d = 0; d < dim_; ++d) img.at(d, y, x) = v[d];
        }
    return img;
}

int descriptor_dim(DescriptorKind kind, const DescriptorParams& params)
{
    switch (kind) {
    case DescriptorKind::FilterBank17: return 17;
    case DescriptorKind::DenseSift: return 128;
    case DescriptorKind::Lqtp: return 2 * params.lqtp.bins;
    case DescriptorKind::SelfSimilarity:
        return params.self_similarity.radial_bins * params.self_similarity.angular_bins;
    }
    return 0;
}

std::vector<double> gaussian_taps(double sigma)
{
    const int r = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> g(2 * r + 1);
    double z = 0.0;
    for (int k = -r; k <= r; ++k) z += g[k + r] = std::exp(-0.5 * k * k / (sigma * sigma));
    for (auto& v : g) v /= z;
    return g;
}

namespace {

using Plane = std::vector<float>;

enum class Axis { X, Y };

// Generic 1-D filter along one axis with reflective boundaries. The three
// tap families are applied in forms that make their algebraic identities hold
// exactly in floating point: smoothing pairs symmetric samples, first
// derivatives difference antisymmetric pairs, second derivatives difference
// against the centre sample.
enum class TapForm { Symmetric, Antisymmetric, ZeroSum };

Plane filter_axis(const Plane& f, int w, int h, Axis axis, const std::vector<double>& half, TapForm form)
{
    // half[k] is the tap at offset +k (k = 0..r)
    const int r = static_cast<int>(half.size()) - 1;
    Plane out(f.size());
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            auto sample = [&](int k) {
                return axis == Axis::X ? f[static_cast<std::size_t>(y) * w + reflect_index(x + k, w)]
                                       : f[static_cast<std::size_t>(reflect_index(y + k, h)) * w + x];
            };
            const double c = sample(0);
            double acc = 0.0;
            switch (form) {
            case TapForm::Symmetric:
                acc = half[0] * c;
                for (int k = 1; k <= r; ++k) acc += half[k] * (static_cast<double>(sample(-k)) + sample(k));
                break;
            case TapForm::Antisymmetric:
                for (int k = 1; k <= r; ++k) acc += half[k] * (static_cast<double>(sample(k)) - sample(-k));
                break;
            case TapForm::ZeroSum:
                for (int k = 1; k <= r; ++k)
                    acc += half[k] * ((static_cast<double>(sample(k)) - c) + (static_cast<double>(sample(-k)) - c));
                break;
            }
            out[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
        }
    }
    return out;
}

std::vector<double> half_of(const std::vector<double>& full)
{
    const int r = static_cast<int>(full.size() / 2);
    return {full.begin() + r, full.end()};
}

// Taps of d/dx G at offset +k, sign chosen so increasing ramps respond positively.
std::vector<double> derivative_half(double sigma)
{
    auto g = half_of(gaussian_taps(sigma));
    for (std::size_t k = 0; k < g.size(); ++k) g[k] *= static_cast<double>(k) / (sigma * sigma);
    g[0] = 0.0;
    return g;
}

// Taps of d2/dx2 G, corrected to sum to zero by subtracting (sum) * G.
std::vector<double> second_derivative_half(double sigma)
{
    const auto g = half_of(gaussian_taps(sigma));
    std::vector<double> t(g.size());
    const double s4 = sigma * sigma * sigma * sigma;
    double total = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        t[k] = g[k] * (static_cast<double>(k * k) - sigma * sigma) / s4;
        total += (k == 0 ? 1.0 : 2.0) * t[k];
    }
    for (std::size_t k = 0; k < g.size(); ++k) t[k] -= total * g[k];
    return t;
}

Plane to_plane(std::span<const float> s) { return {s.begin(), s.end()}; }

void store(DescriptorField& out, int dim, const Plane& p)
{
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x) out.at(x, y)[dim] = p[static_cast<std::size_t>(y) * out.width() + x];
}

void require_lab(const Image& img)
{
    if (img.channels() != 3)
        throw ShapeError("descriptor input must have 3 (CIELab) channels, got " + std::to_string(img.channels()));
}

DescriptorField dense_sift(const Image& lab, const SiftParams& p)
{
    if (p.patch < 4 || p.patch % 4 != 0) throw ParameterError("SIFT patch must be a positive multiple of 4");
    const int w = lab.width(), h = lab.height();
    const auto L = lab.plane(0);
    std::vector<float> mag(L.size());
    std::vector<std::uint8_t> bin(L.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = static_cast<double>(L[static_cast<std::size_t>(y) * w + reflect_index(x + 1, w)]) -
                              L[static_cast<std::size_t>(y) * w + reflect_index(x - 1, w)];
            const double gy = static_cast<double>(L[static_cast<std::size_t>(reflect_index(y + 1, h)) * w + x]) -
                              L[static_cast<std::size_t>(reflect_index(y - 1, h)) * w + x];
            double theta = std::atan2(gy, gx);
            if (theta < 0) theta += 2.0 * std::numbers::pi;
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            mag[i] = static_cast<float>(std::sqrt(gx * gx + gy * gy));
            bin[i] = static_cast<std::uint8_t>(std::min(7, static_cast<int>(theta * 8.0 / (2.0 * std::numbers::pi))));
        }

    DescriptorField out(w, h, 128, DescriptorKind::DenseSift);
    const int cell = p.patch / 4;
    const int half = p.patch / 2;
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<double> hist(128);
        for (int x = 0; x < w; ++x) {
            std::fill(hist.begin(), hist.end(), 0.0);
            for (int v = 0; v < p.patch; ++v) {
                const int sy = reflect_index(y - half + v, h);
                const int cy = v / cell;
                for (int u = 0; u < p.patch; ++u) {
                    const std::size_t i = static_cast<std::size_t>(sy) * w + reflect_index(x - half + u, w);
                    hist[(cy * 4 + u / cell) * 8 + bin[i]] += mag[i];
                }
            }
            auto normalise = [&] {
                double n = 0.0;
                for (double v : hist) n += v * v;
                n = std::sqrt(n);
                if (n < 1e-12) {
                    std::fill(hist.begin(), hist.end(), 0.0);
                    return false;
                }
                for (double& v : hist) v /= n;
                return true;
            };
            if (normalise()) {
                for (double& v : hist) v = std::min(v, 0.2);
                normalise();
            }
            auto dst = out.at(x, y);
            for (int d = 0; d < 128; ++d) dst[d] = static_cast<float>(hist[d]);
        }
    });
    return out;
}

constexpr int kNeighbourDx[8] = {-1, 0, 1, 1, 1, 0, -1, -1};
constexpr int kNeighbourDy[8] = {-1, -1, -1, 0, 1, 1, 1, 0};

DescriptorField dense_lqtp(const Image& lab, const LqtpParams& p)
{
    if (p.bins < 1 || p.bins > 256) throw ParameterError("LQTP bins must be in [1, 256]");
    if (p.window < 1) throw ParameterError("LQTP window must be >= 1");
    const int w = lab.width(), h = lab.height();
    const auto L = lab.plane(0);
    std::vector<TernaryCode> codes(L.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) codes[static_cast<std::size_t>(y) * w + x] = ternary_code(L, w, h, x, y, p.tau);

    DescriptorField out(w, h, 2 * p.bins, DescriptorKind::Lqtp);
    const int half = p.window / 2;
    const float unit = 1.0f / static_cast<float>(p.window * p.window);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            auto dst = out.at(x, y);
            for (int v = -half; v < p.window - half; ++v)
                for (int u = -half; u < p.window - half; ++u) {
                    const auto& c = codes[static_cast<std::size_t>(reflect_index(y + v, h)) * w + reflect_index(x + u, w)];
                    dst[c.upper * p.bins / 256] += unit;
                    dst[p.bins + c.lower * p.bins / 256] += unit;
                }
        }
    return out;
}

DescriptorField dense_self_similarity(const Image& lab, const SelfSimilarityParams& p)
{
    if (p.patch < 1 || p.patch % 2 == 0) throw ParameterError("self-similarity patch must be odd");
    if (p.window < 3 || p.window % 2 == 0) throw ParameterError("self-similarity window must be odd and >= 3");
    if (p.radial_bins < 1 || p.angular_bins < 1) throw ParameterError("self-similarity bins must be >= 1");
    const int w = lab.width(), h = lab.height();
    const std::size_t n = lab.plane_size();
    const int radius = p.window / 2;
    const int ph = p.patch / 2;
    const int nbins = p.radial_bins * p.angular_bins;

    // SSD between the patch at each pixel and the patch displaced by (dx, dy).
    auto ssd_for = [&](int dx, int dy) {
        std::vector<float> d(n);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int qx = reflect_index(x + dx, w), qy = reflect_index(y + dy, h);
                double acc = 0.0;
                for (int c = 0; c < 3; ++c) {
                    const double diff = static_cast<double>(lab.at(c, y, x)) - lab.at(c, qy, qx);
                    acc += diff * diff;
                }
                d[static_cast<std::size_t>(y) * w + x] = static_cast<float>(acc);
            }
        std::vector<double> half(ph + 1, 1.0);
        auto rows = filter_axis(d, w, h, Axis::X, half, TapForm::Symmetric);
        return filter_axis(rows, w, h, Axis::Y, half, TapForm::Symmetric);
    };

    std::vector<float> var_auto(n, 0.0f);
    for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            const auto s = ssd_for(dx, dy);
            for (std::size_t i = 0; i < n; ++i) var_auto[i] = std::max(var_auto[i], s[i]);
        }

    std::vector<float> min_ssd(n * nbins, std::numeric_limits<float>::infinity());
    std::vector<std::uint8_t> filled(static_cast<std::size_t>(nbins), 0);
    const double log_r = std::log(static_cast<double>(radius) + 1.0);
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const double r = std::sqrt(static_cast<double>(dx * dx + dy * dy));
            if (r < 1.0 || r > radius) continue;
            const int rb = std::min(p.radial_bins - 1, static_cast<int>(p.radial_bins * std::log(r) / log_r));
            double theta = std::atan2(static_cast<double>(dy), static_cast<double>(dx));
            if (theta < 0) theta += 2.0 * std::numbers::pi;
            const int ab = std::min(p.angular_bins - 1, static_cast<int>(theta * p.angular_bins / (2.0 * std::numbers::pi)));
            const int b = rb * p.angular_bins + ab;
            filled[static_cast<std::size_t>(b)] = 1;
            const auto s = ssd_for(dx, dy);
            for (std::size_t i = 0; i < n; ++i) min_ssd[i * nbins + b] = std::min(min_ssd[i * nbins + b], s[i]);
        }
    // Inner bins can be narrower than the pixel lattice; those read the
    // offset nearest to the bin centre.
    for (int b = 0; b < nbins; ++b) {
        if (filled[static_cast<std::size_t>(b)]) continue;
        const double rc = std::exp((b / p.angular_bins + 0.5) * log_r / p.radial_bins);
        const double tc = (b % p.angular_bins + 0.5) * 2.0 * std::numbers::pi / p.angular_bins;
        const int dx = static_cast<int>(std::lround(rc * std::cos(tc)));
        const int dy = static_cast<int>(std::lround(rc * std::sin(tc)));
        const auto s = ssd_for(dx, dy);
        for (std::size_t i = 0; i < n; ++i) min_ssd[i * nbins + b] = s[i];
    }

    DescriptorField out(w, h, nbins, DescriptorKind::SelfSimilarity);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const double var = std::max(static_cast<double>(p.noise_var), static_cast<double>(var_auto[i]));
            auto dst = out.at(x, y);
            for (int b = 0; b < nbins; ++b) {
                const float m = min_ssd[i * nbins + b];
                dst[b] = std::isinf(m) ? 0.0f : static_cast<float>(std::exp(-m / var));
            }
        }
    return out;
}

} // namespace

TernaryCode ternary_code(std::span<const float> plane, int width, int height, int x, int y, float tau)
{
    TernaryCode code;
    const float c = plane[static_cast<std::size_t>(y) * width + x];
    for (int k = 0; k < 8; ++k) {
        const float v = plane[static_cast<std::size_t>(reflect_index(y + kNeighbourDy[k], height)) * width +
                              reflect_index(x + kNeighbourDx[k], width)];
        if (v - c > tau) code.upper |= static_cast<std::uint8_t>(1u << k);
        else if (c - v > tau) code.lower |= static_cast<std::uint8_t>(1u << k);
    }
    return code;
}

DescriptorField filter_bank_17(const Image& lab)
{
    require_lab(lab);
    const int w = lab.width(), h = lab.height();
    DescriptorField out(w, h, 17, DescriptorKind::FilterBank17);
    int dim = 0;
    const Plane L = to_plane(lab.plane(0));

    for (double sigma : {1.0, 2.0, 4.0}) {
        const auto g = half_of(gaussian_taps(sigma));
        for (int c = 0; c < 3; ++c) {
            const auto rows = filter_axis(to_plane(lab.plane(c)), w, h, Axis::X, g, TapForm::Symmetric);
            store(out, dim++, filter_axis(rows, w, h, Axis::Y, g, TapForm::Symmetric));
        }
    }
    for (double sigma : {1.0, 2.0, 4.0, 8.0}) {
        const auto g = half_of(gaussian_taps(sigma));
        const auto g2 = second_derivative_half(sigma);
        const auto gy = filter_axis(L, w, h, Axis::Y, g, TapForm::Symmetric);
        const auto gx = filter_axis(L, w, h, Axis::X, g, TapForm::Symmetric);
        const auto dxx = filter_axis(gy, w, h, Axis::X, g2, TapForm::ZeroSum);
        const auto dyy = filter_axis(gx, w, h, Axis::Y, g2, TapForm::ZeroSum);
        Plane log(dxx.size());
        for (std::size_t i = 0; i < log.size(); ++i) log[i] = dxx[i] + dyy[i];
        store(out, dim++, log);
    }
    for (double sigma : {2.0, 4.0}) {
        const auto g = half_of(gaussian_taps(sigma));
        const auto d = derivative_half(sigma);
        const auto gy = filter_axis(L, w, h, Axis::Y, g, TapForm::Symmetric);
        const auto gx = filter_axis(L, w, h, Axis::X, g, TapForm::Symmetric);
        store(out, dim++, filter_axis(gy, w, h, Axis::X, d, TapForm::Antisymmetric));
        store(out, dim++, filter_axis(gx, w, h, Axis::Y, d, TapForm::Antisymmetric));
    }
    return out;
}

DescriptorField dense_descriptor(const Image& lab, DescriptorKind kind, const DescriptorParams& params)
{
    require_lab(lab);
    switch (kind) {
    case DescriptorKind::DenseSift: return dense_sift(lab, params.sift);
    case DescriptorKind::Lqtp: return dense_lqtp(lab, params.lqtp);
    case DescriptorKind::SelfSimilarity: return dense_self_similarity(lab, params.self_similarity);
    case DescriptorKind::FilterBank17: break;
    }
    throw ParameterError("dense_descriptor does not compute the filter bank; use filter_bank_17");
}

DescriptorField compute_descriptor(const Image& lab, DescriptorKind kind, const DescriptorParams& params)
{
    return kind == DescriptorKind::FilterBank17 ? filter_bank_17(lab) : dense_descriptor(lab, kind, params);
}

} // namespace lmatch
