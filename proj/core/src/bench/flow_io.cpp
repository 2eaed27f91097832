#include "lmatch/bench/flow_io.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "../binio.hpp"
#include "lmatch/error.hpp"

namespace lmatch::bench {

namespace {

constexpr char kMagic[4] = {'P', 'I', 'E', 'H'};

bool unknown(float u, float v)
{
    return !std::isfinite(u) || !std::isfinite(v) || std::abs(u) > 1e9f || std::abs(v) > 1e9f;
}

} // namespace

std::vector<std::uint8_t> encode_flow(const FlowField& f)
{
    if (f.u.size() != static_cast<std::size_t>(f.width) * f.height) throw ShapeError("flow field size mismatch");
    detail::ByteWriter w;
    w.text({kMagic, 4});
    w.put<std::int32_t>(f.width);
    w.put<std::int32_t>(f.height);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        w.put<float>(f.valid[i] ? f.u[i] : kUnknownFlow);
        w.put<float>(f.valid[i] ? f.v[i] : kUnknownFlow);
    }
    return std::move(w.bytes());
}

FlowField decode_flow(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 12 || !std::equal(kMagic, kMagic + 4, bytes.begin())) throw FormatError("bad flow file magic");
    detail::ByteReader r(bytes.subspan(4));
    const auto w = r.get<std::int32_t>();
    const auto h = r.get<std::int32_t>();
    if (w < 0 || h < 0 || w > (1 << 16) || h > (1 << 16)) throw FormatError("implausible flow file dimensions");
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (r.remaining() != n * 8) throw FormatError("flow file payload has the wrong length");
    FlowField f(w, h);
    for (std::size_t i = 0; i < n; ++i) {
        const float u = r.get<float>(), v = r.get<float>();
        if (unknown(u, v)) continue;
        f.u[i] = u;
        f.v[i] = v;
        f.valid[i] = 1;
    }
    return f;
}

void save_flow(const std::filesystem::path& path, const FlowField& field)
{
    detail::write_file(path, encode_flow(field));
}

FlowField load_flow(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file(path);
    try {
        return decode_flow(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

namespace {

struct Wheel {
    std::vector<std::array<float, 3>> cols;

    Wheel()
    {
        // red, yellow, green, cyan, blue, magenta segments
        const int seg[6] = {15, 6, 4, 11, 13, 6};
        auto ramp = [&](int n, auto fn) {
            for (int i = 0; i < n; ++i) cols.push_back(fn(static_cast<float>(i) / n));
        };
        ramp(seg[0], [](float t) { return std::array<float, 3>{1.0f, t, 0.0f}; });
        ramp(seg[1], [](float t) { return std::array<float, 3>{1.0f - t, 1.0f, 0.0f}; });
        ramp(seg[2], [](float t) { return std::array<float, 3>{0.0f, 1.0f, t}; });
        ramp(seg[3], [](float t) { return std::array<float, 3>{0.0f, 1.0f - t, 1.0f}; });
        ramp(seg[4], [](float t) { return std::array<float, 3>{t, 0.0f, 1.0f}; });
        ramp(seg[5], [](float t) { return std::array<float, 3>{1.0f, 0.0f, 1.0f - t}; });
    }
};

const Wheel& wheel()
{
    static const Wheel w;
    return w;
}

} // namespace

std::array<float, 3> flow_color(double angle, double magnitude)
{
    const auto& cols = wheel().cols;
    const int n = static_cast<int>(cols.size());
    double t = angle / (2.0 * std::numbers::pi);
    t -= std::floor(t);
    const double fk = t * n;
    const int k0 = static_cast<int>(fk) % n;
    const int k1 = (k0 + 1) % n;
    const double f = fk - std::floor(fk);
    const double m = std::clamp(magnitude, 0.0, 1.0);
    std::array<float, 3> out{};
    for (int c = 0; c < 3; ++c) {
        const double col = (1.0 - f) * cols[k0][c] + f * cols[k1][c];
        out[c] = static_cast<float>(1.0 - m * (1.0 - col));
    }
    return out;
}

Image flow_colorize(const FlowField& f)
{
    Image img(f.width, f.height, 3, 0.0f);
    double max_mag = 0.0;
    for (std::size_t i = 0; i < f.u.size(); ++i)
        if (f.valid[i]) max_mag = std::max(max_mag, std::hypot(static_cast<double>(f.u[i]), f.v[i]));
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * f.width + x;
            if (!f.valid[i]) continue;
            const double mag = std::hypot(static_cast<double>(f.u[i]), f.v[i]);
            const auto c = flow_color(std::atan2(static_cast<double>(f.v[i]), f.u[i]), max_mag > 0 ? mag / max_mag : 0.0);
            for (int k = 0; k < 3; ++k) img.at(k, y, x) = c[k];
        }
    return img;
}

} // namespace lmatch::bench
