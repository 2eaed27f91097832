#include "lmatch/bench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include "lmatch/bench/imageio.hpp"
#include "lmatch/error.hpp"
#include "lmatch/rng.hpp"

namespace lmatch::bench {

std::string_view to_string(SynthKind kind)
{
    switch (kind) {
    case SynthKind::ShiftStereo: return "shift-stereo";
    case SynthKind::PlaneScene: return "plane-scene";
    case SynthKind::TwoPlane: return "two-plane";
    case SynthKind::FlowShift: return "flow-shift";
    case SynthKind::ChangePaste: return "change-paste";
    }
    return "?";
}

SynthKind synth_kind_from_string(std::string_view name)
{
    for (auto k : {SynthKind::ShiftStereo, SynthKind::PlaneScene, SynthKind::TwoPlane, SynthKind::FlowShift,
                   SynthKind::ChangePaste})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown synthetic scene kind '" + std::string(name) + "'");
}

Task synth_task(SynthKind kind)
{
    switch (kind) {
    case SynthKind::FlowShift: return Task::Flow;
    case SynthKind::ChangePaste: return Task::Change;
    default: return Task::Stereo;
    }
}

namespace {

constexpr int kSpacing[] = {2, 4, 8, 16};
constexpr double kWeight[] = {0.30, 0.30, 0.25, 0.15};
constexpr int kLuma = 3;

} // namespace

RandomTexture::RandomTexture(std::uint64_t seed, double contrast) : seed_(seed), contrast_(contrast) {}

double RandomTexture::lattice(int octave, int channel, std::int64_t ix, std::int64_t iy) const
{
    const std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(ix)) << 32) |
                              static_cast<std::uint32_t>(iy);
    const std::uint64_t h = derive_seed(derive_seed(seed_, static_cast<std::uint64_t>(octave * 8 + channel)), key);
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

double RandomTexture::smooth(int octave, int channel, double x, double y) const
{
    const double s = kSpacing[octave];
    const double gx = x / s, gy = y / s;
    const double fx = std::floor(gx), fy = std::floor(gy);
    const double tx = gx - fx, ty = gy - fy;
    const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
    const double v00 = lattice(octave, channel, ix, iy), v10 = lattice(octave, channel, ix + 1, iy);
    const double v01 = lattice(octave, channel, ix, iy + 1), v11 = lattice(octave, channel, ix + 1, iy + 1);
    return (1 - ty) * ((1 - tx) * v00 + tx * v10) + ty * ((1 - tx) * v01 + tx * v11);
}

float RandomTexture::sample(int channel, double x, double y) const
{
    double luma = 0.0, chroma = 0.0;
    for (int o = 0; o < 4; ++o) {
        luma += kWeight[o] * smooth(o, kLuma, x, y);
        chroma += kWeight[o] * smooth(o, channel, x, y);
    }
    const double v = 0.5 + contrast_ * (1.6 * luma + 0.7 * chroma);
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

namespace {

template <typename Fn>
Image render(int w, int h, Fn&& fn)
{
    Image img(w, h, 3);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) img.at(c, y, x) = fn(c, x, y);
    return img;
}

Image finish(Image img, double noise, Rng& rng)
{
    if (noise > 0)
        for (float& v : img.data()) v = static_cast<float>(v + noise * rng.normal());
    return quantize8(img);
}

std::string pair_name(std::uint64_t seed)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "s%016llx", static_cast<unsigned long long>(seed));
    return buf;
}

} // namespace

DatasetPair synth_generate(SynthKind kind, const SynthParams& p, std::uint64_t seed)
{
    if (p.width < 4 || p.height < 4) throw ParameterError("synthetic images must be at least 4x4");
    Rng rng(seed);
    const RandomTexture tex(derive_seed(seed, 1), p.contrast);
    const int w = p.width, h = p.height;
    DatasetPair out;
    out.name = pair_name(seed);

    switch (kind) {
    case SynthKind::ShiftStereo: {
        const int s = p.shift;
        if (s < 0) throw ParameterError("stereo shift must be >= 0");
        // I2(x) = T(x + s) so that I2(x - s) = I1(x)
        out.image1 = render(w, h, [&](int c, int x, int y) { return tex.sample(c, x, y); });
        out.image2 = render(w, h, [&](int c, int x, int y) { return tex.sample(c, x + s, y); });
        DisparityMap gt(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                gt.valid[i] = x - s >= 0;
                if (gt.valid[i]) gt.disparity[i] = static_cast<float>(s);
            }
        out.truth = gt;
        break;
    }
    case SynthKind::FlowShift: {
        const int u = p.flow[0], v = p.flow[1];
        out.image1 = render(w, h, [&](int c, int x, int y) { return tex.sample(c, x, y); });
        out.image2 = render(w, h, [&](int c, int x, int y) { return tex.sample(c, x - u, y - v); });
        FlowField gt(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                gt.valid[i] = x + u >= 0 && x + u < w && y + v >= 0 && y + v < h;
                if (!gt.valid[i]) continue;
                gt.u[i] = static_cast<float>(u);
                gt.v[i] = static_cast<float>(v);
            }
        out.truth = gt;
        break;
    }
    case SynthKind::PlaneScene:
    case SynthKind::TwoPlane: {
        const bool two = kind == SynthKind::TwoPlane;
        const RandomTexture tex2(derive_seed(seed, 2), p.contrast);
        const RandomTexture background(derive_seed(seed, 3), p.contrast);
        const int split = two ? w / 2 : w;
        const auto& pa = p.plane;
        const auto& pb = p.plane2;
        if (pa[0] >= 1.0 || (two && pb[0] >= 1.0)) throw ParameterError("plane slope along x must be < 1");
        auto disp = [&](const std::array<double, 3>& pl, double x, double y) { return pl[0] * x + pl[1] * y + pl[2]; };
        // Surface seen at x2 in the second view: the plane whose preimage lies
        // in its own region, nearest (largest disparity) first. -1 = background.
        auto visible = [&](double x2, double y, double& src) {
            int who = -1;
            double best = -1e300;
            const double xa = (x2 + pa[1] * y + pa[2]) / (1.0 - pa[0]);
            if (xa < split && disp(pa, xa, y) > best) {
                who = 0;
                best = disp(pa, xa, y);
                src = xa;
            }
            if (two) {
                const double xb = (x2 + pb[1] * y + pb[2]) / (1.0 - pb[0]);
                if (xb >= split && disp(pb, xb, y) > best) {
                    who = 1;
                    src = xb;
                }
            }
            return who;
        };
        out.image1 = render(w, h, [&](int c, int x, int y) { return x < split ? tex.sample(c, x, y) : tex2.sample(c, x, y); });
        out.image2 = render(w, h, [&](int c, int x, int y) {
            double src = 0.0;
            const int who = visible(x, y, src);
            if (who < 0) return background.sample(c, x, y);
            return who == 0 ? tex.sample(c, src, y) : tex2.sample(c, src, y);
        });
        DisparityMap gt(w, h);
        out.occlusion.assign(static_cast<std::size_t>(w) * h, 0);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                const int own = x < split ? 0 : 1;
                const double d = disp(own == 0 ? pa : pb, x, y);
                gt.valid[i] = d > 0.0;
                if (gt.valid[i]) gt.disparity[i] = static_cast<float>(d);
                const double x2 = x - d;
                double src = 0.0;
                out.occlusion[i] = x2 < 0 || x2 > w - 1 || visible(x2, y, src) != own;
            }
        out.truth = gt;
        break;
    }
    case SynthKind::ChangePaste: {
        const RandomTexture other(derive_seed(seed, 2), p.contrast);
        if (p.block_min < 1 || p.block_max < p.block_min) throw ParameterError("bad change block size range");
        std::array<double, 3> gain{}, offset{};
        for (int c = 0; c < 3; ++c) {
            gain[c] = 1.0 + rng.uniform(-p.gain_jitter, p.gain_jitter);
            offset[c] = rng.uniform(-p.offset_jitter, p.offset_jitter);
        }
        ChangeMask gt(w, h);
        std::fill(gt.valid.begin(), gt.valid.end(), 1);
        for (int b = 0; b < p.blocks; ++b) {
            const int bw = static_cast<int>(rng.uniform_int(p.block_min, std::min(p.block_max, w)));
            const int bh = static_cast<int>(rng.uniform_int(std::min(p.block_min, h), std::min(p.block_max, h)));
            const int x0 = static_cast<int>(rng.uniform_int(0, w - bw));
            const int y0 = static_cast<int>(rng.uniform_int(0, h - bh));
            for (int y = y0; y < y0 + bh; ++y)
                for (int x = x0; x < x0 + bw; ++x) gt.changed[static_cast<std::size_t>(y) * w + x] = 1;
        }
        out.image1 = render(w, h, [&](int c, int x, int y) { return tex.sample(c, x, y); });
        out.image2 = render(w, h, [&](int c, int x, int y) {
            const bool pasted = gt.changed[static_cast<std::size_t>(y) * w + x];
            const double v = pasted ? other.sample(c, x + 1000.0, y) : tex.sample(c, x, y);
            return static_cast<float>(std::clamp(gain[c] * v + offset[c], 0.0, 1.0));
        });
        out.truth = gt;
        break;
    }
    }
    out.image1 = finish(std::move(out.image1), p.noise, rng);
    out.image2 = finish(std::move(out.image2), p.noise, rng);
    return out;
}

Dataset synth_dataset(SynthKind kind, const SynthParams& params, int count, std::uint64_t seed)
{
    if (count < 1) throw ParameterError("synthetic dataset needs at least one pair");
    Dataset ds;
    ds.task = synth_task(kind);
    for (int i = 0; i < count; ++i) {
        SynthParams p = params;
        if (!p.shifts.empty()) p.shift = p.shifts[static_cast<std::size_t>(i) % p.shifts.size()];
        if (!p.flows.empty()) p.flow = p.flows[static_cast<std::size_t>(i) % p.flows.size()];
        ds.pairs.push_back(synth_generate(kind, p, derive_seed(seed, static_cast<std::uint64_t>(i))));
        char buf[16];
        std::snprintf(buf, sizeof buf, "pair%04d", i);
        ds.pairs.back().name = buf;
    }
    return ds;
}

} // namespace lmatch::bench
