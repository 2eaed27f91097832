#include "lmatch/matcher.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "binio.hpp"
#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"

namespace lmatch {

ScoreVolume::ScoreVolume(int width, int height, CandidateSpec spec)
    : width_(width), height_(height), spec_(spec), candidates_(spec.displacements()),
      scores_(static_cast<std::size_t>(width) * height * candidates_.size(), kInvalidScore)
{
}

ScoreVolume score_volume(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2, const CandidateSpec& spec)
{
    const int w = rep1.width(), h = rep1.height();
    if (rep2.width() != w || rep2.height() != h) throw ShapeError("image pair sizes differ");
    ScoreVolume v(w, h, spec);
    const auto& cands = v.candidates();
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < w; ++x) {
            auto out = v.pixel(x, y);
            for (std::size_t c = 0; c < cands.size(); ++c) {
                const PixelCoord x2{x + cands[c].dx, y + cands[c].dy};
                if (x2.x < 0 || x2.y < 0 || x2.x >= rep2.width() || x2.y >= rep2.height()) continue;
                out[c] = static_cast<float>(evaluate(model, rep1, rep2, {x, y}, x2));
            }
        }
    });
    return v;
}

ScoreVolume score_volume_backward(const MatchingClassifier& model, const ImageRepresentation& rep1,
                                  const ImageRepresentation& rep2, const CandidateSpec& forward)
{
    const int w = rep2.width(), h = rep2.height();
    if (rep1.width() != w || rep1.height() != h) throw ShapeError("image pair sizes differ");
    ScoreVolume v(w, h, forward.reverse());
    const auto& cands = v.candidates();
    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        for (int x = 0; x < w; ++x) {
            auto out = v.pixel(x, y);
            for (std::size_t c = 0; c < cands.size(); ++c) {
                const PixelCoord x1{x + cands[c].dx, y + cands[c].dy};
                if (x1.x < 0 || x1.y < 0 || x1.x >= w || x1.y >= h) continue;
                out[c] = static_cast<float>(evaluate(model, rep1, rep2, x1, {x, y}));
            }
        }
    });
    return v;
}

ScoreVolume score_stereo(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2, int d_max)
{
    return score_volume(model, rep1, rep2, CandidateSpec::stereo(d_max));
}

ScoreVolume score_flow(const MatchingClassifier& model, const ImageRepresentation& rep1,
                       const ImageRepresentation& rep2, int fx_min, int fx_max, int fy_min, int fy_max)
{
    return score_volume(model, rep1, rep2, CandidateSpec::flow(fx_min, fx_max, fy_min, fy_max));
}

ScoreVolume score_change(const MatchingClassifier& model, const ImageRepresentation& rep1,
                         const ImageRepresentation& rep2)
{
    return score_volume(model, rep1, rep2, CandidateSpec::change());
}

Displacement LabelMap::displacement(int x, int y) const
{
    const int l = at(x, y);
    if (l < 0) return {};
    return spec.displacements()[static_cast<std::size_t>(l)];
}

LabelMap winner_take_all(const ScoreVolume& v)
{
    LabelMap out(v.width(), v.height(), v.spec());
    for (int y = 0; y < v.height(); ++y)
        for (int x = 0; x < v.width(); ++x) {
            const auto s = v.pixel(x, y);
            int best = -1;
            for (int c = 0; c < static_cast<int>(s.size()); ++c) {
                if (std::isinf(s[c]) && s[c] < 0) continue;
                if (best < 0 || s[c] > s[best]) best = c;
            }
            out.label[static_cast<std::size_t>(y) * v.width() + x] = best;
        }
    return out;
}

LabelMap inverse_validate(const LabelMap& forward, const LabelMap& backward, double tol)
{
    if (forward.width != backward.width || forward.height != backward.height)
        throw ShapeError("forward and backward label maps differ in size");
    const auto fwd = forward.spec.displacements();
    const auto bwd = backward.spec.displacements();
    LabelMap out = forward;
    for (int y = 0; y < forward.height; ++y)
        for (int x = 0; x < forward.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * forward.width + x;
            const int l = forward.label[i];
            if (l < 0) continue;
            const Displacement f = fwd[static_cast<std::size_t>(l)];
            const int mx = x + f.dx, my = y + f.dy;
            bool ok = mx >= 0 && my >= 0 && mx < backward.width && my < backward.height;
            if (ok && !std::isinf(tol)) {
                const int lb = backward.at(mx, my);
                if (lb < 0) {
                    ok = false;
                } else {
                    const Displacement b = bwd[static_cast<std::size_t>(lb)];
                    ok = std::hypot(static_cast<double>(f.dx + b.dx), static_cast<double>(f.dy + b.dy)) <= tol;
                }
            }
            if (!ok) out.label[i] = -1;
        }
    return out;
}

DisparityMap to_disparity(const LabelMap& labels)
{
    if (labels.spec.task != Task::Stereo) throw ShapeError("label map is not a stereo result");
    DisparityMap d(labels.width, labels.height);
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * labels.width + x;
            if (labels.label[i] < 0) continue;
            d.disparity[i] = static_cast<float>(std::abs(labels.displacement(x, y).dx));
            d.valid[i] = 1;
        }
    return d;
}

FlowField to_flow(const LabelMap& labels)
{
    if (labels.spec.task != Task::Flow) throw ShapeError("label map is not a flow result");
    FlowField f(labels.width, labels.height);
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * labels.width + x;
            if (labels.label[i] < 0) continue;
            const auto d = labels.displacement(x, y);
            f.u[i] = static_cast<float>(d.dx);
            f.v[i] = static_cast<float>(d.dy);
            f.valid[i] = 1;
        }
    return f;
}

ChangeMask to_change_mask(const ScoreVolume& volume, double threshold)
{
    if (volume.candidate_count() != 1) throw ShapeError("change detection expects a single-candidate volume");
    ChangeMask m(volume.width(), volume.height());
    for (int y = 0; y < volume.height(); ++y)
        for (int x = 0; x < volume.width(); ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * volume.width() + x;
            m.changed[i] = volume.at(x, y, 0) > threshold ? 0 : 1;
            m.valid[i] = 1;
        }
    return m;
}

namespace {
constexpr std::string_view kVolumeMagic = "LMATCH-VOLUME 1";
}

std::vector<std::uint8_t> serialize_volume(const ScoreVolume& v)
{
    const auto& s = v.spec();
    std::ostringstream hdr;
    hdr << kVolumeMagic << "\n"
        << "task " << to_string(s.task) << "\n"
        << "reversed " << (s.reversed ? 1 : 0) << "\n"
        << "window " << s.d_max << ' ' << s.fx_min << ' ' << s.fx_max << ' ' << s.fy_min << ' ' << s.fy_max << "\n"
        << "width " << v.width() << "\nheight " << v.height() << "\ncandidates " << v.candidate_count() << "\n";
    for (const auto& c : v.candidates()) hdr << c.dx << ' ' << c.dy << "\n";
    hdr << "end\n";
    detail::ByteWriter w;
    w.text(hdr.str());
    for (float f : v.data()) w.put(f);
    return std::move(w.bytes());
}

ScoreVolume deserialize_volume(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes);
    if (r.line() != kVolumeMagic) throw FormatError("not a score volume (bad magic)");
    auto field = [&](std::string_view key) {
        std::istringstream in(r.line());
        std::string k;
        in >> k;
        if (k != key) throw FormatError("score volume header: expected '" + std::string(key) + "'");
        return in;
    };
    std::string task_name;
    field("task") >> task_name;
    int reversed = 0;
    field("reversed") >> reversed;
    CandidateSpec s;
    s.task = task_from_string(task_name);
    s.reversed = reversed != 0;
    field("window") >> s.d_max >> s.fx_min >> s.fx_max >> s.fy_min >> s.fy_max;
    int w = 0, h = 0, c = 0;
    field("width") >> w;
    field("height") >> h;
    field("candidates") >> c;
    if (w < 0 || h < 0 || c < 0) throw FormatError("score volume header: bad dimensions");
    ScoreVolume v(w, h, s);
    if (v.candidate_count() != c) throw FormatError("score volume header: candidate count mismatch");
    for (int k = 0; k < c; ++k) {
        std::istringstream in(r.line());
        Displacement d;
        in >> d.dx >> d.dy;
        if (!in || !(d == v.candidates()[static_cast<std::size_t>(k)]))
            throw FormatError("score volume header: candidate list mismatch");
    }
    if (r.line() != "end") throw FormatError("score volume header: missing 'end'");
    if (r.remaining() != static_cast<std::size_t>(w) * h * c * sizeof(float))
        throw FormatError("score volume payload size mismatch");
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (auto& f : v.pixel(x, y)) f = r.get<float>();
    return v;
}

void save_volume(const ScoreVolume& v, const std::filesystem::path& path)
{
    detail::write_file(path, serialize_volume(v));
}

ScoreVolume load_volume(const std::filesystem::path& path)
{
    try {
        return deserialize_volume(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace lmatch
