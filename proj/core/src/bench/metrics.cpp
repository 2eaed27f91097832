#include "lmatch/bench/metrics.hpp"

#include <cmath>
#include <limits>

#include "lmatch/error.hpp"

namespace lmatch::bench {

namespace {

double ratio(std::size_t num, std::size_t den)
{
    return den ? static_cast<double>(num) / static_cast<double>(den) : std::numeric_limits<double>::quiet_NaN();
}

double mean_defined(double a, double b)
{
    if (std::isnan(a)) return b;
    if (std::isnan(b)) return a;
    return 0.5 * (a + b);
}

} // namespace

StereoMetrics stereo_metrics(const DisparityMap& est, const DisparityMap& gt, const std::vector<std::uint8_t>* occ)
{
    if (est.width != gt.width || est.height != gt.height) throw ShapeError("disparity maps differ in size");
    if (occ && occ->size() != gt.disparity.size()) throw ShapeError("occlusion mask size mismatch");
    StereoMetrics m;
    std::size_t bad3 = 0, bad5 = 0, bad3n = 0, bad5n = 0, have = 0;
    double abs_sum = 0.0;
    for (std::size_t i = 0; i < gt.disparity.size(); ++i) {
        if (!gt.valid[i]) continue;
        const bool noc = !occ || !(*occ)[i];
        double err = std::numeric_limits<double>::infinity();
        if (est.valid[i]) {
            err = std::abs(static_cast<double>(est.disparity[i]) - gt.disparity[i]);
            abs_sum += err;
            ++have;
        }
        ++m.pixels;
        bad3 += err > 3.0;
        bad5 += err > 5.0;
        if (noc) {
            ++m.pixels_noc;
            bad3n += err > 3.0;
            bad5n += err > 5.0;
        }
    }
    m.outlier3 = m.pixels ? ratio(bad3, m.pixels) : 0.0;
    m.outlier5 = m.pixels ? ratio(bad5, m.pixels) : 0.0;
    m.outlier3_noc = m.pixels_noc ? ratio(bad3n, m.pixels_noc) : 0.0;
    m.outlier5_noc = m.pixels_noc ? ratio(bad5n, m.pixels_noc) : 0.0;
    m.mean_abs_error = have ? abs_sum / static_cast<double>(have) : 0.0;
    m.density = m.pixels ? ratio(have, m.pixels) : 0.0;
    return m;
}

ChangeMetrics change_metrics(const ChangeMask& pred, const ChangeMask& gt)
{
    if (pred.width != gt.width || pred.height != gt.height) throw ShapeError("change masks differ in size");
    ChangeMetrics m;
    for (std::size_t i = 0; i < gt.changed.size(); ++i) {
        if (!gt.valid[i]) continue;
        const bool p = pred.valid[i] && pred.changed[i];
        if (gt.changed[i])
            (p ? m.true_change : m.false_nochange)++;
        else
            (p ? m.false_change : m.true_nochange)++;
    }
    const std::size_t total = m.true_change + m.false_change + m.true_nochange + m.false_nochange;
    m.accuracy = total ? ratio(m.true_change + m.true_nochange, total) : 0.0;
    m.recall_change = ratio(m.true_change, m.true_change + m.false_nochange);
    m.recall_nochange = ratio(m.true_nochange, m.true_nochange + m.false_change);
    m.precision_change = ratio(m.true_change, m.true_change + m.false_change);
    m.precision_nochange = ratio(m.true_nochange, m.true_nochange + m.false_nochange);
    m.mean_recall = mean_defined(m.recall_change, m.recall_nochange);
    m.mean_precision = mean_defined(m.precision_change, m.precision_nochange);
    return m;
}

ChangeMetrics change_metrics(const ScoreVolume& volume, double threshold, const ChangeMask& gt)
{
    return change_metrics(to_change_mask(volume, threshold), gt);
}

FlowMetrics flow_metrics(const FlowField& est, const FlowField& gt)
{
    if (est.width != gt.width || est.height != gt.height) throw ShapeError("flow fields differ in size");
    FlowMetrics m;
    std::size_t have = 0, bad1 = 0, bad3 = 0, exact = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < gt.u.size(); ++i) {
        if (!gt.valid[i]) continue;
        ++m.pixels;
        if (!est.valid[i]) {
            ++bad1;
            ++bad3;
            continue;
        }
        const double e = std::hypot(static_cast<double>(est.u[i]) - gt.u[i], static_cast<double>(est.v[i]) - gt.v[i]);
        ++have;
        sum += e;
        bad1 += e > 1.0;
        bad3 += e > 3.0;
        exact += e < 0.5;
    }
    if (m.pixels) {
        m.outlier1 = ratio(bad1, m.pixels);
        m.outlier3 = ratio(bad3, m.pixels);
        m.exact = ratio(exact, m.pixels);
        m.density = ratio(have, m.pixels);
    }
    m.mean_epe = have ? sum / static_cast<double>(have) : 0.0;
    return m;
}

Image downsample_image(const Image& img, int factor)
{
    if (factor < 1) throw ParameterError("downsampling factor must be >= 1");
    const int w = img.width() / factor, h = img.height() / factor;
    if (w < 1 || h < 1) throw ShapeError("image smaller than one downsampling block");
    Image out(w, h, img.channels());
    const double inv = 1.0 / (static_cast<double>(factor) * factor);
    for (int c = 0; c < img.channels(); ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double s = 0.0;
                for (int j = 0; j < factor; ++j)
                    for (int i = 0; i < factor; ++i) s += img.at(c, y * factor + j, x * factor + i);
                out.at(c, y, x) = static_cast<float>(s * inv);
            }
    return out;
}

FlowField downsample_flow(const FlowField& flow, int factor)
{
    if (factor < 1) throw ParameterError("downsampling factor must be >= 1");
    const int w = flow.width / factor, h = flow.height / factor;
    if (w < 1 || h < 1) throw ShapeError("flow field smaller than one downsampling block");
    FlowField out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double su = 0.0, sv = 0.0;
            int n = 0;
            for (int j = 0; j < factor; ++j)
                for (int i = 0; i < factor; ++i) {
                    const std::size_t k = static_cast<std::size_t>(y * factor + j) * flow.width + x * factor + i;
                    if (!flow.valid[k]) continue;
                    su += flow.u[k];
                    sv += flow.v[k];
                    ++n;
                }
            if (!n) continue;
            const std::size_t o = static_cast<std::size_t>(y) * w + x;
            out.u[o] = static_cast<float>(su / n / factor);
            out.v[o] = static_cast<float>(sv / n / factor);
            out.valid[o] = 1;
        }
    return out;
}

} // namespace lmatch::bench
