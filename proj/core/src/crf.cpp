#include "lmatch/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"
#include "lmatch/rng.hpp"

namespace lmatch {

int CrfConfig::effective_radius() const
{
    return radius > 0 ? radius : std::max(1, static_cast<int>(std::ceil(3.0 * sigma_loc)));
}

void CrfConfig::validate() const
{
    if (!(sigma_app > 0 && sigma_loc > 0 && sigma_pln > 0 && inlier > 0))
        throw ParameterError("CRF kernel widths and inlier threshold must be positive");
    if (radius < 0) throw ParameterError("CRF truncation radius must be >= 1 (or 0 for automatic)");
    if (max_iters < 0 || ransac_iters < 0) throw ParameterError("CRF iteration counts must be >= 0");
    if (!(compat_cutoff > 0)) throw ParameterError("compatibility cutoff must be positive");
    if (!(step > 0 && step <= 1)) throw ParameterError("mean-field step must be in (0, 1]");
}

namespace {

double color_distance_sq(const Image& lab, PixelCoord a, PixelCoord b)
{
    double s = 0.0;
    for (int c = 0; c < lab.channels(); ++c) {
        const double t = static_cast<double>(lab.at(c, a.y, a.x)) - lab.at(c, b.y, b.x);
        s += t * t;
    }
    return s;
}

double kernel_from(double color_sq, double loc_sq, const CrfConfig& cfg)
{
    return std::exp(-color_sq / (2.0 * cfg.sigma_app * cfg.sigma_app) - loc_sq / (2.0 * cfg.sigma_loc * cfg.sigma_loc));
}

struct Offset {
    int dx;
    int dy;
};

std::vector<Offset> disc_offsets(int radius)
{
    std::vector<Offset> out;
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx)
            if ((dx != 0 || dy != 0) && dx * dx + dy * dy <= radius * radius) out.push_back({dx, dy});
    return out;
}

void check_lab(const Image& lab, int w, int h)
{
    if (!lab.empty() && (lab.width() != w || lab.height() != h))
        throw ShapeError("colour image size does not match the label field");
}

} // namespace

double pairwise_kernel(std::span<const float> color_i, std::span<const float> color_j, PixelCoord xi, PixelCoord xj,
                       const CrfConfig& cfg)
{
    if (color_i.size() != color_j.size()) throw ShapeError("colour vectors differ in length");
    double cs = 0.0;
    for (std::size_t c = 0; c < color_i.size(); ++c) {
        const double t = static_cast<double>(color_i[c]) - color_j[c];
        cs += t * t;
    }
    const double dx = xi.x - xj.x, dy = xi.y - xj.y;
    return kernel_from(cs, dx * dx + dy * dy, cfg);
}

double pairwise_kernel(const Image& lab, PixelCoord xi, PixelCoord xj, const CrfConfig& cfg)
{
    const double dx = xi.x - xj.x, dy = xi.y - xj.y;
    return kernel_from(lab.empty() ? 0.0 : color_distance_sq(lab, xi, xj), dx * dx + dy * dy, cfg);
}

double plane_compatibility(double d_i, double d_j, std::array<double, 2> p_i, PixelCoord xi, PixelCoord xj,
                           double sigma_pln)
{
    const double r = d_i - d_j - (p_i[0] * (xj.x - xi.x) + p_i[1] * (xj.y - xi.y));
    return std::exp(-r * r / (2.0 * sigma_pln * sigma_pln));
}

namespace {

struct Support {
    double dx, dy, v, k;
};

// Kernel-weighted least squares over the inliers of hypothesis h.
std::array<double, 3> refine_plane(const std::vector<Support>& sup, std::array<double, 3> h, bool anchored,
                                   double inlier)
{
    double a[3][3] = {}, b[3] = {};
    int count = 0;
    for (const auto& s : sup) {
        if (std::abs(h[0] + h[1] * s.dx + h[2] * s.dy - s.v) > inlier) continue;
        const double row[3] = {1.0, s.dx, s.dy};
        const double target = anchored ? s.v - h[0] : s.v;
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) a[r][c] += s.k * row[r] * row[c];
            b[r] += s.k * row[r] * target;
        }
        ++count;
    }
    if (anchored) {
        const double det = a[1][1] * a[2][2] - a[1][2] * a[2][1];
        if (count < 2 || std::abs(det) < 1e-9 * (1.0 + a[1][1] * a[2][2])) return h;
        return {h[0], (b[1] * a[2][2] - a[1][2] * b[2]) / det, (a[1][1] * b[2] - a[2][1] * b[1]) / det};
    }
    auto det3 = [](const double m[3][3]) {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    };
    const double det = det3(a);
    if (count < 3 || std::abs(det) < 1e-9 * (1.0 + a[0][0] * a[1][1] * a[2][2])) return h;
    std::array<double, 3> out{};
    for (int k = 0; k < 3; ++k) {
        double m[3][3];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m[r][c] = c == k ? b[r] : a[r][c];
        out[static_cast<std::size_t>(k)] = det3(m) / det;
    }
    return out;
}

} // namespace

PlaneField ransac_fit_planes(const std::vector<double>& values, const std::vector<std::uint8_t>& valid, int width,
                             int height, const Image& lab, const CrfConfig& cfg, std::uint64_t seed)
{
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(width) * height;
    if (values.size() != n || valid.size() != n) throw ShapeError("plane fit inputs do not match the image size");
    check_lab(lab, width, height);
    const auto offsets = disc_offsets(cfg.effective_radius());
    PlaneField planes(width, height, 1);

    parallel_for(static_cast<std::size_t>(height), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<Support> sup;
        for (int x = 0; x < width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * width + x;
            sup.clear();
            for (const auto& o : offsets) {
                const int jx = x + o.dx, jy = y + o.dy;
                if (jx < 0 || jy < 0 || jx >= width || jy >= height) continue;
                const std::size_t j = static_cast<std::size_t>(jy) * width + jx;
                if (!valid[j]) continue;
                sup.push_back({static_cast<double>(o.dx), static_cast<double>(o.dy), values[j],
                               pairwise_kernel(lab, {x, y}, {jx, jy}, cfg)});
            }
            if (sup.size() < 2) continue;
            const bool anchored = cfg.anchor_at_pixel || sup.size() == 2;
            if (anchored && !valid[i]) continue;

            Rng rng(derive_seed(seed, i));
            const auto m = static_cast<std::int64_t>(sup.size());
            double best = -1.0;
            std::array<double, 3> best_h{0.0, 0.0, 0.0}; // alpha, gx, gy
            for (int it = 0; it < cfg.ransac_iters; ++it) {
                double alpha = 0.0, gx = 0.0, gy = 0.0;
                if (!anchored) {
                    const auto a = rng.uniform_int(0, m - 1);
                    auto b = rng.uniform_int(0, m - 2);
                    if (b >= a) ++b;
                    auto c = rng.uniform_int(0, m - 3);
                    if (c >= std::min(a, b)) ++c;
                    if (c >= std::max(a, b)) ++c;
                    const Support& p = sup[static_cast<std::size_t>(a)];
                    const Support& q = sup[static_cast<std::size_t>(b)];
                    const Support& r = sup[static_cast<std::size_t>(c)];
                    // v = alpha + gx dx + gy dy through three points
                    const double det = (q.dx - p.dx) * (r.dy - p.dy) - (r.dx - p.dx) * (q.dy - p.dy);
                    if (std::abs(det) < 1e-9) continue;
                    gx = ((q.v - p.v) * (r.dy - p.dy) - (r.v - p.v) * (q.dy - p.dy)) / det;
                    gy = ((q.dx - p.dx) * (r.v - p.v) - (r.dx - p.dx) * (q.v - p.v)) / det;
                    alpha = p.v - gx * p.dx - gy * p.dy;
                } else {
                    const auto a = rng.uniform_int(0, m - 1);
                    auto b = rng.uniform_int(0, m - 2);
                    if (b >= a) ++b;
                    const Support& p = sup[static_cast<std::size_t>(a)];
                    const Support& q = sup[static_cast<std::size_t>(b)];
                    const double det = p.dx * q.dy - q.dx * p.dy;
                    if (std::abs(det) < 1e-9) continue;
                    alpha = values[i];
                    gx = ((p.v - alpha) * q.dy - (q.v - alpha) * p.dy) / det;
                    gy = (p.dx * (q.v - alpha) - q.dx * (p.v - alpha)) / det;
                }
                double score = 0.0;
                for (const auto& s : sup)
                    if (std::abs(alpha + gx * s.dx + gy * s.dy - s.v) <= cfg.inlier) score += s.k;
                if (score > best) {
                    best = score;
                    best_h = {alpha, gx, gy};
                }
            }
            if (cfg.refine_planes && best > 0.0) best_h = refine_plane(sup, best_h, anchored, cfg.inlier);
            planes.at(x, y) = {-best_h[1], -best_h[2]};
        }
    });
    return planes;
}

double Marginals::max_normalisation_error() const
{
    double worst = 0.0;
    for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
        double s = 0.0;
        for (double v : row(p)) s += v;
        worst = std::max(worst, std::abs(s - 1.0));
    }
    return worst;
}

std::vector<double> unary_logits(const ScoreVolume& volume, const std::vector<std::uint8_t>* ignored)
{
    const int c = volume.candidate_count();
    const std::size_t n = static_cast<std::size_t>(volume.width()) * volume.height();
    if (ignored && ignored->size() != n) throw ShapeError("ignore mask does not match the volume");
    std::vector<double> u(n * c);
    for (int y = 0; y < volume.height(); ++y)
        for (int x = 0; x < volume.width(); ++x) {
            const std::size_t p = static_cast<std::size_t>(y) * volume.width() + x;
            const bool flat = ignored && (*ignored)[p];
            const auto s = volume.pixel(x, y);
            for (int k = 0; k < c; ++k) {
                const bool invalid = std::isinf(s[k]) && s[k] < 0;
                if (!invalid && !std::isfinite(s[k])) throw NumericError("non-finite score in volume");
                u[p * c + k] = invalid ? -std::numeric_limits<double>::infinity() : (flat ? 0.0 : s[k]);
            }
        }
    return u;
}

namespace {

// Softmax of one row of logits; an all -inf row becomes uniform.
void softmax_row(std::span<const double> logits, std::span<double> out)
{
    double mx = -std::numeric_limits<double>::infinity();
    for (double v : logits) mx = std::max(mx, v);
    if (std::isinf(mx)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
        return;
    }
    double z = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) z += out[k] = std::isinf(logits[k]) ? 0.0 : std::exp(logits[k] - mx);
    for (double& v : out) v /= z;
}

} // namespace

Marginals initial_marginals(const ScoreVolume& volume, const std::vector<double>& logits)
{
    const int c = volume.candidate_count();
    Marginals q(volume.width(), volume.height(), c);
    const std::size_t n = static_cast<std::size_t>(volume.width()) * volume.height();
    if (logits.size() != n * c) throw ShapeError("logit buffer does not match the volume");
    for (std::size_t p = 0; p < n; ++p) softmax_row({logits.data() + p * c, static_cast<std::size_t>(c)}, q.row(p));
    return q;
}

Marginals mean_field_step(const Marginals& q, const ScoreVolume& volume, const std::vector<double>& unaries,
                          const PlaneField& planes, const Image& lab, const CrfConfig& cfg,
                          std::vector<double>* logits_out)
{
    cfg.validate();
    const int w = volume.width(), h = volume.height();
    const CandidateSpec& spec = volume.spec();
    const int gw = spec.grid_width(), gh = spec.grid_height();
    const int labels = gw * gh;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (q.width != w || q.height != h || q.labels != labels) throw ShapeError("marginals do not match the volume");
    if (unaries.size() != n * labels) throw ShapeError("unaries do not match the volume");
    const bool two_d = spec.task == Task::Flow;
    if (planes.width != w || planes.height != h || planes.components != (two_d ? 2 : 1))
        throw ShapeError("plane field does not match the volume");
    check_lab(lab, w, h);

    // Label value differences along each grid axis are step * (a - a').
    const double step_x = gw > 1 ? spec.label_value_x(1) - spec.label_value_x(0) : 1.0;
    const double step_y = gh > 1 ? spec.label_value_y(gw) - spec.label_value_y(0) : 1.0;
    const double inv2s2 = 1.0 / (2.0 * cfg.sigma_pln * cfg.sigma_pln);
    const double cut = cfg.compat_cutoff * cfg.sigma_pln;
    const auto offsets = disc_offsets(cfg.effective_radius());
    const bool coupled = cfg.pairwise_weight != 0.0;

    Marginals out(w, h, labels);
    std::vector<double> logits(n * labels);

    parallel_for(static_cast<std::size_t>(h), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<double> msg(labels), temp(labels), gx_tab(2 * gw - 1), gy_tab(2 * gh - 1);
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            std::fill(msg.begin(), msg.end(), 0.0);
            if (coupled) {
                const auto& px = planes.at(x, y, 0);
                const std::array<double, 2> py = two_d ? planes.at(x, y, 1) : std::array<double, 2>{0.0, 0.0};
                for (const auto& o : offsets) {
                    const int jx = x + o.dx, jy = y + o.dy;
                    if (jx < 0 || jy < 0 || jx >= w || jy >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(jy) * w + jx;
                    const double k = pairwise_kernel(lab, {x, y}, {jx, jy}, cfg);
                    // mu(c, c') = G(v_c - v_c' - t) per component; tabulate by grid offset.
                    const double tx = px[0] * o.dx + px[1] * o.dy;
                    const double ty = py[0] * o.dx + py[1] * o.dy;
                    for (int off = -(gw - 1); off <= gw - 1; ++off) {
                        const double r = step_x * off - tx;
                        gx_tab[off + gw - 1] = std::abs(r) <= cut ? std::exp(-r * r * inv2s2) : 0.0;
                    }
                    for (int off = -(gh - 1); off <= gh - 1; ++off) {
                        const double r = step_y * off - ty;
                        gy_tab[off + gh - 1] = !two_d ? 1.0 : (std::abs(r) <= cut ? std::exp(-r * r * inv2s2) : 0.0);
                    }
                    const auto qj = q.row(j);
                    // along x: temp(a, b') = sum_a' Gx(a - a') Q_j(a', b')
                    for (int b = 0; b < gh; ++b)
                        for (int a = 0; a < gw; ++a) {
                            double s = 0.0;
                            for (int a2 = 0; a2 < gw; ++a2) {
                                const double g = gx_tab[a - a2 + gw - 1];
                                if (g != 0.0) s += g * qj[b * gw + a2];
                            }
                            temp[b * gw + a] = s;
                        }
                    // along y
                    for (int b = 0; b < gh; ++b)
                        for (int a = 0; a < gw; ++a) {
                            double s = 0.0;
                            for (int b2 = 0; b2 < gh; ++b2) {
                                const double g = gy_tab[b - b2 + gh - 1];
                                if (g != 0.0) s += g * temp[b2 * gw + a];
                            }
                            msg[b * gw + a] += k * s;
                        }
                }
            }
            double* lg = logits.data() + i * labels;
            for (int c = 0; c < labels; ++c) {
                const double u = unaries[i * labels + c];
                if (!std::isfinite(msg[c])) throw NumericError("non-finite mean-field message");
                lg[c] = std::isinf(u) ? u : u + cfg.pairwise_weight * msg[c];
            }
            softmax_row({lg, static_cast<std::size_t>(labels)}, out.row(i));
        }
    });
    if (logits_out) *logits_out = std::move(logits);
    return out;
}

RegularizeResult regularize(const ScoreVolume& volume, const Image& lab, const CrfConfig& cfg, std::uint64_t seed,
                            const std::vector<std::uint8_t>* ignored)
{
    cfg.validate();
    RegularizeResult res;
    if (cfg.max_iters == 0) {
        res.labels = winner_take_all(volume);
        return res;
    }
    const int w = volume.width(), h = volume.height();
    const std::size_t n = static_cast<std::size_t>(w) * h;
    const CandidateSpec& spec = volume.spec();
    const int labels = volume.candidate_count();
    const bool two_d = spec.task == Task::Flow;

    const auto unaries = unary_logits(volume, ignored);
    res.marginals = initial_marginals(volume, unaries);
    std::vector<double> logits = unaries;

    std::vector<std::uint8_t> support(n, 0);
    for (std::size_t p = 0; p < n; ++p) {
        if (ignored && (*ignored)[p]) continue;
        for (int c = 0; c < labels; ++c)
            if (!std::isinf(unaries[p * labels + c])) {
                support[p] = 1;
                break;
            }
    }

    std::vector<double> vx(labels), vy(labels);
    for (int c = 0; c < labels; ++c) {
        vx[c] = spec.label_value_x(c);
        vy[c] = spec.label_value_y(c);
    }

    for (int t = 0; t < cfg.max_iters; ++t) {
        PlaneField planes(w, h, two_d ? 2 : 1);
        for (int comp = 0; comp < (two_d ? 2 : 1); ++comp) {
            const auto& val = comp == 0 ? vx : vy;
            std::vector<double> expect(n, 0.0);
            for (std::size_t p = 0; p < n; ++p) {
                const auto r = res.marginals.row(p);
                double e = 0.0;
                for (int c = 0; c < labels; ++c) e += r[c] * val[c];
                expect[p] = e;
            }
            const auto fitted = ransac_fit_planes(expect, support, w, h, lab, cfg,
                                                  derive_seed(seed, static_cast<std::uint64_t>(comp)));
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) planes.at(x, y, comp) = fitted.at(x, y);
        }
        Marginals next = mean_field_step(res.marginals, volume, unaries, planes, lab, cfg, &logits);
        if (cfg.step < 1.0) {
            const auto& a = res.marginals.q;
            auto& b = next.q;
            for (std::size_t k = 0; k < b.size(); ++k) b[k] = (1.0 - cfg.step) * a[k] + cfg.step * b[k];
        }
        double change = 0.0;
        for (std::size_t p = 0; p < n; ++p) {
            double tv = 0.0;
            const auto a = res.marginals.row(p), b = next.row(p);
            for (int c = 0; c < labels; ++c) tv += std::abs(a[c] - b[c]);
            change = std::max(change, 0.5 * tv);
        }
        res.marginals = std::move(next);
        res.normalisation_error.push_back(res.marginals.max_normalisation_error());
        res.change.push_back(change);
        res.iterations = t + 1;
        if (change < cfg.tolerance) {
            res.converged = true;
            break;
        }
    }

    res.labels = LabelMap(w, h, spec);
    for (std::size_t p = 0; p < n; ++p) {
        const auto q = res.marginals.row(p);
        int best = -1;
        for (int c = 0; c < labels; ++c) {
            const double u = logits[p * labels + c];
            if (std::isinf(u) && u < 0) continue;
            if (best < 0 || q[c] > q[best]) best = c;
        }
        res.labels.label[p] = best;
    }
    return res;
}

} // namespace lmatch
