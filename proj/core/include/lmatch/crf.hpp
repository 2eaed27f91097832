#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lmatch/grid.hpp"
#include "lmatch/matcher.hpp"

namespace lmatch {

struct CrfConfig {
    double sigma_app = 8.0;   // appearance kernel width, Lab units
    double sigma_loc = 21.0;  // location kernel width, pixels
    double sigma_pln = 1.5;   // plane compatibility width, label units
    double inlier = 1.0;      // RANSAC inlier threshold
    double pairwise_weight = 1.0;
    int max_iters = 20;
    int ransac_iters = 64;
    int radius = 0;           // spatial truncation; 0 means ceil(3 sigma_loc)
    double compat_cutoff = 6.0; // compatibility treated as 0 beyond this many sigma_pln
    double tolerance = 1e-3;  // early stop on max per-pixel total-variation change of Q
    bool anchor_at_pixel = false; // RANSAC: 2-point planes through the pixel's own value instead of 3-point planes
    bool refine_planes = true;    // least-squares refit of the winning plane on its inliers
    double step = 1.0;        // Q <- (1 - step) Q + step * update; 1 is the plain synchronous update

    int effective_radius() const;
    void validate() const;
};

// Bilateral appearance/location kernel between pixels i and j.
double pairwise_kernel(std::span<const float> color_i, std::span<const float> color_j, PixelCoord xi, PixelCoord xj,
                       const CrfConfig& cfg);
double pairwise_kernel(const Image& lab, PixelCoord xi, PixelCoord xj, const CrfConfig& cfg);

// Plane compatibility exp(-|d_i - d_j - p_i . (x_j - x_i)|^2 / (2 sigma_pln^2)).
double plane_compatibility(double d_i, double d_j, std::array<double, 2> p_i, PixelCoord xi, PixelCoord xj,
                           double sigma_pln);

// Per-pixel local plane coefficients, one (p1, p2) pair per label component.
struct PlaneField {
    int width = 0;
    int height = 0;
    int components = 1;
    std::vector<std::array<double, 2>> coeffs; // (y * width + x) * components + component

    PlaneField() = default;
    PlaneField(int w, int h, int comps)
        : width(w), height(h), components(comps), coeffs(static_cast<std::size_t>(w) * h * comps, {0.0, 0.0})
    {
    }
    std::array<double, 2>& at(int x, int y, int comp = 0)
    {
        return coeffs[(static_cast<std::size_t>(y) * width + x) * components + comp];
    }
    const std::array<double, 2>& at(int x, int y, int comp = 0) const
    {
        return coeffs[(static_cast<std::size_t>(y) * width + x) * components + comp];
    }
};

// Robust local plane per pixel over a scalar field (disparity or one flow
// component). Hypotheses are affine planes through three random valid
// neighbours within the truncation radius (two neighbours plus the pixel
// itself when only two are available); each is scored by the kernel-weighted
// count of neighbours within `inlier` of the plane anchored at the
// hypothesis' own value at x_i. With anchor_at_pixel every hypothesis is the
// 2-point plane through d_i. Fewer than two valid neighbours gives p = 0.
PlaneField ransac_fit_planes(const std::vector<double>& values, const std::vector<std::uint8_t>& valid, int width,
                             int height, const Image& lab, const CrfConfig& cfg, std::uint64_t seed);

struct Marginals {
    int width = 0;
    int height = 0;
    int labels = 0;
    std::vector<double> q; // (y * width + x) * labels + label

    Marginals() = default;
    Marginals(int w, int h, int l) : width(w), height(h), labels(l), q(static_cast<std::size_t>(w) * h * l, 0.0) {}
    std::span<double> row(std::size_t pixel) { return {q.data() + pixel * labels, static_cast<std::size_t>(labels)}; }
    std::span<const double> row(std::size_t pixel) const
    {
        return {q.data() + pixel * labels, static_cast<std::size_t>(labels)};
    }
    // max over pixels of |sum_l Q - 1|
    double max_normalisation_error() const;
};

// Unary logits H(x, c) with invalid candidates at -inf. Pixels flagged in
// `ignored` (inverse-validation failures) get uniform logits over their
// in-bounds candidates.
std::vector<double> unary_logits(const ScoreVolume& volume, const std::vector<std::uint8_t>* ignored = nullptr);

// Softmax of the unary logits.
Marginals initial_marginals(const ScoreVolume& volume, const std::vector<double>& logits);

// One synchronous mean-field update:
//   Q_i(c) ~ exp(U_i(c) + w sum_{j != i, |x_j - x_i| <= rho} k_ij sum_c' mu_ij(c, c') Q_j(c'))
// If `logits_out` is given it receives the unnormalised exponent.
Marginals mean_field_step(const Marginals& q, const ScoreVolume& volume, const std::vector<double>& unaries,
                          const PlaneField& planes, const Image& lab, const CrfConfig& cfg,
                          std::vector<double>* logits_out = nullptr);

struct RegularizeResult {
    LabelMap labels;
    Marginals marginals;
    int iterations = 0;
    bool converged = false;
    std::vector<double> normalisation_error; // per mean-field step
    std::vector<double> change;              // max total-variation change per step
};

// Alternates RANSAC plane fitting on E_Q[label] with mean-field updates,
// starting from the softmax of the scores; output is the per-pixel argmax.
RegularizeResult regularize(const ScoreVolume& volume, const Image& lab, const CrfConfig& cfg, std::uint64_t seed,
                            const std::vector<std::uint8_t>* ignored = nullptr);

} // namespace lmatch
