#include "lmatch/codebook.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "binio.hpp"
#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"
#include "lmatch/rng.hpp"

namespace lmatch {

namespace {

double sq_dist(const float* a, const double* c, int dim)
{
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double t = a[d] - c[d];
        s += t * t;
    }
    return s;
}

double sq_dist(const float* a, const float* c, int dim)
{
    double s = 0.0;
    for (int d = 0; d < dim; ++d) {
        const double t = static_cast<double>(a[d]) - c[d];
        s += t * t;
    }
    return s;
}

// Nearest centre per sample, ties to the lowest index. Returns inertia.
double assign(std::span<const float> samples, int dim, const std::vector<double>& centers, int words,
              std::vector<int>& label, std::vector<double>& dist)
{
    const std::size_t n = label.size();
    parallel_for(n, [&](std::size_t i) {
        const float* s = samples.data() + i * dim;
        double best = std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int k = 0; k < words; ++k) {
            const double d = sq_dist(s, centers.data() + static_cast<std::size_t>(k) * dim, dim);
            if (d < best) {
                best = d;
                arg = k;
            }
        }
        label[i] = arg;
        dist[i] = best;
    });
    double inertia = 0.0;
    for (double d : dist) inertia += d;
    return inertia;
}

} // namespace

KMeansResult train_kmeans(std::span<const float> samples, int dim, int words, std::uint64_t seed,
                          DescriptorKind kind, const KMeansOptions& options)
{
    if (dim < 1) throw ParameterError("k-means dimension must be >= 1");
    if (words < 1) throw ParameterError("k-means needs at least one word");
    if (samples.size() % dim != 0) throw ShapeError("sample buffer is not a multiple of the dimension");
    const std::size_t n = samples.size() / dim;
    if (n < static_cast<std::size_t>(words))
        throw ParameterError("k-means needs at least K=" + std::to_string(words) + " samples, got " +
                             std::to_string(n));

    Rng rng(seed);
    std::vector<double> centers(static_cast<std::size_t>(words) * dim);
    auto set_center = [&](int k, std::size_t i) {
        for (int d = 0; d < dim; ++d) centers[static_cast<std::size_t>(k) * dim + d] = samples[i * dim + d];
    };

    // k-means++ seeding
    set_center(0, static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1)));
    std::vector<double> d2(n);
    for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(samples.data() + i * dim, centers.data(), dim);
    for (int k = 1; k < words; ++k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = n - 1;
        if (total <= 0.0) {
            pick = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
        } else {
            const double target = rng.uniform() * total;
            double run = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                run += d2[i];
                if (run > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            while (d2[pick] <= 0.0 && pick > 0) --pick;
        }
        set_center(k, pick);
        const double* c = centers.data() + static_cast<std::size_t>(k) * dim;
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(samples.data() + i * dim, c, dim));
    }

    KMeansResult result;
    std::vector<int> label(n);
    std::vector<double> dist(n);
    double inertia = assign(samples, dim, centers, words, label, dist);
    result.inertia.push_back(inertia);

    std::vector<double> acc(centers.size());
    std::vector<std::size_t> count(words);
    for (int it = 0; it < options.max_iterations && inertia > 0.0; ++it) {
        std::fill(acc.begin(), acc.end(), 0.0);
        std::fill(count.begin(), count.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const int k = label[i];
            ++count[k];
            for (int d = 0; d < dim; ++d) acc[static_cast<std::size_t>(k) * dim + d] += samples[i * dim + d];
        }
        for (int k = 0; k < words; ++k) {
            if (count[k] == 0) continue; // empty cluster keeps its centre
            for (int d = 0; d < dim; ++d)
                centers[static_cast<std::size_t>(k) * dim + d] =
                    acc[static_cast<std::size_t>(k) * dim + d] / static_cast<double>(count[k]);
        }
        const double next = assign(samples, dim, centers, words, label, dist);
        result.inertia.push_back(next);
        const double rel = (inertia - next) / inertia;
        inertia = next;
        if (rel < options.rel_tolerance) break;
    }

    Codebook& cb = result.codebook;
    cb.kind = kind;
    cb.words = words;
    cb.dim = dim;
    cb.seed = seed;
    cb.centers.resize(centers.size());
    for (std::size_t i = 0; i < centers.size(); ++i) cb.centers[i] = static_cast<float>(centers[i]);

    // sigma_w: mean distance from each sample to its nearest (stored) centre.
    parallel_for(n, [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < words; ++k)
            best = std::min(best, sq_dist(samples.data() + i * dim, cb.centers.data() + static_cast<std::size_t>(k) * dim, dim));
        dist[i] = std::sqrt(best);
    });
    double mean = 0.0;
    for (double d : dist) mean += d;
    mean /= static_cast<double>(n);
    cb.kernel_width = std::max(mean, 1e-6);
    return result;
}

void append_samples(const DescriptorField& field, int stride, std::vector<float>& out)
{
    if (stride < 1) throw ParameterError("sample stride must be >= 1");
    const std::size_t pixels = static_cast<std::size_t>(field.width()) * field.height();
    for (std::size_t p = 0; p < pixels; p += stride) {
        const auto v = field.at(static_cast<int>(p % field.width()), static_cast<int>(p / field.width()));
        out.insert(out.end(), v.begin(), v.end());
    }
}

SoftAssignmentField::SoftAssignmentField(int width, int height, int per_pixel, int words)
    : width_(width), height_(height), per_pixel_(per_pixel), words_(words),
      entries_(static_cast<std::size_t>(width) * height * per_pixel)
{
}

Image SoftAssignmentField::to_word_planes() const
{
    Image img(width_, height_, words_);
    for (int y = 0; y < height_; ++y)
        for (int x = 0; x < width_; ++x)
            for (const auto& e : at(x, y)) img.at(static_cast<int>(e.word), y, x) += e.weight;
    return img;
}

SoftAssignmentField soft_assign(const DescriptorField& field, const Codebook& cb)
{
    if (field.dim() != cb.dim)
        throw ShapeError("descriptor dim " + std::to_string(field.dim()) + " does not match codebook dim " +
                         std::to_string(cb.dim));
    if (cb.words < 1) throw ParameterError("empty codebook");
    const int m = std::min(kSoftAssignNeighbours, cb.words);
    SoftAssignmentField out(field.width(), field.height(), m, cb.words);
    const double inv2s2 = 1.0 / (2.0 * cb.kernel_width * cb.kernel_width);
    parallel_for(static_cast<std::size_t>(field.height()), [&](std::size_t yy) {
        const int y = static_cast<int>(yy);
        std::vector<std::pair<double, int>> d(cb.words);
        std::vector<double> w(m);
        for (int x = 0; x < field.width(); ++x) {
            const auto v = field.at(x, y);
            for (int k = 0; k < cb.words; ++k) d[k] = {sq_dist(v.data(), cb.center(k).data(), cb.dim), k};
            std::partial_sort(d.begin(), d.begin() + m, d.end());
            double total = 0.0;
            for (int j = 0; j < m; ++j) total += w[j] = std::exp(-(d[j].first - d[0].first) * inv2s2);
            auto dst = out.at(x, y);
            for (int j = 0; j < m; ++j) dst[j] = {static_cast<std::uint32_t>(d[j].second), static_cast<float>(w[j] / total)};
        }
    });
    return out;
}

namespace {
constexpr std::string_view kCodebookMagic = "LMATCH-CODEBOOK 1";

std::string format_double(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string expect_field(detail::ByteReader& r, std::string_view key)
{
    const std::string line = r.line();
    if (line.size() <= key.size() || line.compare(0, key.size(), key) != 0 || line[key.size()] != ' ')
        throw FormatError("codebook header: expected '" + std::string(key) + "', got '" + line + "'");
    return line.substr(key.size() + 1);
}

template <typename T>
T parse_number(const std::string& s)
{
    T v{};
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
    return v;
}
} // namespace

std::vector<std::uint8_t> serialize_codebook(const Codebook& cb)
{
    detail::ByteWriter w;
    w.text(kCodebookMagic);
    w.text("\nkind ");
    w.text(to_string(cb.kind));
    w.text("\nwords " + std::to_string(cb.words));
    w.text("\ndim " + std::to_string(cb.dim));
    w.text("\nsigma_w " + format_double(cb.kernel_width));
    w.text("\nseed " + std::to_string(cb.seed));
    w.text("\nend\n");
    for (float v : cb.centers) w.put(v);
    return std::move(w.bytes());
}

Codebook deserialize_codebook(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes);
    if (r.line() != kCodebookMagic) throw FormatError("not a codebook file (bad magic)");
    Codebook cb;
    cb.kind = descriptor_kind_from_string(expect_field(r, "kind"));
    cb.words = parse_number<int>(expect_field(r, "words"));
    cb.dim = parse_number<int>(expect_field(r, "dim"));
    cb.kernel_width = std::strtod(expect_field(r, "sigma_w").c_str(), nullptr);
    cb.seed = parse_number<std::uint64_t>(expect_field(r, "seed"));
    if (r.line() != "end") throw FormatError("codebook header: missing 'end'");
    if (cb.words < 1 || cb.dim < 1) throw FormatError("codebook header: bad shape");
    const std::size_t count = static_cast<std::size_t>(cb.words) * cb.dim;
    if (r.remaining() != count * sizeof(float)) throw FormatError("codebook payload size mismatch");
    cb.centers.resize(count);
    for (auto& v : cb.centers) v = r.get<float>();
    return cb;
}

std::uint64_t Codebook::digest() const { return detail::fnv1a(serialize_codebook(*this)); }

void save_codebook(const Codebook& cb, const std::filesystem::path& path)
{
    detail::write_file(path, serialize_codebook(cb));
}

Codebook load_codebook(const std::filesystem::path& path)
{
    try {
        return deserialize_codebook(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace lmatch
