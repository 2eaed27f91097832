#include "lmatch/boost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"
#include "lmatch/rng.hpp"

namespace lmatch {

using nlohmann::json;

namespace {

bool inside(PixelCoord p, int w, int h) { return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h; }

struct TruthView {
    int width = 0;
    int height = 0;
};

TruthView dims_of(const GroundTruth& gt)
{
    return std::visit([](const auto& g) { return TruthView{g.width, g.height}; }, gt);
}

// True correspondence of x1, if labelled and in bounds.
std::optional<PixelCoord> true_match(const GroundTruth& gt, int x, int y)
{
    const auto [w, h] = dims_of(gt);
    const std::size_t i = static_cast<std::size_t>(y) * w + x;
    PixelCoord m;
    if (const auto* d = std::get_if<DisparityMap>(&gt)) {
        if (!d->valid[i] || !std::isfinite(d->disparity[i])) return std::nullopt;
        m = {x - static_cast<int>(std::lround(d->disparity[i])), y};
    } else if (const auto* f = std::get_if<FlowField>(&gt)) {
        if (!f->valid[i] || !std::isfinite(f->u[i]) || !std::isfinite(f->v[i])) return std::nullopt;
        m = {x + static_cast<int>(std::lround(f->u[i])), y + static_cast<int>(std::lround(f->v[i]))};
    } else {
        const auto& c = std::get<ChangeMask>(gt);
        if (!c.valid[i]) return std::nullopt;
        m = {x, y};
    }
    if (!inside(m, w, h)) return std::nullopt;
    return m;
}

} // namespace

std::vector<TrainSample> assemble_samples(const std::vector<GroundTruth>& truths, const CandidateSpec& candidates,
                                          const SamplingOptions& options, std::uint64_t seed)
{
    if (options.neg_ratio < 1) throw ParameterError("negative ratio must be >= 1");
    if (options.positive_stride < 1) throw ParameterError("positive stride must be >= 1");
    Rng rng(seed);
    const auto displacements = candidates.displacements();
    std::vector<TrainSample> out;
    std::size_t positives = 0, negatives = 0;
    std::size_t labelled = 0;
    std::vector<PixelCoord> pool;

    for (std::size_t p = 0; p < truths.size(); ++p) {
        const GroundTruth& gt = truths[p];
        if (task_of(gt) != candidates.task)
            throw ConfigError("ground truth of pair " + std::to_string(p) + " is " +
                              std::string(to_string(task_of(gt))) + " but candidates are " +
                              std::string(to_string(candidates.task)));
        const auto [w, h] = dims_of(gt);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const auto match = true_match(gt, x, y);
                if (!match) continue;
                if (labelled++ % options.positive_stride != 0) continue;
                const PixelCoord x1{x, y};
                const auto pair = static_cast<std::uint32_t>(p);
                if (candidates.task == Task::Change) {
                    const auto& mask = std::get<ChangeMask>(gt);
                    const bool changed = mask.changed[static_cast<std::size_t>(y) * w + x] != 0;
                    out.push_back({pair, x1, x1, static_cast<std::int8_t>(changed ? -1 : 1), 0.0});
                    ++(changed ? negatives : positives);
                    continue;
                }
                out.push_back({pair, x1, *match, 1, 0.0});
                ++positives;
                pool.clear();
                for (const auto& d : displacements) {
                    const PixelCoord x2{x + d.dx, y + d.dy};
                    if (!inside(x2, w, h)) continue;
                    if (std::max(std::abs(x2.x - match->x), std::abs(x2.y - match->y)) <= options.exclusion_radius)
                        continue;
                    pool.push_back(x2);
                }
                if (pool.empty()) continue;
                for (int k = 0; k < options.neg_ratio; ++k) {
                    const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1);
                    out.push_back({pair, x1, pool[static_cast<std::size_t>(pick)], -1, 0.0});
                    ++negatives;
                }
            }
    }
    if (labelled == 0) throw DataError("no labelled pixels in training data");
    if (positives == 0 || negatives == 0) throw DataError("training data needs both matching and non-matching samples");
    const double wp = 0.5 / static_cast<double>(positives);
    const double wn = 0.5 / static_cast<double>(negatives);
    for (auto& s : out) s.weight = s.label > 0 ? wp : wn;
    return out;
}

namespace {

std::vector<float> thresholds_from_sorted(const std::vector<float>& sorted, int count)
{
    std::vector<float> out;
    const std::size_t n = sorted.size();
    if (n == 0 || count < 1) return out;
    for (int q = 0; q < count; ++q) {
        const std::size_t rank = std::min(n - 1, static_cast<std::size_t>(q) * n / static_cast<std::size_t>(count));
        const float v = sorted[rank];
        if (out.empty() || v != out.back()) out.push_back(v);
    }
    return out;
}

// Sweep over a value-sorted order. `order` lists sample indices by
// increasing value, thresholds ascend.
StumpFit fit_sorted(std::span<const std::uint32_t> order, std::span<const float> values,
                    std::span<const std::int8_t> targets, std::span<const double> weights,
                    std::span<const float> thresholds)
{
    const std::size_t n = order.size();
    std::vector<double> wl(n + 1, 0.0), sl(n + 1, 0.0), wr(n + 1, 0.0), sr(n + 1, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = order[k];
        wl[k + 1] = wl[k] + weights[i];
        sl[k + 1] = sl[k] + weights[i] * targets[i];
    }
    for (std::size_t k = n; k-- > 0;) {
        const auto i = order[k];
        wr[k] = wr[k + 1] + weights[i];
        sr[k] = sr[k + 1] + weights[i] * targets[i];
    }

    StumpFit best;
    best.error = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    for (float theta : thresholds) {
        while (k < n && values[order[k]] <= theta) ++k;
        if (k == 0 || k == n) continue;
        const double b = sl[k] / wl[k];
        const double ab = sr[k] / wr[k];
        const double err = (wl[k] - sl[k] * sl[k] / wl[k]) + (wr[k] - sr[k] * sr[k] / wr[k]);
        if (err < best.error) {
            best.theta = theta;
            best.b = b;
            best.a = ab - b;
            best.error = err;
        }
    }
    if (std::isinf(best.error)) {
        best.degenerate = true;
        best.theta = n == 0 ? 0.0 : values[order[n - 1]];
        best.a = 0.0;
        best.b = wl[n] > 0 ? sl[n] / wl[n] : 0.0;
        best.error = wl[n] - (wl[n] > 0 ? sl[n] * sl[n] / wl[n] : 0.0);
    }
    return best;
}

std::vector<std::uint32_t> sorted_order(std::span<const float> values)
{
    std::vector<std::uint32_t> order(values.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    return order;
}

} // namespace

std::vector<float> quantile_thresholds(std::span<const float> values, int count)
{
    std::vector<float> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    return thresholds_from_sorted(sorted, count);
}

StumpFit fit_stump(std::span<const float> values, std::span<const std::int8_t> targets,
                   std::span<const double> weights, std::span<const float> thresholds)
{
    if (targets.size() != values.size() || weights.size() != values.size())
        throw ShapeError("fit_stump: values, targets and weights differ in length");
    const auto order = sorted_order(values);
    return fit_sorted(order, values, targets, weights, thresholds);
}

RepresentationConfig MatchingClassifier::representation_config() const
{
    RepresentationConfig cfg;
    cfg.bow_families.clear();
    cfg.average_features = false;
    cfg.descriptor_params = descriptor_params;
    for (const auto& f : families) {
        if (f.type == FamilyType::BagOfWords) {
            cfg.bow_families.push_back(f.descriptor);
            cfg.bow_factor = f.factor;
        } else {
            cfg.average_features = true;
        }
    }
    return cfg;
}

double evaluate(const MatchingClassifier& model, const ImageRepresentation& rep1, const ImageRepresentation& rep2,
                PixelCoord x1, PixelCoord x2)
{
    double score = 0.0;
    for (const auto& s : model.stumps) score += s.respond(stump_feature(model, rep1, rep2, x1, x2, s.index));
    return score;
}

MatchingClassifier train(std::vector<TrainSample> samples, const std::vector<ImageRepresentation>& reps1,
                         const std::vector<ImageRepresentation>& reps2, const RectangleSet& rects,
                         const std::vector<FamilySpec>& families, const BoostOptions& options, TrainingTrace* trace)
{
    if (options.dims_per_round < 1) throw ParameterError("dims_per_round must be >= 1");
    if (options.rounds < 0) throw ParameterError("number of boosting rounds must be >= 0");
    if (reps1.size() != reps2.size()) throw ShapeError("representation lists differ in length");
    if (samples.empty()) throw DataError("no training samples");
    for (const auto& s : samples)
        if (s.pair >= reps1.size()) throw DataError("sample refers to missing image pair " + std::to_string(s.pair));

    MatchingClassifier model;
    model.rects = rects;
    model.families = families;
    model.absolute = options.absolute;
    model.meta.seed = options.seed;
    model.meta.dims_per_round = options.dims_per_round;
    model.meta.rounds = options.rounds;
    const FeatureSpace space = model.feature_space();
    if (space.size() == 0) throw ConfigError("empty feature space");

    const std::size_t n = samples.size();
    std::vector<double> w(n);
    std::vector<std::int8_t> y(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!(samples[i].weight > 0.0) || !std::isfinite(samples[i].weight))
            throw DataError("sample weights must be finite and positive");
        y[i] = samples[i].label;
        total += samples[i].weight;
    }
    for (std::size_t i = 0; i < n; ++i) w[i] = samples[i].weight / total;

    auto eval_into = [&](const FeatureIndex& idx, std::vector<float>& values) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& s = samples[i];
            values[i] = static_cast<float>(
                feature_diff(rects, reps1[s.pair], reps2[s.pair], s.x1, s.x2, idx, options.absolute));
        }
    };

    double loss = 1.0;
    if (trace) {
        trace->loss.assign(1, loss);
        trace->weight_sum.clear();
    }

    struct Candidate {
        FeatureIndex idx;
        std::uint64_t ordinal = 0;
        StumpFit fit;
    };
    std::vector<Candidate> cands(static_cast<std::size_t>(options.dims_per_round));
    std::vector<float> values(n);

    for (int round = 0; round < options.rounds; ++round) {
        Rng rng(derive_seed(options.seed, static_cast<std::uint64_t>(round)));
        for (auto& c : cands) {
            c.ordinal = static_cast<std::uint64_t>(rng.uniform_int(0, static_cast<std::int64_t>(space.size()) - 1));
            c.idx = space.decode(c.ordinal);
        }
        parallel_for(cands.size(), [&](std::size_t k) {
            std::vector<float> v(n);
            eval_into(cands[k].idx, v);
            const auto order = sorted_order(v);
            std::vector<float> sorted(n);
            for (std::size_t i = 0; i < n; ++i) sorted[i] = v[order[i]];
            const auto grid = thresholds_from_sorted(sorted, options.thresholds);
            cands[k].fit = fit_sorted(order, v, y, w, grid);
        });
        const Candidate* best = &cands[0];
        for (const auto& c : cands)
            if (c.fit.error < best->fit.error || (c.fit.error == best->fit.error && c.ordinal < best->ordinal))
                best = &c;

        WeakStump stump{best->idx, static_cast<float>(best->fit.theta), static_cast<float>(best->fit.a),
                        static_cast<float>(best->fit.b)};
        model.stumps.push_back(stump);

        eval_into(stump.index, values);
        double z = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] *= std::exp(-y[i] * stump.respond(values[i]));
            z += w[i];
        }
        if (!std::isfinite(z) || z <= 0.0)
            throw NumericError("boosting weights became non-finite in round " + std::to_string(round));
        double sum = 0.0;
        for (auto& wi : w) {
            wi /= z;
            sum += wi;
        }
        loss *= z;
        if (trace) {
            trace->loss.push_back(loss);
            trace->weight_sum.push_back(sum);
        }
    }
    return model;
}

namespace {

constexpr std::string_view kModelMagic = "LMATCH-MODEL 1";

std::string hex64(std::uint64_t v)
{
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

std::uint64_t parse_hex64(const std::string& s)
{
    if (s.size() != 16) throw FormatError("bad digest '" + s + "'");
    return std::stoull(s, nullptr, 16);
}

json params_to_json(const DescriptorParams& p)
{
    return {
        {"sift", {{"patch", p.sift.patch}}},
        {"lqtp", {{"tau", p.lqtp.tau}, {"bins", p.lqtp.bins}, {"window", p.lqtp.window}}},
        {"selfsim",
         {{"patch", p.self_similarity.patch},
          {"window", p.self_similarity.window},
          {"radial_bins", p.self_similarity.radial_bins},
          {"angular_bins", p.self_similarity.angular_bins},
          {"noise_var", p.self_similarity.noise_var}}},
    };
}

DescriptorParams params_from_json(const json& j)
{
    DescriptorParams p;
    p.sift.patch = j.at("sift").at("patch").get<int>();
    p.lqtp.tau = j.at("lqtp").at("tau").get<float>();
    p.lqtp.bins = j.at("lqtp").at("bins").get<int>();
    p.lqtp.window = j.at("lqtp").at("window").get<int>();
    const auto& s = j.at("selfsim");
    p.self_similarity.patch = s.at("patch").get<int>();
    p.self_similarity.window = s.at("window").get<int>();
    p.self_similarity.radial_bins = s.at("radial_bins").get<int>();
    p.self_similarity.angular_bins = s.at("angular_bins").get<int>();
    p.self_similarity.noise_var = s.at("noise_var").get<float>();
    return p;
}

} // namespace

std::vector<std::uint8_t> serialize_model(const MatchingClassifier& m)
{
    json h;
    json fams = json::array();
    for (std::size_t i = 0; i < m.families.size(); ++i) {
        const auto& f = m.families[i];
        fams.push_back({{"type", f.type == FamilyType::BagOfWords ? "bow" : "average"},
                        {"descriptor", std::string(to_string(f.descriptor))},
                        {"channels", f.channels},
                        {"factor", f.factor},
                        {"codebook_digest", hex64(i < m.codebook_digests.size() ? m.codebook_digests[i] : 0)}});
    }
    h["families"] = fams;
    h["descriptor_params"] = params_to_json(m.descriptor_params);
    json rects = json::array();
    for (const auto& r : m.rects.rects) rects.push_back({r.dx, r.dy, r.w, r.h});
    h["rectangles"] = {{"seed", m.rects.seed}, {"max_extent", m.rects.max_extent}, {"rects", rects}};
    h["absolute"] = m.absolute;
    h["training"] = {{"seed", m.meta.seed},
                     {"neg_ratio", m.meta.neg_ratio},
                     {"dims_per_round", m.meta.dims_per_round},
                     {"rounds", m.meta.rounds},
                     {"task", std::string(to_string(m.meta.task))}};

    detail::ByteWriter w;
    w.text(kModelMagic);
    w.text("\n");
    w.text(h.dump());
    w.text("\nstumps " + std::to_string(m.stumps.size()) + "\n");
    for (const auto& s : m.stumps) {
        w.put<std::uint8_t>(s.index.family);
        w.put<std::uint16_t>(s.index.rect);
        w.put<std::uint16_t>(s.index.channel);
        w.put<float>(s.theta);
        w.put<float>(s.a);
        w.put<float>(s.b);
    }
    return std::move(w.bytes());
}

MatchingClassifier deserialize_model(std::span<const std::uint8_t> bytes)
{
    detail::ByteReader r(bytes);
    if (r.line() != kModelMagic) throw FormatError("not a model file (bad magic)");
    MatchingClassifier m;
    try {
        const json h = json::parse(r.line());
        for (const auto& f : h.at("families")) {
            FamilySpec spec;
            const auto type = f.at("type").get<std::string>();
            if (type == "bow") spec.type = FamilyType::BagOfWords;
            else if (type == "average") spec.type = FamilyType::Average;
            else throw FormatError("unknown family type '" + type + "'");
            spec.descriptor = descriptor_kind_from_string(f.at("descriptor").get<std::string>());
            spec.channels = f.at("channels").get<int>();
            spec.factor = f.at("factor").get<int>();
            m.families.push_back(spec);
            m.codebook_digests.push_back(parse_hex64(f.at("codebook_digest").get<std::string>()));
        }
        m.descriptor_params = params_from_json(h.at("descriptor_params"));
        const auto& rs = h.at("rectangles");
        m.rects.seed = rs.at("seed").get<std::uint64_t>();
        m.rects.max_extent = rs.at("max_extent").get<int>();
        for (const auto& q : rs.at("rects")) m.rects.rects.push_back({q.at(0), q.at(1), q.at(2), q.at(3)});
        m.absolute = h.at("absolute").get<bool>();
        const auto& t = h.at("training");
        m.meta.seed = t.at("seed").get<std::uint64_t>();
        m.meta.neg_ratio = t.at("neg_ratio").get<int>();
        m.meta.dims_per_round = t.at("dims_per_round").get<int>();
        m.meta.rounds = t.at("rounds").get<int>();
        m.meta.task = task_from_string(t.at("task").get<std::string>());
    } catch (const json::exception& e) {
        throw FormatError(std::string("model header: ") + e.what());
    }

    const std::string count_line = r.line();
    if (count_line.rfind("stumps ", 0) != 0) throw FormatError("model: missing stump count");
    const auto count = std::stoull(count_line.substr(7));
    if (r.remaining() != count * 17) throw FormatError("model: stump table size mismatch");
    const FeatureSpace space = m.feature_space();
    m.stumps.resize(count);
    for (auto& s : m.stumps) {
        s.index.family = r.get<std::uint8_t>();
        s.index.rect = r.get<std::uint16_t>();
        s.index.channel = r.get<std::uint16_t>();
        s.theta = r.get<float>();
        s.a = r.get<float>();
        s.b = r.get<float>();
        if (!space.valid(s.index)) throw FormatError("model: stump refers to an invalid feature index");
    }
    return m;
}

void save_model(const MatchingClassifier& model, const std::filesystem::path& path)
{
    detail::write_file(path, serialize_model(model));
}

MatchingClassifier load_model(const std::filesystem::path& path)
{
    try {
        return deserialize_model(detail::read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace lmatch
