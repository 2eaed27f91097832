#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "lmatch/boost.hpp"
#include "lmatch/error.hpp"
#include "lmatch/rng.hpp"
#include "support.hpp"

using namespace lmatch;

namespace {

// 20x1 stereo truth, labelled only on the right half with d = 0.
DisparityMap half_labelled()
{
    DisparityMap d(20, 1);
    for (int x = 10; x < 20; ++x) d.valid[static_cast<std::size_t>(x)] = 1;
    return d;
}

} // namespace

TEST(AssembleSamples, NegativeRatioAndWeights)
{
    const auto s = assemble_samples({half_labelled()}, CandidateSpec::stereo(8), {50, 1, 1}, 5);
    int pos = 0, neg = 0;
    double wp = 0.0, wn = 0.0, one_pos = 0.0, one_neg = 0.0;
    for (const auto& t : s) {
        if (t.label > 0) {
            ++pos;
            wp += t.weight;
            one_pos = t.weight;
            EXPECT_EQ(t.x1, t.x2);
        } else {
            ++neg;
            wn += t.weight;
            one_neg = t.weight;
            EXPECT_GT(std::abs(t.x2.x - t.x1.x), 1);
            EXPECT_GE(t.x2.x, 0);
            EXPECT_EQ(t.x2.y, t.x1.y);
            EXPECT_GE(t.x1.x, 10);
        }
    }
    EXPECT_EQ(pos, 10);
    EXPECT_EQ(neg, 500);
    EXPECT_NEAR(one_pos / one_neg, 50.0, 1e-9);
    EXPECT_NEAR(wp, wn, 1e-12);
}

TEST(AssembleSamples, FlowPositivesRounded)
{
    FlowField f(10, 10);
    f.valid[55] = 1;
    f.u[55] = 1.6f;
    f.v[55] = -2.4f;
    const auto s = assemble_samples({f}, CandidateSpec::flow(-3, 3, -3, 3), {4, 1, 1}, 1);
    ASSERT_EQ(s.size(), 5u);
    EXPECT_EQ(s[0].x1, (PixelCoord{5, 5}));
    EXPECT_EQ(s[0].x2, (PixelCoord{7, 3}));
    for (std::size_t i = 1; i < s.size(); ++i)
        EXPECT_GT(std::max(std::abs(s[i].x2.x - 7), std::abs(s[i].x2.y - 3)), 1);
}

TEST(AssembleSamples, ChangeUsesIdentityAndMask)
{
    ChangeMask m(4, 3);
    for (std::size_t i = 0; i < m.valid.size(); ++i) {
        m.valid[i] = 1;
        m.changed[i] = i % 3 == 0;
    }
    const auto s = assemble_samples({m}, CandidateSpec::change(), {50, 1, 1}, 2);
    ASSERT_EQ(s.size(), 12u);
    for (const auto& t : s) {
        EXPECT_EQ(t.x1, t.x2);
        const bool changed = m.changed[static_cast<std::size_t>(t.x1.y) * 4 + t.x1.x] != 0;
        EXPECT_EQ(t.label, changed ? -1 : 1);
    }
}

TEST(AssembleSamples, DeterministicPerSeed)
{
    auto key = [](const std::vector<TrainSample>& v) {
        std::vector<int> out;
        for (const auto& t : v) out.push_back(t.x2.x);
        return out;
    };
    const auto a = assemble_samples({half_labelled()}, CandidateSpec::stereo(8), {5, 1, 1}, 9);
    const auto b = assemble_samples({half_labelled()}, CandidateSpec::stereo(8), {5, 1, 1}, 9);
    const auto c = assemble_samples({half_labelled()}, CandidateSpec::stereo(8), {5, 1, 1}, 10);
    EXPECT_EQ(key(a), key(b));
    EXPECT_NE(key(a), key(c));
}

TEST(AssembleSamples, Errors)
{
    EXPECT_THROW(assemble_samples({DisparityMap(5, 5)}, CandidateSpec::stereo(3), {}, 0), DataError);
    EXPECT_THROW(assemble_samples({half_labelled()}, CandidateSpec::flow(0, 1, 0, 1), {}, 0), ConfigError);
    EXPECT_THROW(assemble_samples({half_labelled()}, CandidateSpec::stereo(3), {0, 1, 1}, 0), ParameterError);
}

TEST(Thresholds, QuantileRanks)
{
    std::vector<float> v(100);
    for (int i = 0; i < 100; ++i) v[static_cast<std::size_t>(99 - i)] = static_cast<float>(i);
    EXPECT_EQ(quantile_thresholds(v, 4), (std::vector<float>{0, 25, 50, 75}));
    EXPECT_EQ(quantile_thresholds(std::vector<float>(10, 2.0f), 64), (std::vector<float>{2.0f}));
    EXPECT_TRUE(quantile_thresholds({}, 64).empty());
}

TEST(FitStump, TwoSampleExample)
{
    const std::vector<float> v{0.0f, 1.0f};
    const std::vector<std::int8_t> y{1, -1};
    const std::vector<double> w{1.0, 1.0};
    const std::vector<float> grid{0.5f};
    const auto f = fit_stump(v, y, w, grid);
    EXPECT_FALSE(f.degenerate);
    EXPECT_EQ(f.theta, 0.5);
    EXPECT_DOUBLE_EQ(f.b, 1.0);
    EXPECT_DOUBLE_EQ(f.a, -2.0);
    EXPECT_DOUBLE_EQ(f.error, 0.0);
}

TEST(FitStump, ConstantTarget)
{
    Rng rng(3);
    std::vector<float> v(50);
    for (auto& x : v) x = static_cast<float>(rng.uniform());
    const std::vector<std::int8_t> y(50, 1);
    const std::vector<double> w(50, 0.02);
    const auto f = fit_stump(v, y, w, quantile_thresholds(v));
    EXPECT_NEAR(f.a, 0.0, 1e-12);
    EXPECT_NEAR(f.b, 1.0, 1e-12);
    EXPECT_NEAR(f.error, 0.0, 1e-12);
}

TEST(FitStump, DegenerateGrid)
{
    const std::vector<float> v{0.0f, 1.0f, 2.0f};
    const std::vector<std::int8_t> y{1, -1, -1};
    const std::vector<double> w{0.5, 0.25, 0.25};
    const std::vector<float> grid{5.0f};
    const auto f = fit_stump(v, y, w, grid);
    EXPECT_TRUE(f.degenerate);
    EXPECT_EQ(f.a, 0.0);
    EXPECT_DOUBLE_EQ(f.b, 0.0);
    EXPECT_THROW(fit_stump(v, y, std::vector<double>{1.0}, grid), ShapeError);
}

TEST(FitStump, MatchesBruteForce)
{
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 100;
        std::vector<float> v(n);
        std::vector<std::int8_t> y(n);
        std::vector<double> w(n);
        for (int i = 0; i < n; ++i) {
            // coarse values so ties inside partitions occur
            v[i] = static_cast<float>(rng.uniform_int(0, 40)) * 0.25f - 5.0f;
            y[i] = rng.uniform() < 0.4 ? 1 : -1;
            w[i] = rng.uniform(0.1, 2.0);
        }
        const auto grid = quantile_thresholds(v, 64);

        double best_err = std::numeric_limits<double>::infinity(), best_a = 0, best_b = 0;
        float best_theta = 0;
        for (float t : grid) {
            double wl = 0, sl = 0, wr = 0, sr = 0;
            for (int i = 0; i < n; ++i) {
                if (v[i] > t) {
                    wr += w[i];
                    sr += w[i] * y[i];
                } else {
                    wl += w[i];
                    sl += w[i] * y[i];
                }
            }
            if (wl == 0 || wr == 0) continue;
            const double b = sl / wl, a = sr / wr - b;
            double err = 0;
            for (int i = 0; i < n; ++i) {
                const double h = v[i] > t ? a + b : b;
                err += w[i] * (y[i] - h) * (y[i] - h);
            }
            if (err < best_err - 1e-12) {
                best_err = err;
                best_a = a;
                best_b = b;
                best_theta = t;
            }
        }
        const auto f = fit_stump(v, y, w, grid);
        EXPECT_EQ(static_cast<float>(f.theta), best_theta) << "trial " << trial;
        EXPECT_NEAR(f.a, best_a, 1e-12);
        EXPECT_NEAR(f.b, best_b, 1e-12);
        EXPECT_NEAR(f.error, best_err, 1e-10);
    }
}

namespace {

// One average-feature channel per image; with the 1x1 rectangle the feature
// is simply v1(x1) - v2(x2).
struct ScalarToy {
    std::vector<ImageRepresentation> reps1, reps2;
    std::vector<TrainSample> samples;
    RectangleSet rects;
    std::vector<FamilySpec> families{{FamilyType::Average, DescriptorKind::FilterBank17, 1, 1}};
};

ScalarToy scalar_toy()
{
    ScalarToy t;
    Image a(16, 16, 1), b(16, 16, 1);
    Rng rng(8);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) {
            a.at(0, y, x) = static_cast<float>(x);
            b.at(0, y, x) = static_cast<float>(x) + static_cast<float>(rng.uniform(-0.2, 0.2));
        }
    t.reps1.push_back(representation_from_planes(16, 16, t.families, {a}));
    t.reps2.push_back(representation_from_planes(16, 16, t.families, {b}));
    t.rects.rects = {{0, 0, 1, 1}, {-2, -2, 5, 5}};
    for (int y = 0; y < 16; ++y)
        for (int x = 3; x < 13; ++x) {
            t.samples.push_back({0, {x, y}, {x, y}, 1, 1.0});
            t.samples.push_back({0, {x, y}, {x - 3, y}, -1, 0.5});
            t.samples.push_back({0, {x, y}, {x + 2, y}, -1, 0.5});
        }
    return t;
}

} // namespace

TEST(Train, LossDecreasesAndMatchesDirectEvaluation)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.rounds = 10;
    opts.dims_per_round = 4;
    opts.seed = 1;
    TrainingTrace trace;
    const auto model = train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts, &trace);
    ASSERT_EQ(model.stumps.size(), 10u);
    ASSERT_EQ(trace.loss.size(), 11u);
    for (std::size_t r = 1; r < trace.loss.size(); ++r) EXPECT_LT(trace.loss[r], trace.loss[r - 1]);
    for (double s : trace.weight_sum) EXPECT_NEAR(s, 1.0, 1e-9);

    double total = 0.0, loss = 0.0;
    for (const auto& s : t.samples) total += s.weight;
    for (const auto& s : t.samples) {
        const double h = evaluate(model, t.reps1[0], t.reps2[0], s.x1, s.x2);
        loss += s.weight / total * std::exp(-s.label * h);
    }
    EXPECT_NEAR(loss, trace.loss.back(), 1e-9 * loss);
}

TEST(Train, ZeroRoundsScoresZero)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.rounds = 0;
    const auto model = train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts);
    EXPECT_TRUE(model.stumps.empty());
    EXPECT_EQ(evaluate(model, t.reps1[0], t.reps2[0], {4, 4}, {1, 4}), 0.0);
}

TEST(Train, DeterministicBytes)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.rounds = 8;
    opts.dims_per_round = 3;
    opts.seed = 42;
    const auto a = serialize_model(train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts));
    const auto b = serialize_model(train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts));
    EXPECT_EQ(a, b);
}

TEST(Train, RejectsBadInput)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.dims_per_round = 0;
    EXPECT_THROW(train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts), ParameterError);
    opts.dims_per_round = 1;
    EXPECT_THROW(train({}, t.reps1, t.reps2, t.rects, t.families, opts), DataError);
    auto bad = t.samples;
    bad[0].weight = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(train(bad, t.reps1, t.reps2, t.rects, t.families, opts), DataError);
    bad = t.samples;
    bad[0].pair = 3;
    EXPECT_THROW(train(bad, t.reps1, t.reps2, t.rects, t.families, opts), DataError);
}

TEST(Evaluate, SingleStump)
{
    auto t = scalar_toy();
    MatchingClassifier m;
    m.rects = t.rects;
    m.families = t.families;
    m.stumps = {{{0, 0, 0}, 0.5f, 2.0f, -1.0f}};
    // v1(5,5) - v2(2,5) is about 3, above theta
    EXPECT_EQ(evaluate(m, t.reps1[0], t.reps2[0], {5, 5}, {2, 5}), 1.0);
    EXPECT_EQ(evaluate(m, t.reps1[0], t.reps2[0], {2, 5}, {5, 5}), -1.0);
}

TEST(Evaluate, SelfPairUsesZeroFeature)
{
    auto t = scalar_toy();
    MatchingClassifier m;
    m.rects = t.rects;
    m.families = t.families;
    m.stumps = {{{0, 0, 0}, -0.1f, 1.5f, 0.25f}, {{1, 0, 0}, 0.0f, 3.0f, -0.5f}, {{1, 0, 0}, 0.2f, -1.0f, 0.75f}};
    double expect = 0.0;
    for (const auto& s : m.stumps) expect += s.respond(0.0f);
    EXPECT_EQ(evaluate(m, t.reps1[0], t.reps1[0], {7, 9}, {7, 9}), expect);
}

TEST(ModelFile, RoundTripBitExact)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.rounds = 6;
    opts.dims_per_round = 2;
    auto model = train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts);
    model.codebook_digests = {0};
    model.meta.task = Task::Flow;
    const auto bytes = serialize_model(model);
    const auto back = deserialize_model(bytes);
    EXPECT_EQ(serialize_model(back), bytes);
    EXPECT_EQ(back.stumps, model.stumps);
    EXPECT_EQ(back.rects, model.rects);
    EXPECT_EQ(back.families, model.families);
    EXPECT_EQ(back.meta, model.meta);
    for (const auto& s : t.samples)
        EXPECT_EQ(evaluate(back, t.reps1[0], t.reps2[0], s.x1, s.x2), evaluate(model, t.reps1[0], t.reps2[0], s.x1, s.x2));

    const auto dir = fixtures::scratch_dir("model_file");
    save_model(model, dir / "m.bin");
    EXPECT_EQ(serialize_model(load_model(dir / "m.bin")), bytes);
}

TEST(ModelFile, StumpRecordLayout)
{
    MatchingClassifier m;
    m.families = {{FamilyType::Average, DescriptorKind::FilterBank17, 17, 1}};
    m.codebook_digests = {0};
    m.rects.rects.assign(300, Rectangle{});
    m.stumps = {{{258, 0, 3}, 1.5f, -2.0f, 0.25f}};
    const auto bytes = serialize_model(m);
    ASSERT_GE(bytes.size(), 17u);
    const std::uint8_t* rec = bytes.data() + bytes.size() - 17;
    EXPECT_EQ(rec[0], 0);
    EXPECT_EQ(rec[1], 2);
    EXPECT_EQ(rec[2], 1);
    EXPECT_EQ(rec[3], 3);
    EXPECT_EQ(rec[4], 0);
    float theta;
    std::memcpy(&theta, rec + 5, 4);
    EXPECT_EQ(theta, 1.5f);
}

TEST(ModelFile, CorruptInputRejected)
{
    auto t = scalar_toy();
    BoostOptions opts;
    opts.rounds = 2;
    opts.dims_per_round = 2;
    auto bytes = serialize_model(train(t.samples, t.reps1, t.reps2, t.rects, t.families, opts));
    auto trunc = bytes;
    trunc.pop_back();
    EXPECT_THROW(deserialize_model(trunc), FormatError);
    auto magic = bytes;
    magic[0] = 'X';
    EXPECT_THROW(deserialize_model(magic), FormatError);
    auto idx = bytes;
    idx[idx.size() - 17] = 9; // family out of range
    EXPECT_THROW(deserialize_model(idx), FormatError);
    EXPECT_THROW(load_model("/nonexistent/model.bin"), FormatError);
}

TEST(TrainedToy, TrueMatchesOutscoreNonMatches)
{
    const auto toy = fixtures::train_toy(bench::SynthKind::ShiftStereo);
    // held-out pairs from a different seed
    const auto held = bench::synth_dataset(bench::SynthKind::ShiftStereo, toy.cfg.synth, 2, 999);
    Rng rng(5);
    int wins = 0, total = 0;
    for (const auto& p : held.pairs) {
        const auto r1 = build_representation(p.image1, toy.codebooks, toy.model.representation_config());
        const auto r2 = build_representation(p.image2, toy.codebooks, toy.model.representation_config());
        const auto& gt = std::get<DisparityMap>(p.truth);
        for (int k = 0; k < 300; ++k) {
            const int y = static_cast<int>(rng.uniform_int(0, gt.height - 1));
            const int x = static_cast<int>(rng.uniform_int(0, gt.width - 1));
            const std::size_t i = static_cast<std::size_t>(y) * gt.width + x;
            if (!gt.valid[i] || x < toy.cfg.d_max) continue;
            const int d = static_cast<int>(std::lround(gt.disparity[i]));
            int other;
            do {
                other = static_cast<int>(rng.uniform_int(0, toy.cfg.d_max));
            } while (std::abs(other - d) <= 1 || x - other < 0);
            wins += evaluate(toy.model, r1, r2, {x, y}, {x - d, y}) > evaluate(toy.model, r1, r2, {x, y}, {x - other, y});
            ++total;
        }
    }
    ASSERT_GT(total, 200);
    EXPECT_GE(static_cast<double>(wins) / total, 0.9);
}
