#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "lmatch/bench/config.hpp"
#include "lmatch/bench/dataset.hpp"
#include "lmatch/bench/imageio.hpp"
#include "lmatch/bench/pipeline.hpp"
#include "lmatch/bench/synth.hpp"
#include "lmatch/error.hpp"
#include "support.hpp"

using namespace lmatch;
using namespace lmatch::bench;

TEST(Synth, KindNames)
{
    for (auto k : {SynthKind::ShiftStereo, SynthKind::PlaneScene, SynthKind::TwoPlane, SynthKind::FlowShift,
                   SynthKind::ChangePaste})
        EXPECT_EQ(synth_kind_from_string(to_string(k)), k);
    EXPECT_EQ(to_string(SynthKind::ShiftStereo), "shift-stereo");
    EXPECT_EQ(synth_task(SynthKind::ChangePaste), Task::Change);
    EXPECT_THROW(synth_kind_from_string("nope"), ConfigError);
}

TEST(Synth, ShiftStereoTruthAndPixels)
{
    SynthParams p;
    p.shift = 5;
    const auto pair = synth_generate(SynthKind::ShiftStereo, p, 3);
    validate_pair(pair);
    const auto& gt = std::get<DisparityMap>(pair.truth);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
            EXPECT_EQ(gt.valid[i], x >= 5);
            if (!gt.valid[i]) continue;
            EXPECT_EQ(gt.disparity[i], 5.0f);
            for (int c = 0; c < 3; ++c) EXPECT_EQ(pair.image2.at(c, y, x - 5), pair.image1.at(c, y, x));
        }
}

TEST(Synth, FlowShiftPixels)
{
    SynthParams p;
    p.flow = {3, -2};
    const auto pair = synth_generate(SynthKind::FlowShift, p, 4);
    const auto& gt = std::get<FlowField>(pair.truth);
    int checked = 0;
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * p.width + x;
            if (!gt.valid[i]) continue;
            for (int c = 0; c < 3; ++c) EXPECT_EQ(pair.image2.at(c, y - 2, x + 3), pair.image1.at(c, y, x));
            ++checked;
        }
    EXPECT_EQ(checked, (p.width - 3) * (p.height - 2));
}

TEST(Synth, PlaneSceneMatchesEquation)
{
    SynthParams p;
    const auto pair = synth_generate(SynthKind::PlaneScene, p, 5);
    const auto& gt = std::get<DisparityMap>(pair.truth);
    for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) {
            const double d = p.plane[0] * x + p.plane[1] * y + p.plane[2];
            EXPECT_NEAR(gt.disparity[static_cast<std::size_t>(y) * p.width + x], d, 1e-5);
        }
    ASSERT_EQ(pair.occlusion.size(), gt.disparity.size());
    const auto two = synth_generate(SynthKind::TwoPlane, p, 5);
    const auto& g2 = std::get<DisparityMap>(two.truth);
    EXPECT_NEAR(g2.disparity[static_cast<std::size_t>(p.width - 1)],
                p.plane2[0] * (p.width - 1) + p.plane2[2], 1e-5);
    // the nearer right plane hides part of the left one
    int occluded = 0;
    for (auto o : two.occlusion) occluded += o;
    EXPECT_GT(occluded, 0);
}

TEST(Synth, ChangePasteMaskAndColourShift)
{
    SynthParams p;
    p.blocks = 2;
    const auto pair = synth_generate(SynthKind::ChangePaste, p, 6);
    const auto& gt = std::get<ChangeMask>(pair.truth);
    int changed = 0;
    for (auto c : gt.changed) changed += c;
    EXPECT_GE(changed, 12 * 12);
    // unchanged pixels differ only by a global per-channel affine map
    double diff = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < gt.changed.size(); ++i)
        if (!gt.changed[i]) {
            diff += pair.image2.plane(0)[i] - pair.image1.plane(0)[i];
            ++n;
        }
    EXPECT_GT(n, 0);
    EXPECT_LE(std::abs(diff / n), 0.3);
}

TEST(Synth, DeterministicAndQuantised)
{
    SynthParams p;
    p.noise = 0.02;
    const auto a = synth_generate(SynthKind::ChangePaste, p, 7);
    const auto b = synth_generate(SynthKind::ChangePaste, p, 7);
    EXPECT_EQ(a.image1, b.image1);
    EXPECT_EQ(a.image2, b.image2);
    EXPECT_EQ(quantize8(a.image2), a.image2);
    EXPECT_NE(synth_generate(SynthKind::ChangePaste, p, 8).image1, a.image1);
    p.width = 2;
    EXPECT_THROW(synth_generate(SynthKind::ShiftStereo, p, 1), ParameterError);
}

TEST(Synth, DatasetCyclesShifts)
{
    SynthParams p;
    p.shifts = {2, 6};
    const auto ds = synth_dataset(SynthKind::ShiftStereo, p, 3, 1);
    ASSERT_EQ(ds.pairs.size(), 3u);
    EXPECT_EQ(ds.pairs[0].name, "pair0000");
    EXPECT_EQ(std::get<DisparityMap>(ds.pairs[1].truth).disparity.back(), 6.0f);
    EXPECT_EQ(std::get<DisparityMap>(ds.pairs[2].truth).disparity.back(), 2.0f);
}

TEST(Texture, RangeAndContinuity)
{
    const RandomTexture t(3, 0.35);
    float prev = t.sample(0, 0.0, 5.0);
    for (int i = 1; i < 400; ++i) {
        const float v = t.sample(i % 3, i * 0.05, 5.0);
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
        if (i % 3 == 0) {
            EXPECT_LT(std::abs(v - prev), 0.2f);
            prev = v;
        }
    }
}

TEST(Dataset, SaveLoadRoundTrip)
{
    for (auto kind : {SynthKind::PlaneScene, SynthKind::FlowShift, SynthKind::ChangePaste}) {
        SynthParams p;
        p.width = 20;
        p.height = 16;
        const auto ds = synth_dataset(kind, p, 2, 9);
        const auto dir = fixtures::scratch_dir("dataset_" + std::string(to_string(kind)));
        save_dataset(dir, ds);
        const auto back = load_dataset(dir);
        EXPECT_EQ(back.task, ds.task);
        ASSERT_EQ(back.pairs.size(), 2u);
        for (std::size_t i = 0; i < 2; ++i) {
            EXPECT_EQ(back.pairs[i].name, ds.pairs[i].name);
            EXPECT_EQ(back.pairs[i].image1, ds.pairs[i].image1);
            EXPECT_EQ(back.pairs[i].image2, ds.pairs[i].image2);
            EXPECT_EQ(back.pairs[i].occlusion, ds.pairs[i].occlusion);
            if (kind == SynthKind::FlowShift) EXPECT_EQ(back.pairs[i].truth, ds.pairs[i].truth);
            if (kind == SynthKind::ChangePaste) EXPECT_EQ(back.pairs[i].truth, ds.pairs[i].truth);
            if (kind == SynthKind::PlaneScene) {
                const auto& a = std::get<DisparityMap>(back.pairs[i].truth);
                const auto& b = std::get<DisparityMap>(ds.pairs[i].truth);
                EXPECT_EQ(a.valid, b.valid);
                for (std::size_t k = 0; k < a.disparity.size(); ++k)
                    if (a.valid[k]) EXPECT_NEAR(a.disparity[k], b.disparity[k], 0.5 / 256 + 1e-6);
            }
        }
    }
    EXPECT_THROW(load_dataset(fixtures::scratch_dir("empty_dataset")), FormatError);
}

TEST(Dataset, ValidationErrors)
{
    SynthParams p;
    auto pair = synth_generate(SynthKind::ShiftStereo, p, 1);
    pair.image2 = Image(10, 10, 3);
    EXPECT_THROW(validate_pair(pair), ShapeError);
    pair = synth_generate(SynthKind::ShiftStereo, p, 1);
    pair.truth = DisparityMap(3, 3);
    EXPECT_THROW(validate_pair(pair), ShapeError);
}

TEST(Config, DefaultsRoundTrip)
{
    const auto cfg = default_config();
    EXPECT_EQ(cfg.boost.rounds, 5000);
    EXPECT_EQ(cfg.boost.dims_per_round, 400);
    EXPECT_EQ(cfg.sampling.neg_ratio, 50);
    EXPECT_EQ(cfg.rect_count, 200);
    EXPECT_EQ(cfg.crf.sigma_loc, 21.0);
    const auto text = config_to_json(cfg);
    EXPECT_EQ(config_to_json(parse_config(text)), text);
}

TEST(Config, OverridesAndErrors)
{
    const std::vector<std::string> sets{"boost.rounds=12", "task=flow", "crf.anchor_at_pixel=true",
                                        "representation.bow_families=[\"lqtp\"]", "synth.kind=two-plane"};
    const auto cfg = default_config(sets);
    EXPECT_EQ(cfg.boost.rounds, 12);
    EXPECT_EQ(cfg.task, Task::Flow);
    EXPECT_TRUE(cfg.crf.anchor_at_pixel);
    EXPECT_EQ(cfg.representation.bow_families, std::vector<DescriptorKind>{DescriptorKind::Lqtp});
    EXPECT_EQ(cfg.synth_kind, SynthKind::TwoPlane);

    EXPECT_THROW(parse_config(R"({"schema_version":1,"boost":{"roundz":3}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"schema_version":7})"), ConfigError);
    EXPECT_THROW(parse_config("{not json"), ConfigError);
    EXPECT_THROW(default_config(std::vector<std::string>{"boost.rounds"}), ConfigError);
    EXPECT_THROW(default_config(std::vector<std::string>{"boost.rounds=0"}), ConfigError);
    EXPECT_THROW(default_config(std::vector<std::string>{"task=sideways"}), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/config.json"), lmatch::Error);

    const auto dir = fixtures::scratch_dir("config_file");
    {
        std::ofstream out(dir / "c.json");
        out << R"({"schema_version":1,"seed":9,"candidates":{"d_max":7}})";
    }
    const auto loaded = load_config(dir / "c.json", std::vector<std::string>{"seed=10"});
    EXPECT_EQ(loaded.seed, 10u);
    EXPECT_EQ(loaded.d_max, 7);
}

TEST(Pipeline, FlowPreparationDownsamples)
{
    auto cfg = default_config(std::vector<std::string>{"task=flow"});
    SynthParams p;
    p.flow = {4, -8};
    const auto ds = synth_dataset(SynthKind::FlowShift, p, 1, 2);
    const auto prepared = prepare_dataset(ds, cfg);
    const auto& f = std::get<FlowField>(prepared.pairs[0].truth);
    EXPECT_EQ(f.width, 16);
    EXPECT_EQ(f.height, 12);
    EXPECT_EQ(f.u[50], 1.0f);
    EXPECT_EQ(f.v[50], -2.0f);
    EXPECT_EQ(prepared.pairs[0].image1.width(), 16);
    cfg.task = Task::Stereo;
    EXPECT_THROW(prepare_dataset(ds, cfg), ConfigError);
}

TEST(Pipeline, CodebookCheckAndReport)
{
    auto toy_cfg = fixtures::toy_config(SynthKind::ShiftStereo);
    toy_cfg.boost.rounds = 5;
    const auto ds = synth_dataset(SynthKind::ShiftStereo, toy_cfg.synth, 2, 3);
    const auto cbs = train_codebooks(ds, toy_cfg);
    ASSERT_EQ(cbs.size(), 2u);
    const auto model = train_model(ds, cbs, toy_cfg);
    EXPECT_NO_THROW(check_codebooks(model, cbs));
    auto other = cbs;
    other[1].centers[0] += 1.0f;
    EXPECT_THROW(check_codebooks(model, other), DataError);
    EXPECT_THROW(check_codebooks(model, {cbs[0]}), DataError);

    const auto dir = fixtures::scratch_dir("codebook_dir");
    save_codebooks(dir, cbs);
    EXPECT_EQ(load_codebooks(dir), cbs);

    const auto report = evaluate_dataset(model, cbs, ds, toy_cfg, false);
    ASSERT_EQ(report.stereo.size(), 2u);
    ASSERT_TRUE(report.stereo_total.has_value());
    const auto json = report_to_json(report);
    EXPECT_NE(json.find("outlier_3px"), std::string::npos);
    EXPECT_NE(json.find("pair0000"), std::string::npos);
}
