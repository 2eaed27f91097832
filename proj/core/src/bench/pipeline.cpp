#include "lmatch/bench/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

#include "lmatch/error.hpp"
#include "lmatch/rng.hpp"

namespace lmatch::bench {

namespace {

// Fixed tags so every stage draws from its own stream of the run seed.
enum : std::uint64_t { kSeedSamples = 1, kSeedRects = 2, kSeedBoost = 3, kSeedCrf = 4, kSeedCodebook = 100 };

} // namespace

Dataset prepare_dataset(const Dataset& ds, const ExperimentConfig& cfg)
{
    if (ds.task != cfg.task)
        throw ConfigError("dataset task '" + std::string(to_string(ds.task)) + "' does not match config task '" +
                          std::string(to_string(cfg.task)) + "'");
    if (ds.task != Task::Flow || cfg.flow_downsample == 1) return ds;
    Dataset out;
    out.task = ds.task;
    for (const auto& p : ds.pairs) {
        DatasetPair q;
        q.name = p.name;
        q.image1 = downsample_image(p.image1, cfg.flow_downsample);
        q.image2 = downsample_image(p.image2, cfg.flow_downsample);
        q.truth = downsample_flow(std::get<FlowField>(p.truth), cfg.flow_downsample);
        out.pairs.push_back(std::move(q));
    }
    return out;
}

std::vector<Codebook> train_codebooks(const Dataset& ds, const ExperimentConfig& cfg)
{
    if (ds.pairs.empty()) throw DataError("cannot train codebooks on an empty dataset");
    std::vector<Image> labs;
    for (const auto& p : ds.pairs) {
        labs.push_back(to_cielab(p.image1));
        labs.push_back(to_cielab(p.image2));
    }
    const auto& params = cfg.representation.descriptor_params;
    std::vector<Codebook> out;
    for (auto kind : cfg.representation.bow_families) {
        std::vector<float> samples;
        for (const auto& lab : labs) append_samples(compute_descriptor(lab, kind, params), cfg.codebook.sample_stride, samples);
        const int dim = descriptor_dim(kind, params);
        const std::size_t n = samples.size() / static_cast<std::size_t>(dim);
        const auto cap = static_cast<std::size_t>(cfg.codebook.max_samples);
        if (n > cap) {
            std::vector<float> thin;
            thin.reserve(cap * dim);
            for (std::size_t i = 0; i < cap; ++i) {
                const std::size_t src = i * n / cap;
                thin.insert(thin.end(), samples.begin() + static_cast<std::ptrdiff_t>(src * dim),
                            samples.begin() + static_cast<std::ptrdiff_t>((src + 1) * dim));
            }
            samples = std::move(thin);
        }
        KMeansOptions opts;
        opts.max_iterations = cfg.codebook.max_iterations;
        opts.rel_tolerance = cfg.codebook.tolerance;
        const auto seed = derive_seed(cfg.seed, kSeedCodebook + static_cast<std::uint64_t>(kind));
        out.push_back(train_kmeans(samples, dim, cfg.codebook.words, seed, kind, opts).codebook);
    }
    return out;
}

void save_codebooks(const std::filesystem::path& dir, const std::vector<Codebook>& codebooks)
{
    std::filesystem::create_directories(dir);
    for (const auto& cb : codebooks) save_codebook(cb, dir / ("codebook_" + std::string(to_string(cb.kind)) + ".bin"));
}

std::vector<Codebook> load_codebooks(const std::filesystem::path& dir)
{
    if (!std::filesystem::is_directory(dir)) throw FormatError("codebook directory '" + dir.string() + "' not found");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.starts_with("codebook_") && name.ends_with(".bin")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<Codebook> out;
    for (const auto& f : files) out.push_back(load_codebook(f));
    return out;
}

namespace {

std::vector<std::uint64_t> digests_for(const std::vector<FamilySpec>& families, const std::vector<Codebook>& codebooks)
{
    std::vector<std::uint64_t> out;
    for (const auto& f : families) {
        if (f.type != FamilyType::BagOfWords) {
            out.push_back(0);
            continue;
        }
        auto it = std::find_if(codebooks.begin(), codebooks.end(), [&](const Codebook& c) { return c.kind == f.descriptor; });
        out.push_back(it == codebooks.end() ? 0 : it->digest());
    }
    return out;
}

} // namespace

MatchingClassifier train_model(const Dataset& ds, const std::vector<Codebook>& codebooks, const ExperimentConfig& cfg,
                               TrainingTrace* trace)
{
    if (ds.pairs.empty()) throw DataError("cannot train on an empty dataset");
    std::vector<ImageRepresentation> reps1, reps2;
    std::vector<GroundTruth> truths;
    for (const auto& p : ds.pairs) {
        validate_pair(p);
        reps1.push_back(build_representation(p.image1, codebooks, cfg.representation));
        reps2.push_back(build_representation(p.image2, codebooks, cfg.representation));
        truths.push_back(p.truth);
    }
    auto samples = assemble_samples(truths, cfg.candidates(), cfg.sampling, derive_seed(cfg.seed, kSeedSamples));
    const auto rects = sample_rectangles(derive_seed(cfg.seed, kSeedRects), cfg.rect_count, cfg.rect_max_extent);
    const auto families = family_layout(cfg.representation, codebooks);
    BoostOptions opts = cfg.boost;
    opts.seed = derive_seed(cfg.seed, kSeedBoost);
    MatchingClassifier model = train(std::move(samples), reps1, reps2, rects, families, opts, trace);
    model.descriptor_params = cfg.representation.descriptor_params;
    model.codebook_digests = digests_for(families, codebooks);
    model.meta.neg_ratio = cfg.sampling.neg_ratio;
    model.meta.task = cfg.task;
    return model;
}

void check_codebooks(const MatchingClassifier& model, const std::vector<Codebook>& codebooks)
{
    const auto have = digests_for(model.families, codebooks);
    for (std::size_t i = 0; i < model.families.size(); ++i) {
        if (model.families[i].type != FamilyType::BagOfWords) continue;
        const auto name = std::string(to_string(model.families[i].descriptor));
        if (have[i] == 0) throw DataError("model needs a '" + name + "' codebook, none was given");
        if (i < model.codebook_digests.size() && model.codebook_digests[i] != have[i])
            throw DataError("the '" + name + "' codebook differs from the one the model was trained with");
    }
}

RegularizeResult regularize_volume(const ScoreVolume& volume, const Image& lab, const ExperimentConfig& cfg,
                                   const std::vector<std::uint8_t>* ignored)
{
    return regularize(volume, lab, cfg.crf, derive_seed(cfg.seed, kSeedCrf), ignored);
}

PairResult infer_pair(const MatchingClassifier& model, const std::vector<Codebook>& codebooks, const Image& image1,
                      const Image& image2, const ExperimentConfig& cfg, bool regularise)
{
    check_codebooks(model, codebooks);
    if (model.meta.task != cfg.task)
        throw ConfigError("model was trained for '" + std::string(to_string(model.meta.task)) + "', not '" +
                          std::string(to_string(cfg.task)) + "'");
    const auto rcfg = model.representation_config();
    const auto rep1 = build_representation(image1, codebooks, rcfg);
    const auto rep2 = build_representation(image2, codebooks, rcfg);
    const CandidateSpec spec = cfg.candidates();
    PairResult out{score_volume(model, rep1, rep2, spec), {}, {}};

    if (cfg.task == Task::Change) {
        out.labels = winner_take_all(out.volume);
        out.estimate = to_change_mask(out.volume, cfg.change_threshold);
        return out;
    }

    LabelMap labels = winner_take_all(out.volume);
    std::vector<std::uint8_t> rejected;
    if (cfg.inverse_validation) {
        const LabelMap back = winner_take_all(score_volume_backward(model, rep1, rep2, spec));
        const LabelMap checked = inverse_validate(labels, back, cfg.inverse_tolerance);
        rejected.assign(checked.label.size(), 0);
        for (std::size_t i = 0; i < rejected.size(); ++i) rejected[i] = labels.label[i] >= 0 && checked.label[i] < 0;
        labels = checked;
    }
    if (regularise) {
        const auto res = regularize_volume(out.volume, rep1.lab(), cfg, rejected.empty() ? nullptr : &rejected);
        labels = res.labels;
    }
    out.labels = labels;
    if (cfg.task == Task::Stereo)
        out.estimate = to_disparity(labels);
    else
        out.estimate = to_flow(labels);
    return out;
}

namespace {

template <typename T>
T concat_rows(const std::vector<const T*>& parts);

template <>
DisparityMap concat_rows(const std::vector<const DisparityMap*>& parts)
{
    DisparityMap out;
    for (const auto* p : parts) {
        out.disparity.insert(out.disparity.end(), p->disparity.begin(), p->disparity.end());
        out.valid.insert(out.valid.end(), p->valid.begin(), p->valid.end());
    }
    out.width = static_cast<int>(out.disparity.size());
    out.height = 1;
    return out;
}

template <>
FlowField concat_rows(const std::vector<const FlowField*>& parts)
{
    FlowField out;
    for (const auto* p : parts) {
        out.u.insert(out.u.end(), p->u.begin(), p->u.end());
        out.v.insert(out.v.end(), p->v.begin(), p->v.end());
        out.valid.insert(out.valid.end(), p->valid.begin(), p->valid.end());
    }
    out.width = static_cast<int>(out.u.size());
    out.height = 1;
    return out;
}

template <>
ChangeMask concat_rows(const std::vector<const ChangeMask*>& parts)
{
    ChangeMask out;
    for (const auto* p : parts) {
        out.changed.insert(out.changed.end(), p->changed.begin(), p->changed.end());
        out.valid.insert(out.valid.end(), p->valid.begin(), p->valid.end());
    }
    out.width = static_cast<int>(out.changed.size());
    out.height = 1;
    return out;
}

template <typename T>
std::pair<T, T> pooled(const Dataset& ds, const std::vector<GroundTruth>& est)
{
    std::vector<const T*> a, b;
    for (std::size_t i = 0; i < ds.pairs.size(); ++i) {
        a.push_back(&std::get<T>(est[i]));
        b.push_back(&std::get<T>(ds.pairs[i].truth));
    }
    return {concat_rows(a), concat_rows(b)};
}

} // namespace

MetricsReport evaluate_estimates(const Dataset& ds, const std::vector<GroundTruth>& est)
{
    if (est.size() != ds.pairs.size()) throw ShapeError("one estimate per dataset pair required");
    MetricsReport r;
    r.task = ds.task;
    for (std::size_t i = 0; i < est.size(); ++i) {
        if (task_of(est[i]) != ds.task) throw ConfigError("estimate task does not match the dataset");
        r.names.push_back(ds.pairs[i].name);
    }
    if (est.empty()) return r;
    switch (ds.task) {
    case Task::Stereo: {
        std::vector<std::uint8_t> occ;
        bool any_occ = false;
        for (std::size_t i = 0; i < est.size(); ++i) {
            const auto& p = ds.pairs[i];
            const auto& gt = std::get<DisparityMap>(p.truth);
            const std::vector<std::uint8_t>* o = p.occlusion.empty() ? nullptr : &p.occlusion;
            r.stereo.push_back(stereo_metrics(std::get<DisparityMap>(est[i]), gt, o));
            if (o) {
                occ.insert(occ.end(), o->begin(), o->end());
                any_occ = true;
            } else {
                occ.insert(occ.end(), gt.disparity.size(), 0);
            }
        }
        const auto [e, g] = pooled<DisparityMap>(ds, est);
        r.stereo_total = stereo_metrics(e, g, any_occ ? &occ : nullptr);
        break;
    }
    case Task::Flow: {
        for (std::size_t i = 0; i < est.size(); ++i)
            r.flow.push_back(flow_metrics(std::get<FlowField>(est[i]), std::get<FlowField>(ds.pairs[i].truth)));
        const auto [e, g] = pooled<FlowField>(ds, est);
        r.flow_total = flow_metrics(e, g);
        break;
    }
    case Task::Change: {
        for (std::size_t i = 0; i < est.size(); ++i)
            r.change.push_back(change_metrics(std::get<ChangeMask>(est[i]), std::get<ChangeMask>(ds.pairs[i].truth)));
        const auto [e, g] = pooled<ChangeMask>(ds, est);
        r.change_total = change_metrics(e, g);
        break;
    }
    }
    return r;
}

MetricsReport evaluate_dataset(const MatchingClassifier& model, const std::vector<Codebook>& codebooks,
                               const Dataset& dataset, const ExperimentConfig& cfg, bool regularise)
{
    const Dataset ds = prepare_dataset(dataset, cfg);
    std::vector<GroundTruth> est;
    for (const auto& p : ds.pairs) est.push_back(infer_pair(model, codebooks, p.image1, p.image2, cfg, regularise).estimate);
    return evaluate_estimates(ds, est);
}

namespace {

nlohmann::json num(double v)
{
    if (std::isnan(v)) return nullptr;
    return v;
}

nlohmann::json to_json(const StereoMetrics& m)
{
    return {{"outlier_3px", num(m.outlier3)},         {"outlier_5px", num(m.outlier5)},
            {"outlier_3px_noc", num(m.outlier3_noc)}, {"outlier_5px_noc", num(m.outlier5_noc)},
            {"mean_abs_error", num(m.mean_abs_error)}, {"density", num(m.density)},
            {"pixels", m.pixels},                      {"pixels_noc", m.pixels_noc}};
}

nlohmann::json to_json(const FlowMetrics& m)
{
    return {{"mean_epe", num(m.mean_epe)}, {"outlier_1px", num(m.outlier1)}, {"outlier_3px", num(m.outlier3)},
            {"exact", num(m.exact)},       {"density", num(m.density)},      {"pixels", m.pixels}};
}

nlohmann::json to_json(const ChangeMetrics& m)
{
    return {{"accuracy", num(m.accuracy)},
            {"recall_change", num(m.recall_change)},
            {"recall_nochange", num(m.recall_nochange)},
            {"precision_change", num(m.precision_change)},
            {"precision_nochange", num(m.precision_nochange)},
            {"mean_recall", num(m.mean_recall)},
            {"mean_precision", num(m.mean_precision)},
            {"confusion",
             {{"true_change", m.true_change},
              {"false_change", m.false_change},
              {"true_nochange", m.true_nochange},
              {"false_nochange", m.false_nochange}}}};
}

} // namespace

std::string report_to_json(const MetricsReport& r)
{
    nlohmann::json j;
    j["task"] = std::string(to_string(r.task));
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        nlohmann::json e;
        if (r.task == Task::Stereo) e = to_json(r.stereo[i]);
        if (r.task == Task::Flow) e = to_json(r.flow[i]);
        if (r.task == Task::Change) e = to_json(r.change[i]);
        e["name"] = r.names[i];
        pairs.push_back(std::move(e));
    }
    j["pairs"] = std::move(pairs);
    if (r.stereo_total) j["total"] = to_json(*r.stereo_total);
    if (r.flow_total) j["total"] = to_json(*r.flow_total);
    if (r.change_total) j["total"] = to_json(*r.change_total);
    return j.dump(2) + "\n";
}

} // namespace lmatch::bench
