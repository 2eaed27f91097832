#include "lmatch/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "lmatch/bench/config.hpp"
#include "lmatch/bench/dataset.hpp"
#include "lmatch/bench/flow_io.hpp"
#include "lmatch/bench/imageio.hpp"
#include "lmatch/bench/metrics.hpp"
#include "lmatch/bench/pipeline.hpp"
#include "lmatch/bench/synth.hpp"
#include "lmatch/error.hpp"
#include "lmatch/parallel.hpp"

namespace lmatch {

namespace {

using namespace lmatch::bench;

struct Common {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    int threads = 0;
};

void add_common(CLI::App* app, Common& c)
{
    app->add_option("--config", c.config, "JSON experiment config")->check(CLI::ExistingFile);
    app->add_option("--set", c.sets, "override a config entry, e.g. boost.rounds=300")->take_all();
    app->add_option("--seed", c.seed, "seed for every random choice");
    app->add_option("--threads", c.threads, "worker threads");
}

ExperimentConfig resolve(const Common& c, std::optional<Task> task = std::nullopt)
{
    std::vector<std::string> sets = c.sets;
    if (c.seed) sets.push_back("seed=" + std::to_string(*c.seed));
    if (c.threads > 0) sets.push_back("threads=" + std::to_string(c.threads));
    if (task) sets.push_back("task=\"" + std::string(to_string(*task)) + "\"");
    ExperimentConfig cfg = c.config.empty() ? default_config(sets) : load_config(c.config, sets);
    set_thread_count(static_cast<unsigned>(cfg.threads));
    return cfg;
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw FormatError("failed writing '" + path + "'");
}

void write_estimate(const std::string& path, const GroundTruth& est)
{
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, DisparityMap>) save_disparity(path, e);
            if constexpr (std::is_same_v<T, FlowField>) save_flow(path, e);
            if constexpr (std::is_same_v<T, ChangeMask>) save_change_mask(path, e);
        },
        est);
}

Image load_input(const std::string& path, const ExperimentConfig& cfg)
{
    Image img = load_image(path);
    if (cfg.task == Task::Flow && cfg.flow_downsample > 1) img = downsample_image(img, cfg.flow_downsample);
    return img;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Learned dense matching for stereo, optical flow and change detection", "lmatch"};
    app.require_subcommand(1);

    // synth
    Common synth_c;
    std::string synth_out, synth_kind;
    int synth_pairs = 0;
    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
    add_common(synth, synth_c);
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--kind", synth_kind, "shift-stereo, plane-scene, two-plane, flow-shift or change-paste");
    synth->add_option("--pairs", synth_pairs, "number of pairs");

    // codebook
    Common cb_c;
    std::string cb_data, cb_out;
    auto* codebook = app.add_subcommand("codebook", "train visual-word vocabularies");
    add_common(codebook, cb_c);
    codebook->add_option("--data", cb_data, "dataset directory")->required();
    codebook->add_option("--out", cb_out, "codebook directory")->required();

    // train
    Common tr_c;
    std::string tr_data, tr_codebooks, tr_out, tr_trace;
    auto* train_cmd = app.add_subcommand("train", "train a matching classifier");
    add_common(train_cmd, tr_c);
    train_cmd->add_option("--data", tr_data, "dataset directory")->required();
    train_cmd->add_option("--codebooks", tr_codebooks, "codebook directory")->required();
    train_cmd->add_option("--out,--model", tr_out, "model file to write")->required();
    train_cmd->add_option("--trace", tr_trace, "write the per-round training loss as JSON");

    // infer
    Common in_c;
    std::string in_task, in_model, in_codebooks, in_image1, in_image2, in_out, in_volume;
    bool in_reg = false;
    auto* infer = app.add_subcommand("infer", "score and label one image pair");
    add_common(infer, in_c);
    infer->add_option("task", in_task, "stereo, flow or change")->required()->check(CLI::IsMember({"stereo", "flow", "change"}));
    infer->add_option("--model", in_model, "model file")->required();
    infer->add_option("--codebooks", in_codebooks, "codebook directory")->required();
    infer->add_option("--image1", in_image1, "reference image")->required();
    infer->add_option("--image2", in_image2, "second image")->required();
    infer->add_option("--out", in_out, "disparity PNG, flow file or change-mask PNG")->required();
    infer->add_option("--volume", in_volume, "also write the score volume");
    infer->add_flag("--regularize", in_reg, "run the CRF on the score volume");

    // regularize
    Common rg_c;
    std::string rg_volume, rg_image, rg_out;
    auto* reg = app.add_subcommand("regularize", "CRF inference over a saved score volume");
    add_common(reg, rg_c);
    reg->add_option("--volume", rg_volume, "score volume file")->required();
    reg->add_option("--image1", rg_image, "reference image (colour term)")->required();
    reg->add_option("--out", rg_out, "disparity PNG or flow file")->required();

    // eval
    Common ev_c;
    std::string ev_model, ev_codebooks, ev_data, ev_out;
    bool ev_reg = false;
    auto* eval = app.add_subcommand("eval", "run a model over a dataset and report metrics");
    add_common(eval, ev_c);
    eval->add_option("--model", ev_model, "model file")->required();
    eval->add_option("--codebooks", ev_codebooks, "codebook directory")->required();
    eval->add_option("--data", ev_data, "dataset directory")->required();
    eval->add_option("--out", ev_out, "metrics report (JSON); stdout if omitted");
    eval->add_flag("--regularize", ev_reg, "run the CRF before scoring");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*synth) {
            const ExperimentConfig cfg = resolve(synth_c);
            const SynthKind kind = synth_kind.empty() ? cfg.synth_kind : synth_kind_from_string(synth_kind);
            const int pairs = synth_pairs > 0 ? synth_pairs : cfg.synth_pairs;
            save_dataset(synth_out, synth_dataset(kind, cfg.synth, pairs, cfg.seed));
            out << "wrote " << pairs << " " << to_string(kind) << " pairs to " << synth_out << "\n";
        } else if (*codebook) {
            const Dataset raw = load_dataset(cb_data);
            const ExperimentConfig cfg = resolve(cb_c, raw.task);
            const auto cbs = train_codebooks(prepare_dataset(raw, cfg), cfg);
            save_codebooks(cb_out, cbs);
            out << "wrote " << cbs.size() << " codebooks to " << cb_out << "\n";
        } else if (*train_cmd) {
            const Dataset raw = load_dataset(tr_data);
            const ExperimentConfig cfg = resolve(tr_c, raw.task);
            const auto cbs = load_codebooks(tr_codebooks);
            TrainingTrace trace;
            const auto model = train_model(prepare_dataset(raw, cfg), cbs, cfg, &trace);
            save_model(model, tr_out);
            if (!tr_trace.empty()) {
                std::string text = "{\"loss\": [";
                for (std::size_t i = 0; i < trace.loss.size(); ++i) {
                    char buf[40];
                    std::snprintf(buf, sizeof buf, "%s%.17g", i ? ", " : "", trace.loss[i]);
                    text += buf;
                }
                write_text(tr_trace, text + "]}\n");
            }
            out << "trained " << model.stumps.size() << " stumps, wrote " << tr_out << "\n";
        } else if (*infer) {
            const ExperimentConfig cfg = resolve(in_c, task_from_string(in_task));
            const auto model = load_model(in_model);
            const auto cbs = load_codebooks(in_codebooks);
            const auto res = infer_pair(model, cbs, load_input(in_image1, cfg), load_input(in_image2, cfg), cfg, in_reg);
            write_estimate(in_out, res.estimate);
            if (!in_volume.empty()) save_volume(res.volume, in_volume);
            out << "wrote " << in_out << "\n";
        } else if (*reg) {
            const ScoreVolume volume = load_volume(rg_volume);
            const ExperimentConfig cfg = resolve(rg_c, volume.spec().task);
            if (cfg.task == Task::Change) throw ConfigError("change volumes have a single candidate; nothing to regularize");
            const Image lab = to_cielab(load_input(rg_image, cfg));
            const auto res = regularize_volume(volume, lab, cfg);
            if (cfg.task == Task::Stereo)
                save_disparity(rg_out, to_disparity(res.labels));
            else
                save_flow(rg_out, to_flow(res.labels));
            out << "mean field ran " << res.iterations << " iterations, wrote " << rg_out << "\n";
        } else if (*eval) {
            const auto model = load_model(ev_model);
            const auto cbs = load_codebooks(ev_codebooks);
            const Dataset raw = load_dataset(ev_data);
            const ExperimentConfig cfg = resolve(ev_c, raw.task);
            const std::string report = report_to_json(evaluate_dataset(model, cbs, raw, cfg, ev_reg));
            if (ev_out.empty())
                out << report;
            else
                write_text(ev_out, report);
        }
    } catch (const std::exception& e) {
        err << "lmatch: error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

} // namespace lmatch
