#include "lmatch/bench/config.hpp"

#include <nlohmann/json.hpp>

#include "../binio.hpp"
#include "lmatch/error.hpp"

namespace lmatch::bench {

using nlohmann::json;

namespace {

template <typename T>
void take(const json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

json to_json(const ExperimentConfig& c)
{
    const auto& r = c.representation;
    json fam = json::array();
    for (auto k : r.bow_families) fam.push_back(std::string(to_string(k)));
    json shifts = c.synth.shifts;
    json flows = json::array();
    for (const auto& f : c.synth.flows) flows.push_back({f[0], f[1]});
    return {
        {"schema_version", kConfigSchemaVersion},
        {"task", std::string(to_string(c.task))},
        {"seed", c.seed},
        {"threads", c.threads},
        {"candidates",
         {{"d_max", c.d_max},
          {"fx_min", c.fx_min},
          {"fx_max", c.fx_max},
          {"fy_min", c.fy_min},
          {"fy_max", c.fy_max},
          {"flow_downsample", c.flow_downsample}}},
        {"codebook",
         {{"words", c.codebook.words},
          {"sample_stride", c.codebook.sample_stride},
          {"max_samples", c.codebook.max_samples},
          {"max_iterations", c.codebook.max_iterations},
          {"tolerance", c.codebook.tolerance}}},
        {"representation",
         {{"bow_families", fam},
          {"bow_factor", r.bow_factor},
          {"average_features", r.average_features},
          {"sift", {{"patch", r.descriptor_params.sift.patch}}},
          {"lqtp",
           {{"tau", r.descriptor_params.lqtp.tau},
            {"bins", r.descriptor_params.lqtp.bins},
            {"window", r.descriptor_params.lqtp.window}}},
          {"selfsim",
           {{"patch", r.descriptor_params.self_similarity.patch},
            {"window", r.descriptor_params.self_similarity.window},
            {"radial_bins", r.descriptor_params.self_similarity.radial_bins},
            {"angular_bins", r.descriptor_params.self_similarity.angular_bins},
            {"noise_var", r.descriptor_params.self_similarity.noise_var}}}}},
        {"rectangles", {{"count", c.rect_count}, {"max_extent", c.rect_max_extent}}},
        {"sampling",
         {{"neg_ratio", c.sampling.neg_ratio},
          {"exclusion_radius", c.sampling.exclusion_radius},
          {"positive_stride", c.sampling.positive_stride}}},
        {"boost",
         {{"rounds", c.boost.rounds},
          {"dims_per_round", c.boost.dims_per_round},
          {"thresholds", c.boost.thresholds},
          {"absolute", c.boost.absolute}}},
        {"validation", {{"enabled", c.inverse_validation}, {"tolerance", c.inverse_tolerance}}},
        {"crf",
         {{"sigma_app", c.crf.sigma_app},
          {"sigma_loc", c.crf.sigma_loc},
          {"sigma_pln", c.crf.sigma_pln},
          {"inlier", c.crf.inlier},
          {"pairwise_weight", c.crf.pairwise_weight},
          {"max_iters", c.crf.max_iters},
          {"ransac_iters", c.crf.ransac_iters},
          {"radius", c.crf.radius},
          {"compat_cutoff", c.crf.compat_cutoff},
          {"tolerance", c.crf.tolerance},
          {"anchor_at_pixel", c.crf.anchor_at_pixel},
          {"refine_planes", c.crf.refine_planes},
          {"step", c.crf.step}}},
        {"change", {{"threshold", c.change_threshold}}},
        {"synth",
         {{"kind", std::string(to_string(c.synth_kind))},
          {"pairs", c.synth_pairs},
          {"width", c.synth.width},
          {"height", c.synth.height},
          {"shift", c.synth.shift},
          {"shifts", shifts},
          {"flow", {c.synth.flow[0], c.synth.flow[1]}},
          {"flows", flows},
          {"plane", c.synth.plane},
          {"plane2", c.synth.plane2},
          {"noise", c.synth.noise},
          {"blocks", c.synth.blocks},
          {"block_min", c.synth.block_min},
          {"block_max", c.synth.block_max},
          {"gain_jitter", c.synth.gain_jitter},
          {"offset_jitter", c.synth.offset_jitter},
          {"contrast", c.synth.contrast}}},
    };
}

ExperimentConfig from_json(const json& j)
{
    ExperimentConfig c;
    if (j.contains("task")) c.task = task_from_string(j.at("task").get<std::string>());
    take(j, "seed", c.seed);
    take(j, "threads", c.threads);
    if (j.contains("candidates")) {
        const auto& k = j.at("candidates");
        take(k, "d_max", c.d_max);
        take(k, "fx_min", c.fx_min);
        take(k, "fx_max", c.fx_max);
        take(k, "fy_min", c.fy_min);
        take(k, "fy_max", c.fy_max);
        take(k, "flow_downsample", c.flow_downsample);
    }
    if (j.contains("codebook")) {
        const auto& k = j.at("codebook");
        take(k, "words", c.codebook.words);
        take(k, "sample_stride", c.codebook.sample_stride);
        take(k, "max_samples", c.codebook.max_samples);
        take(k, "max_iterations", c.codebook.max_iterations);
        take(k, "tolerance", c.codebook.tolerance);
    }
    if (j.contains("representation")) {
        const auto& k = j.at("representation");
        auto& r = c.representation;
        if (k.contains("bow_families")) {
            r.bow_families.clear();
            for (const auto& n : k.at("bow_families")) r.bow_families.push_back(descriptor_kind_from_string(n.get<std::string>()));
        }
        take(k, "bow_factor", r.bow_factor);
        take(k, "average_features", r.average_features);
        if (k.contains("sift")) take(k.at("sift"), "patch", r.descriptor_params.sift.patch);
        if (k.contains("lqtp")) {
            const auto& q = k.at("lqtp");
            take(q, "tau", r.descriptor_params.lqtp.tau);
            take(q, "bins", r.descriptor_params.lqtp.bins);
            take(q, "window", r.descriptor_params.lqtp.window);
        }
        if (k.contains("selfsim")) {
            const auto& q = k.at("selfsim");
            auto& s = r.descriptor_params.self_similarity;
            take(q, "patch", s.patch);
            take(q, "window", s.window);
            take(q, "radial_bins", s.radial_bins);
            take(q, "angular_bins", s.angular_bins);
            take(q, "noise_var", s.noise_var);
        }
    }
    if (j.contains("rectangles")) {
        take(j.at("rectangles"), "count", c.rect_count);
        take(j.at("rectangles"), "max_extent", c.rect_max_extent);
    }
    if (j.contains("sampling")) {
        const auto& k = j.at("sampling");
        take(k, "neg_ratio", c.sampling.neg_ratio);
        take(k, "exclusion_radius", c.sampling.exclusion_radius);
        take(k, "positive_stride", c.sampling.positive_stride);
    }
    if (j.contains("boost")) {
        const auto& k = j.at("boost");
        take(k, "rounds", c.boost.rounds);
        take(k, "dims_per_round", c.boost.dims_per_round);
        take(k, "thresholds", c.boost.thresholds);
        take(k, "absolute", c.boost.absolute);
    }
    if (j.contains("validation")) {
        take(j.at("validation"), "enabled", c.inverse_validation);
        take(j.at("validation"), "tolerance", c.inverse_tolerance);
    }
    if (j.contains("crf")) {
        const auto& k = j.at("crf");
        take(k, "sigma_app", c.crf.sigma_app);
        take(k, "sigma_loc", c.crf.sigma_loc);
        take(k, "sigma_pln", c.crf.sigma_pln);
        take(k, "inlier", c.crf.inlier);
        take(k, "pairwise_weight", c.crf.pairwise_weight);
        take(k, "max_iters", c.crf.max_iters);
        take(k, "ransac_iters", c.crf.ransac_iters);
        take(k, "radius", c.crf.radius);
        take(k, "compat_cutoff", c.crf.compat_cutoff);
        take(k, "tolerance", c.crf.tolerance);
        take(k, "anchor_at_pixel", c.crf.anchor_at_pixel);
        take(k, "refine_planes", c.crf.refine_planes);
        take(k, "step", c.crf.step);
    }
    if (j.contains("change")) take(j.at("change"), "threshold", c.change_threshold);
    if (j.contains("synth")) {
        const auto& k = j.at("synth");
        if (k.contains("kind")) c.synth_kind = synth_kind_from_string(k.at("kind").get<std::string>());
        take(k, "pairs", c.synth_pairs);
        take(k, "width", c.synth.width);
        take(k, "height", c.synth.height);
        take(k, "shift", c.synth.shift);
        take(k, "shifts", c.synth.shifts);
        take(k, "flow", c.synth.flow);
        take(k, "flows", c.synth.flows);
        take(k, "plane", c.synth.plane);
        take(k, "plane2", c.synth.plane2);
        take(k, "noise", c.synth.noise);
        take(k, "blocks", c.synth.blocks);
        take(k, "block_min", c.synth.block_min);
        take(k, "block_max", c.synth.block_max);
        take(k, "gain_jitter", c.synth.gain_jitter);
        take(k, "offset_jitter", c.synth.offset_jitter);
        take(k, "contrast", c.synth.contrast);
    }
    // flow runs on downsampled images, so its rectangles default smaller
    const bool extent_given = j.contains("rectangles") && j.at("rectangles").contains("max_extent");
    if (c.task == Task::Flow && !extent_given) c.rect_max_extent = 32;
    return c;
}

void reject_unknown(const json& given, const json& known, const std::string& prefix)
{
    if (!given.is_object()) throw ConfigError("config section '" + prefix + "' must be an object");
    for (auto it = given.begin(); it != given.end(); ++it) {
        const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!known.contains(it.key())) throw ConfigError("unknown config key '" + path + "'");
        const auto& k = known.at(it.key());
        if (k.is_object()) reject_unknown(it.value(), k, path);
    }
}

void apply_override(json& j, const std::string& item)
{
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), text = item.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("override '" + item + "' has an empty key component");
        if (!node->is_object()) throw ConfigError("override '" + item + "' descends into a non-object");
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        if (node->is_null()) *node = json::object();
        start = dot + 1;
    }
}

} // namespace

CandidateSpec ExperimentConfig::candidates() const
{
    switch (task) {
    case Task::Stereo: return CandidateSpec::stereo(d_max);
    case Task::Flow: return CandidateSpec::flow(fx_min, fx_max, fy_min, fy_max);
    case Task::Change: return CandidateSpec::change();
    }
    throw ConfigError("bad task");
}

void ExperimentConfig::validate() const
{
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (flow_downsample < 1) throw ConfigError("candidates.flow_downsample must be >= 1");
    if (codebook.words < 1 || codebook.sample_stride < 1 || codebook.max_samples < codebook.words)
        throw ConfigError("codebook settings out of range");
    if (rect_count < 1 || rect_count > 65535 || rect_max_extent < 1) throw ConfigError("rectangle settings out of range");
    if (sampling.neg_ratio < 1 || sampling.positive_stride < 1 || sampling.exclusion_radius < 0)
        throw ConfigError("sampling settings out of range");
    if (boost.rounds < 1 || boost.dims_per_round < 1 || boost.thresholds < 1) throw ConfigError("boost settings out of range");
    if (synth_pairs < 1) throw ConfigError("synth.pairs must be >= 1");
    try {
        crf.validate();
        (void)candidates();
    } catch (const ParameterError& e) {
        throw ConfigError(e.what());
    }
}

ExperimentConfig parse_config(std::string_view text, std::span<const std::string> overrides)
{
    json j;
    try {
        j = text.empty() ? json::object() : json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& o : overrides) apply_override(j, o);
    if (j.contains("schema_version") && j.at("schema_version") != kConfigSchemaVersion)
        throw ConfigError("unsupported config schema_version");
    reject_unknown(j, to_json(ExperimentConfig{}), "");
    ExperimentConfig c;
    try {
        c = from_json(j);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, std::span<const std::string> overrides)
{
    const auto bytes = detail::read_file(path);
    try {
        return parse_config({reinterpret_cast<const char*>(bytes.data()), bytes.size()}, overrides);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

ExperimentConfig default_config(std::span<const std::string> overrides) { return parse_config("", overrides); }

std::string config_to_json(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

} // namespace lmatch::bench
