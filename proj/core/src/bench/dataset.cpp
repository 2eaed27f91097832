#include "lmatch/bench/dataset.hpp"

#include <nlohmann/json.hpp>

#include <fstream>

#include "../binio.hpp"
#include "lmatch/bench/flow_io.hpp"
#include "lmatch/bench/imageio.hpp"
#include "lmatch/error.hpp"

namespace lmatch::bench {

namespace {

constexpr int kSchemaVersion = 1;

std::pair<int, int> truth_size(const GroundTruth& gt)
{
    return std::visit([](const auto& t) { return std::pair{t.width, t.height}; }, gt);
}

std::vector<std::uint8_t> load_occlusion(const std::filesystem::path& path)
{
    const PngRaster r = read_png(path);
    if (r.channels != 1 || r.bit_depth != 8) throw FormatError(path.string() + ": occlusion mask must be 8-bit gray");
    std::vector<std::uint8_t> out(r.samples.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.samples[i] >= 128;
    return out;
}

} // namespace

void validate_pair(const DatasetPair& p)
{
    if (p.image1.channels() != 3 || p.image2.channels() != 3) throw ShapeError(p.name + ": images must be RGB");
    if (p.image1.width() != p.image2.width() || p.image1.height() != p.image2.height())
        throw ShapeError(p.name + ": images differ in size");
    const auto [w, h] = truth_size(p.truth);
    if (w != p.image1.width() || h != p.image1.height()) throw ShapeError(p.name + ": ground truth size mismatch");
    if (!p.occlusion.empty() && p.occlusion.size() != static_cast<std::size_t>(w) * h)
        throw ShapeError(p.name + ": occlusion mask size mismatch");
}

Dataset load_dataset(const std::filesystem::path& dir)
{
    const auto index = dir / "dataset.json";
    const auto bytes = detail::read_file(index);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(index.string() + ": " + e.what());
    }
    Dataset ds;
    try {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
            throw FormatError(index.string() + ": unsupported schema_version");
        ds.task = task_from_string(j.at("task").get<std::string>());
        for (const auto& e : j.at("pairs")) {
            DatasetPair p;
            p.name = e.at("name").get<std::string>();
            p.image1 = load_image(dir / e.at("image1").get<std::string>());
            p.image2 = load_image(dir / e.at("image2").get<std::string>());
            const auto truth = dir / e.at("truth").get<std::string>();
            switch (ds.task) {
            case Task::Stereo: p.truth = load_kitti_disparity(truth); break;
            case Task::Flow: p.truth = load_flow(truth); break;
            case Task::Change: p.truth = load_change_mask(truth); break;
            }
            if (e.contains("occlusion") && !e.at("occlusion").is_null())
                p.occlusion = load_occlusion(dir / e.at("occlusion").get<std::string>());
            validate_pair(p);
            ds.pairs.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(index.string() + ": " + e.what());
    }
    return ds;
}

void save_dataset(const std::filesystem::path& dir, const Dataset& ds)
{
    std::filesystem::create_directories(dir);
    nlohmann::json pairs = nlohmann::json::array();
    for (const auto& p : ds.pairs) {
        validate_pair(p);
        if (task_of(p.truth) != ds.task) throw ConfigError(p.name + ": ground truth does not match the dataset task");
        nlohmann::json e;
        e["name"] = p.name;
        e["image1"] = p.name + "_1.png";
        e["image2"] = p.name + "_2.png";
        save_image(dir / (p.name + "_1.png"), p.image1);
        save_image(dir / (p.name + "_2.png"), p.image2);
        switch (ds.task) {
        case Task::Stereo:
            e["truth"] = p.name + "_disp.png";
            save_disparity(dir / (p.name + "_disp.png"), std::get<DisparityMap>(p.truth));
            break;
        case Task::Flow:
            e["truth"] = p.name + "_flow.flo";
            save_flow(dir / (p.name + "_flow.flo"), std::get<FlowField>(p.truth));
            break;
        case Task::Change:
            e["truth"] = p.name + "_mask.png";
            save_change_mask(dir / (p.name + "_mask.png"), std::get<ChangeMask>(p.truth));
            break;
        }
        if (p.occlusion.empty()) {
            e["occlusion"] = nullptr;
        } else {
            const int w = p.image1.width(), h = p.image1.height();
            PngRaster r{w, h, 1, 8, {}};
            for (auto v : p.occlusion) r.samples.push_back(v ? 255 : 0);
            e["occlusion"] = p.name + "_occ.png";
            write_png(dir / (p.name + "_occ.png"), r);
        }
        pairs.push_back(std::move(e));
    }
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["task"] = std::string(to_string(ds.task));
    j["pairs"] = std::move(pairs);
    const std::string text = j.dump(2) + "\n";
    detail::write_file(dir / "dataset.json", {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

} // namespace lmatch::bench
