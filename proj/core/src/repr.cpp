#include "lmatch/repr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lmatch/error.hpp"
#include "lmatch/rng.hpp"

namespace lmatch {

RectangleSet sample_rectangles(std::uint64_t seed, int count, int max_extent)
{
    if (count < 1) throw ParameterError("rectangle count must be >= 1");
    if (count > 65535) throw ParameterError("rectangle count must fit in 16 bits");
    if (max_extent < 1) throw ParameterError("rectangle max extent must be >= 1");
    RectangleSet set;
    set.seed = seed;
    set.max_extent = max_extent;
    set.rects.reserve(count);
    set.rects.push_back({0, 0, 1, 1});
    Rng rng(seed);
    const double log_max = std::log(static_cast<double>(max_extent) + 1.0);
    auto log_uniform_size = [&] {
        // exp(U[0, log(E+1))) lies in [1, E+1); flooring gives sizes in [1, E]
        return std::clamp(static_cast<int>(std::exp(rng.uniform(0.0, log_max))), 1, max_extent);
    };
    for (int i = 1; i < count; ++i) {
        Rectangle r;
        r.dx = static_cast<int>(rng.uniform_int(-max_extent, max_extent));
        r.dy = static_cast<int>(rng.uniform_int(-max_extent, max_extent));
        r.w = log_uniform_size();
        r.h = log_uniform_size();
        set.rects.push_back(r);
    }
    return set;
}

std::vector<FamilySpec> family_layout(const RepresentationConfig& cfg, const std::vector<Codebook>& codebooks)
{
    std::vector<FamilySpec> out;
    for (auto kind : cfg.bow_families) {
        auto it = std::find_if(codebooks.begin(), codebooks.end(), [&](const Codebook& c) { return c.kind == kind; });
        if (it == codebooks.end())
            throw ConfigError("no codebook for descriptor family '" + std::string(to_string(kind)) + "'");
        out.push_back({FamilyType::BagOfWords, kind, it->words, cfg.bow_factor});
    }
    if (cfg.average_features) out.push_back({FamilyType::Average, DescriptorKind::FilterBank17, 17, 1});
    if (out.empty()) throw ConfigError("representation has no feature families");
    if (out.size() > 255) throw ConfigError("too many feature families");
    return out;
}

FeatureSpace::FeatureSpace(std::vector<FamilySpec> families, std::size_t rect_count)
    : families_(std::move(families)), rect_count_(rect_count)
{
    for (const auto& f : families_) {
        offsets_.push_back(channels_per_rect_);
        channels_per_rect_ += static_cast<std::size_t>(f.channels);
    }
}

std::uint64_t FeatureSpace::ordinal(const FeatureIndex& idx) const
{
    return static_cast<std::uint64_t>(idx.rect) * channels_per_rect_ + offsets_[idx.family] + idx.channel;
}

FeatureIndex FeatureSpace::decode(std::uint64_t ordinal) const
{
    FeatureIndex idx;
    idx.rect = static_cast<std::uint16_t>(ordinal / channels_per_rect_);
    const std::size_t within = ordinal % channels_per_rect_;
    auto it = std::upper_bound(offsets_.begin(), offsets_.end(), within);
    idx.family = static_cast<std::uint8_t>(std::distance(offsets_.begin(), it) - 1);
    idx.channel = static_cast<std::uint16_t>(within - offsets_[idx.family]);
    return idx;
}

bool FeatureSpace::valid(const FeatureIndex& idx) const
{
    return idx.rect < rect_count_ && idx.family < families_.size() &&
           idx.channel < static_cast<std::size_t>(families_[idx.family].channels);
}

ImageRepresentation build_representation(const Image& rgb, const std::vector<Codebook>& codebooks,
                                         const RepresentationConfig& cfg)
{
    const auto layout = family_layout(cfg, codebooks);
    Image lab = to_cielab(rgb);

    std::optional<DescriptorField> bank;
    auto filter_bank = [&]() -> const DescriptorField& {
        if (!bank) bank = filter_bank_17(lab);
        return *bank;
    };

    std::vector<ImageRepresentation::Family> families;
    for (const auto& spec : layout) {
        if (spec.type == FamilyType::Average) {
            families.push_back({spec, IntegralGrid::build(filter_bank().to_image(), spec.factor)});
            continue;
        }
        const Codebook& cb =
            *std::find_if(codebooks.begin(), codebooks.end(), [&](const Codebook& c) { return c.kind == spec.descriptor; });
        const DescriptorField field = spec.descriptor == DescriptorKind::FilterBank17
                                          ? filter_bank()
                                          : dense_descriptor(lab, spec.descriptor, cfg.descriptor_params);
        const auto assignment = soft_assign(field, cb);
        families.push_back({spec, IntegralGrid::build(assignment.to_word_planes(), spec.factor)});
    }
    ImageRepresentation rep(rgb.width(), rgb.height(), std::move(families));
    rep.set_lab(std::move(lab));
    return rep;
}

ImageRepresentation representation_from_planes(int width, int height, const std::vector<FamilySpec>& families,
                                               const std::vector<Image>& planes)
{
    if (families.size() != planes.size()) throw ShapeError("one accumulator raster per family required");
    std::vector<ImageRepresentation::Family> out;
    for (std::size_t i = 0; i < families.size(); ++i) {
        if (planes[i].width() != width || planes[i].height() != height || planes[i].channels() != families[i].channels)
            throw ShapeError("accumulator raster shape does not match family " + std::to_string(i));
        out.push_back({families[i], IntegralGrid::build(planes[i], families[i].factor)});
    }
    return {width, height, std::move(out)};
}

AlignedRects crop_align(const Rectangle& r, PixelCoord anchor1, PixelCoord anchor2, PixelCoord dims1,
                        PixelCoord dims2)
{
    auto cut_low = [](int start) { return std::max(0, -start); };
    auto cut_high = [](int end, int limit) { return std::max(0, end - limit); };

    const int x1 = anchor1.x + r.dx, y1 = anchor1.y + r.dy;
    const int x2 = anchor2.x + r.dx, y2 = anchor2.y + r.dy;
    const int left = std::max(cut_low(x1), cut_low(x2));
    const int top = std::max(cut_low(y1), cut_low(y2));
    const int right = std::max(cut_high(x1 + r.w, dims1.x), cut_high(x2 + r.w, dims2.x));
    const int bottom = std::max(cut_high(y1 + r.h, dims1.y), cut_high(y2 + r.h, dims2.y));

    Rectangle c{r.dx + left, r.dy + top, r.w - left - right, r.h - top - bottom};
    AlignedRects out;
    if (c.empty()) {
        out.empty = true;
        out.first = out.second = {0, 0, 0, 0};
        return out;
    }
    out.first = out.second = c;
    return out;
}

namespace {

double density(const IntegralGrid& g, int channel, PixelCoord anchor, const Rectangle& r)
{
    const CellRect cr = g.snap(anchor, r);
    const long area = g.pixel_area(cr);
    return area > 0 ? g.sum(channel, cr) / static_cast<double>(area) : 0.0;
}

} // namespace

double feature_diff(const RectangleSet& rects, const ImageRepresentation& rep1, const ImageRepresentation& rep2,
                    PixelCoord x1, PixelCoord x2, const FeatureIndex& idx, bool absolute)
{
    const AlignedRects a = crop_align(rects.rects[idx.rect], x1, x2, {rep1.width(), rep1.height()},
                                      {rep2.width(), rep2.height()});
    if (a.empty) return 0.0;
    const double v = density(rep1.family(idx.family).grid, idx.channel, x1, a.first) -
                     density(rep2.family(idx.family).grid, idx.channel, x2, a.second);
    return absolute ? std::abs(v) : v;
}

} // namespace lmatch
