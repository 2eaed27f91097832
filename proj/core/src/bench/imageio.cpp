#include "lmatch/bench/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <string>

#include "../binio.hpp"
#include "lmatch/error.hpp"

namespace lmatch::bench {

namespace {

struct ReadCursor {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos;
};

void read_fn(png_structp png, png_bytep out, png_size_t n)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->size - cur->pos < n) png_error(png, "unexpected end of data");
    std::memcpy(out, cur->data + cur->pos, n);
    cur->pos += n;
}

void write_fn(png_structp png, png_bytep in, png_size_t n)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), in, in + n);
}

void flush_fn(png_structp) {}

struct ErrorSlot {
    char message[256] = "libpng error";
};

void error_fn(png_structp png, png_const_charp msg)
{
    auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
    std::snprintf(slot->message, sizeof slot->message, "%s", msg);
    png_longjmp(png, 1);
}

void warning_fn(png_structp, png_const_charp) {}

} // namespace

PngRaster decode_png(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw FormatError("not a PNG stream");
    ErrorSlot slot;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &slot, error_fn, warning_fn);
    if (!png) throw FormatError("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    ReadCursor cur{bytes.data(), bytes.size(), 0};
    PngRaster out;
    std::vector<png_byte> row;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        throw FormatError(std::string("PNG decode: ") + slot.message);
    }
    png_set_read_fn(png, &cur, read_fn);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) png_error(png, "interlaced PNG not supported");
    png_read_update_info(png, info);

    out.width = static_cast<int>(png_get_image_width(png, info));
    out.height = static_cast<int>(png_get_image_height(png, info));
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    out.samples.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
    row.resize(png_get_rowbytes(png, info));
    const std::size_t per_row = static_cast<std::size_t>(out.width) * out.channels;
    for (int y = 0; y < out.height; ++y) {
        png_read_row(png, row.data(), nullptr);
        std::uint16_t* dst = out.samples.data() + y * per_row;
        if (out.bit_depth == 16)
            for (std::size_t i = 0; i < per_row; ++i)
                dst[i] = static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
        else
            for (std::size_t i = 0; i < per_row; ++i) dst[i] = row[i];
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

std::vector<std::uint8_t> encode_png(const PngRaster& r)
{
    if (r.width <= 0 || r.height <= 0) throw ShapeError("cannot encode an empty raster");
    if (r.channels < 1 || r.channels > 4) throw ShapeError("PNG supports 1 to 4 channels");
    if (r.bit_depth != 8 && r.bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
    if (r.samples.size() != static_cast<std::size_t>(r.width) * r.height * r.channels)
        throw ShapeError("raster sample count does not match its size");
    static constexpr int kColor[] = {PNG_COLOR_TYPE_GRAY, PNG_COLOR_TYPE_GRAY_ALPHA, PNG_COLOR_TYPE_RGB,
                                     PNG_COLOR_TYPE_RGB_ALPHA};
    ErrorSlot slot;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &slot, error_fn, warning_fn);
    if (!png) throw FormatError("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    std::vector<png_byte> row;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw FormatError(std::string("PNG encode: ") + slot.message);
    }
    png_set_write_fn(png, &out, write_fn, flush_fn);
    png_set_compression_level(png, 6);
    png_set_IHDR(png, info, static_cast<png_uint_32>(r.width), static_cast<png_uint_32>(r.height), r.bit_depth,
                 kColor[r.channels - 1], PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t per_row = static_cast<std::size_t>(r.width) * r.channels;
    row.resize(per_row * (r.bit_depth / 8));
    for (int y = 0; y < r.height; ++y) {
        const std::uint16_t* src = r.samples.data() + y * per_row;
        if (r.bit_depth == 16)
            for (std::size_t i = 0; i < per_row; ++i) {
                row[2 * i] = static_cast<png_byte>(src[i] >> 8);
                row[2 * i + 1] = static_cast<png_byte>(src[i] & 0xff);
            }
        else
            for (std::size_t i = 0; i < per_row; ++i) {
                if (src[i] > 255) png_error(png, "8-bit sample out of range");
                row[i] = static_cast<png_byte>(src[i]);
            }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

PngRaster read_png(const std::filesystem::path& path)
{
    const auto bytes = detail::read_file(path);
    try {
        return decode_png(bytes);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_png(const std::filesystem::path& path, const PngRaster& raster)
{
    detail::write_file(path, encode_png(raster));
}

Image load_image(const std::filesystem::path& path)
{
    const PngRaster r = read_png(path);
    const float denom = r.bit_depth == 16 ? 65535.0f : 255.0f;
    const int color = r.channels >= 3 ? 3 : 1;
    Image img(r.width, r.height, 3);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x) {
            const std::uint16_t* px = r.samples.data() + (static_cast<std::size_t>(y) * r.width + x) * r.channels;
            for (int c = 0; c < 3; ++c) img.at(c, y, x) = static_cast<float>(px[color == 3 ? c : 0]) / denom;
        }
    return img;
}

namespace {

std::uint16_t to_u8(float v)
{
    return static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

} // namespace

Image quantize8(const Image& img)
{
    Image out = img;
    for (float& v : out.data()) v = static_cast<float>(to_u8(v)) / 255.0f;
    return out;
}

void save_image(const std::filesystem::path& path, const Image& img)
{
    if (img.channels() != 1 && img.channels() != 3) throw ShapeError("save_image expects 1 or 3 channels");
    PngRaster r{img.width(), img.height(), img.channels(), 8, {}};
    r.samples.resize(static_cast<std::size_t>(r.width) * r.height * r.channels);
    for (int y = 0; y < r.height; ++y)
        for (int x = 0; x < r.width; ++x)
            for (int c = 0; c < r.channels; ++c)
                r.samples[(static_cast<std::size_t>(y) * r.width + x) * r.channels + c] = to_u8(img.at(c, y, x));
    write_png(path, r);
}

DisparityMap decode_disparity(const PngRaster& r)
{
    if (r.bit_depth != 16 || r.channels != 1) throw FormatError("disparity PNG must be 16-bit single channel");
    DisparityMap m(r.width, r.height);
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        m.valid[i] = r.samples[i] != 0;
        m.disparity[i] = m.valid[i] ? static_cast<float>(r.samples[i] / 256.0) : 0.0f;
    }
    return m;
}

PngRaster encode_disparity(const DisparityMap& m)
{
    PngRaster r{m.width, m.height, 1, 16, {}};
    r.samples.resize(m.disparity.size());
    for (std::size_t i = 0; i < m.disparity.size(); ++i) {
        if (!m.valid[i]) continue;
        const double d = std::clamp(static_cast<double>(m.disparity[i]), 0.0, 255.996);
        // a valid disparity that rounds to raw 0 would read back as invalid
        r.samples[i] = static_cast<std::uint16_t>(std::max(1L, std::lround(d * 256.0)));
    }
    return r;
}

DisparityMap load_kitti_disparity(const std::filesystem::path& path) { return decode_disparity(read_png(path)); }

void save_disparity(const std::filesystem::path& path, const DisparityMap& map)
{
    write_png(path, encode_disparity(map));
}

ChangeMask decode_change_mask(const PngRaster& r)
{
    if (r.bit_depth != 8 || r.channels != 1) throw FormatError("change mask PNG must be 8-bit single channel");
    ChangeMask m(r.width, r.height);
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        m.valid[i] = r.samples[i] == 0 || r.samples[i] == 255;
        m.changed[i] = r.samples[i] == 255;
    }
    return m;
}

PngRaster encode_change_mask(const ChangeMask& m)
{
    PngRaster r{m.width, m.height, 1, 8, {}};
    r.samples.resize(m.changed.size());
    for (std::size_t i = 0; i < m.changed.size(); ++i) r.samples[i] = !m.valid[i] ? 128 : (m.changed[i] ? 255 : 0);
    return r;
}

ChangeMask load_change_mask(const std::filesystem::path& path) { return decode_change_mask(read_png(path)); }

void save_change_mask(const std::filesystem::path& path, const ChangeMask& mask)
{
    write_png(path, encode_change_mask(mask));
}

} // namespace lmatch::bench
