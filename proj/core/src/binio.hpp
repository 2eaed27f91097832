#pragma once

// Little-endian binary helpers shared by the file formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmatch/error.hpp"

namespace lmatch::detail {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

class ByteWriter {
public:
    void text(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

    template <typename T>
    void put(T v)
    {
        std::uint8_t buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        bytes_.insert(bytes_.end(), buf, buf + sizeof(T));
    }

    std::vector<std::uint8_t>& bytes() { return bytes_; }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    // Reads up to and including '\n'; returns the line without it.
    std::string line()
    {
        std::string out;
        while (true) {
            if (pos_ >= bytes_.size()) throw FormatError("unexpected end of header");
            const char c = static_cast<char>(bytes_[pos_++]);
            if (c == '\n') return out;
            out.push_back(c);
        }
    }

    template <typename T>
    T get()
    {
        if (remaining() < sizeof(T)) throw FormatError("truncated binary payload");
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);

} // namespace lmatch::detail
