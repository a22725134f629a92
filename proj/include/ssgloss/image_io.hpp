#pragma once

#include <png.h>

#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"

namespace ssgloss {

namespace detail {

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
    return bytes;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failure on '" + path.string() + "'");
}

class PnmReader {
public:
    PnmReader(const std::vector<std::uint8_t>& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

    ImageU8 decode() {
        if (bytes_.size() < 2 || bytes_[0] != 'P') fail("missing PNM magic");
        const char kind = static_cast<char>(bytes_[1]);
        pos_ = 2;
        int channels = 0;
        bool ascii = false;
        switch (kind) {
        case '2': channels = 1; ascii = true; break;
        case '3': channels = 3; ascii = true; break;
        case '5': channels = 1; break;
        case '6': channels = 3; break;
        default: fail("unsupported PNM variant P" + std::string(1, kind));
        }
        const long width = next_int();
        const long height = next_int();
        const long maxval = next_int();
        if (width <= 0 || height <= 0 || width > (1 << 20) || height > (1 << 20)) fail("invalid dimensions");
        if (maxval <= 0) fail("invalid maxval");
        if (maxval > 255) fail("only 8-bit PNM is supported (maxval " + std::to_string(maxval) + ")");

        ImageU8 img(static_cast<int>(height), static_cast<int>(width), channels);
        if (ascii) {
            for (auto& v : img.data) v = rescale(next_int(), maxval);
        } else {
            // Exactly one whitespace byte separates the header from the raster.
            if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
            ++pos_;
            if (bytes_.size() - pos_ < img.data.size()) fail("truncated raster");
            for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = rescale(bytes_[pos_ + i], maxval);
        }
        return img;
    }

private:
    [[noreturn]] void fail(const std::string& what) const { throw FormatError(name_ + ": " + what); }

    static std::uint8_t rescale(long v, long maxval) {
        if (v < 0 || v > maxval) throw FormatError("PNM sample out of range");
        if (maxval == 255) return static_cast<std::uint8_t>(v);
        return static_cast<std::uint8_t>((v * 255 + maxval / 2) / maxval);
    }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long next_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail("expected integer");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > (1L << 30)) fail("integer overflow");
            ++pos_;
        }
        return v;
    }

    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

inline ImageU8 decode_png(const std::vector<std::uint8_t>& bytes, const std::string& name) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        throw FormatError(name + ": " + image.message);
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw FormatError(name + ": 16-bit PNG is not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    ImageU8 img(static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1);
    if (!png_image_finish_read(&image, nullptr, img.data.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw FormatError(name + ": " + msg);
    }
    return img;
}

inline std::string lower_extension(const std::filesystem::path& path) {
    std::string ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

} // namespace detail

// Decodes an 8-bit PNG or PGM/PPM. The container is sniffed from the
// leading bytes, not the extension.
inline ImageU8 load_image(const std::filesystem::path& path) {
    const auto bytes = detail::read_file_bytes(path);
    static constexpr std::uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_magic, 8) == 0) return detail::decode_png(bytes, path.string());
    if (bytes.size() >= 2 && bytes[0] == 'P') return detail::PnmReader(bytes, path.string()).decode();
    throw FormatError(path.string() + ": unrecognized image format");
}

// Encodes by extension: .png, or binary .pgm/.ppm/.pnm.
inline void save_image(const std::filesystem::path& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3) throw FormatError("only 1- or 3-channel images can be saved");
    const std::string ext = detail::lower_extension(path);
    if (ext == ".png") {
        png_image image;
        std::memset(&image, 0, sizeof image);
        image.version = PNG_IMAGE_VERSION;
        image.width = static_cast<png_uint_32>(img.width);
        image.height = static_cast<png_uint_32>(img.height);
        image.format = img.channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
        png_alloc_size_t size = 0;
        if (!png_image_write_get_memory_size(image, size, 0, img.data.data(), 0, nullptr))
            throw FormatError(path.string() + ": " + image.message);
        std::vector<std::uint8_t> bytes(size);
        if (!png_image_write_to_memory(&image, bytes.data(), &size, 0, img.data.data(), 0, nullptr))
            throw FormatError(path.string() + ": " + image.message);
        bytes.resize(size);
        detail::write_file_bytes(path, bytes);
        return;
    }
    if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
        if (ext == ".pgm" && img.channels != 1) throw FormatError(path.string() + ": PGM requires one channel");
        if (ext == ".ppm" && img.channels != 3) throw FormatError(path.string() + ": PPM requires three channels");
        const std::string header = std::string(img.channels == 1 ? "P5" : "P6") + "\n" + std::to_string(img.width) +
                                   " " + std::to_string(img.height) + "\n255\n";
        std::vector<std::uint8_t> bytes(header.begin(), header.end());
        bytes.insert(bytes.end(), img.data.begin(), img.data.end());
        detail::write_file_bytes(path, bytes);
        return;
    }
    throw FormatError(path.string() + ": unsupported output extension '" + ext + "'");
}

} // namespace ssgloss
