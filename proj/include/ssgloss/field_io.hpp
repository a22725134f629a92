#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssgloss/config.hpp"
#include "ssgloss/edge_mask.hpp"
#include "ssgloss/error.hpp"
#include "ssgloss/image.hpp"
#include "ssgloss/image_io.hpp"
#include "ssgloss/parallel.hpp"
#include "ssgloss/ssg.hpp"

// Flat-binary field container:
//   "SSGF" | u32 version | u32 header length | JSON header | payload
// All integers and floats little-endian. Payloads:
//   grad  h*w*c f32
//   ssg   n_centers (row, col) u32 pairs, then n_centers*n_offsets f32
//   mask  h*w bytes, each 0 or 1

namespace ssgloss {

inline constexpr std::uint32_t field_format_version = 1;

using Field = std::variant<GradientField, Ssg, EdgeMask>;

namespace detail {

class ByteWriter {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        bytes_.insert(bytes_.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void u8(std::uint8_t v) { bytes_.push_back(v); }
    std::vector<std::uint8_t> take() { return std::move(bytes_); }

private:
    std::vector<std::uint8_t> bytes_;
};

class ByteReader {
public:
    ByteReader(const std::vector<std::uint8_t>& bytes, std::string name) : bytes_(bytes), name_(std::move(name)) {}

    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw FormatError(name_ + ": truncated field file");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    std::uint8_t u8() {
        need(1);
        return bytes_[pos_++];
    }
    std::string text(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    [[nodiscard]] bool at_end() const noexcept { return pos_ == bytes_.size(); }
    [[nodiscard]] const std::string& name() const noexcept { return name_; }

private:
    const std::vector<std::uint8_t>& bytes_;
    std::string name_;
    std::size_t pos_ = 0;
};

inline void write_header(ByteWriter& out, const nlohmann::json& header) {
    const std::string text = header.dump();
    out.raw("SSGF", 4);
    out.u32(field_format_version);
    out.u32(static_cast<std::uint32_t>(text.size()));
    out.raw(text.data(), text.size());
}

template <typename T>
T json_get(const nlohmann::json& header, const char* key, const std::string& name) {
    if (!header.contains(key)) throw FormatError(name + ": header lacks '" + key + "'");
    try {
        return header.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw FormatError(name + ": header key '" + key + "' has the wrong type");
    }
}

inline int json_dim(const nlohmann::json& header, const char* key, const std::string& name) {
    const auto v = json_get<std::int64_t>(header, key, name);
    if (v < 0 || v > (1 << 24)) throw FormatError(name + ": header key '" + key + "' out of range");
    return static_cast<int>(v);
}

} // namespace detail

inline std::vector<std::uint8_t> encode_field(const GradientField& field) {
    detail::ByteWriter out;
    detail::write_header(out, {{"kind", "grad"}, {"h", field.height}, {"w", field.width}, {"c", field.channels}});
    for (float v : field.data) out.f32(v);
    return out.take();
}

// The similarity scale travels as "h_scale" because "h" already holds the
// image height in every header.
inline std::vector<std::uint8_t> encode_field(const Ssg& ssg) {
    detail::ByteWriter out;
    detail::write_header(out, {{"kind", "ssg"},
                               {"h", ssg.height},
                               {"w", ssg.width},
                               {"c", ssg.channels},
                               {"Ks", ssg.search_size},
                               {"Kw", ssg.window_size},
                               {"h_scale", ssg.h},
                               {"stride", ssg.stride},
                               {"n_centers", ssg.n_centers()},
                               {"n_offsets", ssg.n_offsets()}});
    for (const Pixel& p : ssg.centers) {
        out.u32(static_cast<std::uint32_t>(p.row));
        out.u32(static_cast<std::uint32_t>(p.col));
    }
    for (double w : ssg.weights) out.f32(static_cast<float>(w));
    return out.take();
}

inline std::vector<std::uint8_t> encode_field(const EdgeMask& mask) {
    detail::ByteWriter out;
    detail::write_header(out, {{"kind", "mask"},
                               {"h", mask.height},
                               {"w", mask.width},
                               {"c", 1},
                               {"t", mask.threshold},
                               {"Ks", mask.search_size},
                               {"Kw", mask.window_size},
                               {"edge_fraction", mask.edge_fraction}});
    for (std::uint8_t b : mask.bits) out.u8(b ? 1 : 0);
    return out.take();
}

inline Field decode_field(const std::vector<std::uint8_t>& bytes, const std::string& name = "<memory>") {
    detail::ByteReader in(bytes, name);
    if (in.text(4) != "SSGF") throw FormatError(name + ": not an SSGF field file");
    const std::uint32_t version = in.u32();
    if (version != field_format_version)
        throw FormatError(name + ": unsupported field format version " + std::to_string(version));
    const std::uint32_t header_len = in.u32();
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(in.text(header_len));
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(name + ": malformed header: " + e.what());
    }
    const auto kind = detail::json_get<std::string>(header, "kind", name);
    const int h = detail::json_dim(header, "h", name);
    const int w = detail::json_dim(header, "w", name);
    const int c = detail::json_dim(header, "c", name);

    Field result;
    if (kind == "grad") {
        if (c < 1) throw FormatError(name + ": gradient needs at least one channel");
        GradientField field(h, w, c);
        for (float& v : field.data) v = in.f32();
        result = std::move(field);
    } else if (kind == "ssg") {
        SsgConfig cfg;
        cfg.search_size = detail::json_dim(header, "Ks", name);
        cfg.window_size = detail::json_dim(header, "Kw", name);
        cfg.h = detail::json_get<double>(header, "h_scale", name);
        cfg.stride = detail::json_dim(header, "stride", name);
        try {
            cfg.validate();
        } catch (const ConfigError& e) {
            throw FormatError(name + ": " + e.what());
        }
        Ssg ssg;
        ssg.height = h;
        ssg.width = w;
        ssg.channels = c;
        ssg.search_size = cfg.search_size;
        ssg.window_size = cfg.window_size;
        ssg.h = cfg.h;
        ssg.stride = cfg.stride;
        ssg.offsets = sample_offsets(cfg);
        const auto n_centers = detail::json_get<std::uint64_t>(header, "n_centers", name);
        const auto n_offsets = detail::json_get<std::uint64_t>(header, "n_offsets", name);
        if (n_offsets != ssg.offsets.size()) throw FormatError(name + ": n_offsets disagrees with Ks and stride");
        in.need(n_centers * 8);
        ssg.centers.resize(n_centers);
        for (auto& p : ssg.centers) {
            p.row = static_cast<int>(in.u32());
            p.col = static_cast<int>(in.u32());
        }
        in.need(n_centers * n_offsets * 4);
        ssg.weights.resize(n_centers * n_offsets);
        for (double& v : ssg.weights) v = static_cast<double>(in.f32());
        result = std::move(ssg);
    } else if (kind == "mask") {
        const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);
        in.need(n);
        std::vector<std::uint8_t> bits(n);
        for (auto& b : bits) {
            b = in.u8();
            if (b > 1) throw FormatError(name + ": mask payload must be 0/1 bytes");
        }
        result = EdgeMask::from_bits(h, w, std::move(bits), detail::json_get<double>(header, "t", name),
                                     detail::json_dim(header, "Ks", name), detail::json_dim(header, "Kw", name));
    } else {
        throw FormatError(name + ": unknown field kind '" + kind + "'");
    }
    if (!in.at_end()) throw FormatError(name + ": trailing bytes after payload");
    return result;
}

template <typename T>
void write_field(const std::filesystem::path& path, const T& field) {
    detail::write_file_bytes(path, encode_field(field));
}

inline Field read_field(const std::filesystem::path& path) {
    return decode_field(detail::read_file_bytes(path), path.string());
}

template <typename T>
T read_field_as(const std::filesystem::path& path) {
    Field field = read_field(path);
    if (auto* v = std::get_if<T>(&field)) return std::move(*v);
    throw FormatError(path.string() + ": field file holds a different kind");
}

inline EdgeMask load_mask(const std::filesystem::path& path) { return read_field_as<EdgeMask>(path); }

inline std::filesystem::path mask_path_for(const std::filesystem::path& image_path) {
    return image_path.string() + ".mask.ssgf";
}

struct MaskBatchResult {
    struct Written {
        std::filesystem::path input;
        std::filesystem::path output;
        double edge_fraction = 0.0;
        std::size_t n_centers = 0;
    };
    struct Failed {
        std::filesystem::path input;
        std::string message;
    };
    std::vector<Written> written;
    std::vector<Failed> failed;
};

// Offline mask pass: one "<image>.mask.ssgf" beside every input. A failing
// file is reported and skipped; the rest of the batch still runs.
inline MaskBatchResult precompute_masks(const std::vector<std::filesystem::path>& inputs, const SsgConfig& cfg,
                                        int n_workers = 1) {
    cfg.validate();
    struct Outcome {
        bool ok = false;
        MaskBatchResult::Written written;
        std::string message;
    };
    std::vector<Outcome> outcomes(inputs.size());
    parallel_for(inputs.size(), n_workers, [&](std::size_t i) {
        Outcome& o = outcomes[i];
        try {
            const EdgeMask mask = compute_edge_mask(load_image(inputs[i]), cfg);
            const auto out = mask_path_for(inputs[i]);
            write_field(out, mask);
            o.written = {inputs[i], out, mask.edge_fraction, mask.centers.size()};
            o.ok = true;
        } catch (const Error& e) {
            o.message = e.what();
        }
    });
    MaskBatchResult result;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        if (outcomes[i].ok)
            result.written.push_back(std::move(outcomes[i].written));
        else
            result.failed.push_back({inputs[i], std::move(outcomes[i].message)});
    }
    return result;
}

} // namespace ssgloss
