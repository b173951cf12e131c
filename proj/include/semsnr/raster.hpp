#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "semsnr/error.hpp"

namespace semsnr {

/// Grayscale image with a real-valued working plane stored row-major.
///
/// `bit_depth` records the storage depth (8 or 16) used by quantize() and the
/// PGM writer. The working plane itself is not clamped; filters and zero-mean
/// test fields may legitimately go negative until export.
class Raster {
public:
    Raster() = default;

    Raster(std::size_t width, std::size_t height, int bit_depth = 8, double fill = 0.0)
        : width_(width), height_(height), bit_depth_(bit_depth), data_(width * height, fill) {
        check_shape();
    }

    Raster(std::size_t width, std::size_t height, int bit_depth, std::vector<double> data)
        : width_(width), height_(height), bit_depth_(bit_depth), data_(std::move(data)) {
        check_shape();
        require(data_.size() == width_ * height_, Errc::size_mismatch,
                "raster data length " + std::to_string(data_.size()) + " != " +
                    std::to_string(width_ * height_));
        for (double v : data_) require(std::isfinite(v), Errc::domain, "raster value is not finite");
    }

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    int bit_depth() const noexcept { return bit_depth_; }
    double max_value() const noexcept { return std::ldexp(1.0, bit_depth_) - 1.0; }

    double& operator()(std::size_t x, std::size_t y) noexcept { return data_[y * width_ + x]; }
    double operator()(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }

    std::span<double> pixels() noexcept { return data_; }
    std::span<const double> pixels() const noexcept { return data_; }
    std::span<const double> row(std::size_t y) const noexcept {
        return std::span<const double>(data_).subspan(y * width_, width_);
    }

    void set_bit_depth(int bits) {
        require(bits == 8 || bits == 16, Errc::domain, "bit depth must be 8 or 16");
        bit_depth_ = bits;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    void check_shape() const {
        require(width_ >= 2 && height_ >= 2, Errc::domain, "raster must be at least 2x2");
        require(bit_depth_ == 8 || bit_depth_ == 16, Errc::domain, "bit depth must be 8 or 16");
    }

    std::size_t width_ = 0;
    std::size_t height_ = 0;
    int bit_depth_ = 8;
    std::vector<double> data_;
};

struct ImageStats {
    double mean = 0;
    double variance = 0;
    double min = 0;
    double max = 0;
};

/// Population moments (divisor = pixel count).
inline ImageStats stats(const Raster& r) {
    auto px = r.pixels();
    long double sum = 0;
    for (double v : px) sum += v;
    const long double mean = sum / static_cast<long double>(px.size());
    long double ss = 0;
    for (double v : px) ss += (v - mean) * (v - mean);
    auto [lo, hi] = std::minmax_element(px.begin(), px.end());
    return {static_cast<double>(mean), static_cast<double>(ss / static_cast<long double>(px.size())),
            *lo, *hi};
}

/// Elementwise a - b; shapes must agree.
inline Raster difference(const Raster& a, const Raster& b) {
    require(a.width() == b.width() && a.height() == b.height(), Errc::domain,
            "raster dimensions differ");
    Raster out(a.width(), a.height(), a.bit_depth());
    auto pa = a.pixels();
    auto pb = b.pixels();
    auto po = out.pixels();
    for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
    return out;
}

/// Mean squared difference between two equally sized rasters.
inline double mse(const Raster& a, const Raster& b) {
    require(a.width() == b.width() && a.height() == b.height(), Errc::domain,
            "raster dimensions differ");
    long double acc = 0;
    auto pa = a.pixels();
    auto pb = b.pixels();
    for (std::size_t i = 0; i < pa.size(); ++i) {
        const long double d = pa[i] - pb[i];
        acc += d * d;
    }
    return static_cast<double>(acc / static_cast<long double>(pa.size()));
}

inline Raster scaled(const Raster& r, double factor, double offset = 0.0) {
    Raster out = r;
    for (double& v : out.pixels()) v = v * factor + offset;
    return out;
}

struct QuantizeResult {
    Raster raster;
    std::size_t clamped = 0;
};

/// Round half away from zero and clamp into [0, 2^bits - 1].
inline QuantizeResult quantize(const Raster& r, int bit_depth) {
    require(bit_depth == 8 || bit_depth == 16, Errc::domain, "bit depth must be 8 or 16");
    QuantizeResult res{Raster(r.width(), r.height(), bit_depth), 0};
    const double hi = res.raster.max_value();
    auto src = r.pixels();
    auto dst = res.raster.pixels();
    for (std::size_t i = 0; i < src.size(); ++i) {
        require(std::isfinite(src[i]), Errc::domain, "cannot quantize a non-finite value");
        double q = std::round(src[i]);
        if (q < 0.0) {
            q = 0.0;
            ++res.clamped;
        } else if (q > hi) {
            q = hi;
            ++res.clamped;
        }
        dst[i] = q;
    }
    return res;
}

// ---------------------------------------------------------------------------
// Binary PGM (P5)

namespace detail {

class PgmHeaderReader {
public:
    explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string token() {
        skip_space_and_comments();
        std::string tok;
        while (pos_ < bytes_.size() && !is_space(bytes_[pos_]) && bytes_[pos_] != '#')
            tok.push_back(static_cast<char>(bytes_[pos_++]));
        if (tok.empty()) fail(Errc::parse, "unexpected end of PGM header");
        return tok;
    }

    std::size_t number(const char* what) {
        std::string tok = token();
        if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9)
            fail(Errc::parse, std::string("bad PGM ") + what + " token '" + tok + "'");
        return static_cast<std::size_t>(std::stoul(tok));
    }

    // Exactly one whitespace byte separates maxval from the raster.
    std::size_t payload_offset() {
        if (pos_ >= bytes_.size() || !is_space(bytes_[pos_]))
            fail(Errc::parse, "missing whitespace after PGM maxval");
        return pos_ + 1;
    }

private:
    static bool is_space(std::uint8_t c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
    }

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (is_space(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline Raster decode_pgm(std::span<const std::uint8_t> bytes) {
    detail::PgmHeaderReader rd(bytes);
    const std::string magic = rd.token();
    if (magic != "P5") fail(Errc::parse, "bad PGM magic token '" + magic + "'");
    const std::size_t w = rd.number("width");
    const std::size_t h = rd.number("height");
    const std::size_t maxval = rd.number("maxval");
    if (maxval != 255 && maxval != 65535)
        fail(Errc::parse, "unsupported PGM maxval token '" + std::to_string(maxval) + "'");
    const std::size_t off = rd.payload_offset();
    const std::size_t bps = maxval == 255 ? 1 : 2;
    const std::size_t need = w * h * bps;
    if (bytes.size() - off != need)
        fail(Errc::size_mismatch, "PGM payload has " + std::to_string(bytes.size() - off) +
                                      " bytes, expected " + std::to_string(need));
    std::vector<double> data(w * h);
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (bps == 1) {
            data[i] = bytes[off + i];
        } else {
            data[i] = static_cast<double>((bytes[off + 2 * i] << 8) | bytes[off + 2 * i + 1]);
        }
    }
    return Raster(w, h, bps == 1 ? 8 : 16, std::move(data));
}

/// Serialises the quantized storage plane. 16-bit samples are big-endian.
inline std::vector<std::uint8_t> encode_pgm(const Raster& r) {
    const Raster q = quantize(r, r.bit_depth()).raster;
    const std::string header = "P5\n" + std::to_string(q.width()) + " " +
                               std::to_string(q.height()) + "\n" +
                               std::to_string(static_cast<long>(q.max_value())) + "\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + q.size() * (q.bit_depth() / 8));
    for (double v : q.pixels()) {
        const auto s = static_cast<std::uint32_t>(v);
        if (q.bit_depth() == 8) {
            out.push_back(static_cast<std::uint8_t>(s));
        } else {
            out.push_back(static_cast<std::uint8_t>(s >> 8));
            out.push_back(static_cast<std::uint8_t>(s & 0xff));
        }
    }
    return out;
}

inline Raster load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open '" + path + "'");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return decode_pgm(bytes);
}

inline void save_pgm(const Raster& r, const std::string& path) {
    const auto bytes = encode_pgm(r);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(Errc::io, "cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(Errc::io, "short write to '" + path + "'");
}

}  // namespace semsnr
