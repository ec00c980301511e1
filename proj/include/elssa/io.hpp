#pragma once

#include "elssa/core.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <system_error>
#include <vector>

namespace elssa {

enum class ImageFormat { png8, png16, csv };

namespace detail {

inline void append_double(std::string& out, double v) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline double parse_double(const char* first, const char* last, const std::string& path) {
    double v = 0.0;
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last)
        throw std::invalid_argument(path + ": malformed csv number '" + std::string(first, last) + "'");
    return v;
}

struct PngReadCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCtx {
    png_structp png = nullptr;
    png_infop info = nullptr;
    std::FILE* fp = nullptr;
    ~PngWriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

/// Raw grayscale codes as stored in the file, plus the bit depth (8 or 16).
inline std::pair<Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, int>
read_png_gray(const std::string& path) {
    PngReadCtx c;
    c.fp = std::fopen(path.c_str(), "rb");
    if (!c.fp) throw std::invalid_argument(path + ": cannot open file");

    png_byte header[8];
    if (std::fread(header, 1, 8, c.fp) != 8 || png_sig_cmp(header, 0, 8))
        throw std::invalid_argument(path + ": not a PNG file");

    c.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = png_create_info_struct(c.png);
    if (!c.png || !c.info) throw std::runtime_error(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(c.png))) throw std::invalid_argument(path + ": PNG decode error");

    png_init_io(c.png, c.fp);
    png_set_sig_bytes(c.png, 8);
    png_read_info(c.png, c.info);

    const int bit_depth = png_get_bit_depth(c.png, c.info);
    const int color_type = png_get_color_type(c.png, c.info);
    if (color_type != PNG_COLOR_TYPE_GRAY)
        throw std::invalid_argument(path + ": only grayscale PNG is supported");
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument(path + ": unsupported bit depth " + std::to_string(bit_depth));
    if (bit_depth == 16) png_set_swap(c.png); // PNG stores big-endian samples
    png_read_update_info(c.png, c.info);

    const Index rows = static_cast<Index>(png_get_image_height(c.png, c.info));
    const Index cols = static_cast<Index>(png_get_image_width(c.png, c.info));
    Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> codes(rows, cols);

    if (bit_depth == 16) {
        for (Index r = 0; r < rows; ++r)
            png_read_row(c.png, reinterpret_cast<png_bytep>(codes.row(r).data()), nullptr);
    } else {
        std::vector<png_byte> row(static_cast<std::size_t>(cols));
        for (Index r = 0; r < rows; ++r) {
            png_read_row(c.png, row.data(), nullptr);
            for (Index m = 0; m < cols; ++m) codes(r, m) = row[static_cast<std::size_t>(m)];
        }
    }
    png_read_end(c.png, nullptr);
    return {std::move(codes), bit_depth};
}

inline void write_png_gray16(const std::string& path,
                             const Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic,
                                                 Eigen::RowMajor>& codes) {
    PngWriteCtx c;
    c.fp = std::fopen(path.c_str(), "wb");
    if (!c.fp) throw std::invalid_argument(path + ": cannot open file for writing");

    c.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    c.info = png_create_info_struct(c.png);
    if (!c.png || !c.info) throw std::runtime_error(path + ": libpng init failed");
    if (setjmp(png_jmpbuf(c.png))) throw std::runtime_error(path + ": PNG encode error");

    png_init_io(c.png, c.fp);
    png_set_IHDR(c.png, c.info, static_cast<png_uint_32>(codes.cols()),
                 static_cast<png_uint_32>(codes.rows()), 16, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(c.png, c.info);
    png_set_swap(c.png);
    for (Index r = 0; r < codes.rows(); ++r)
        png_write_row(c.png, reinterpret_cast<png_const_bytep>(codes.row(r).data()));
    png_write_end(c.png, nullptr);
}

} // namespace detail

/// Parse a csv matrix: '.' decimal, ',' separators, '\n' rows, no header.
inline Image2D load_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument(path + ": cannot open file");

    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() && in.peek() == std::char_traits<char>::eof()) break;
        std::vector<double> row;
        const char* p = line.data();
        const char* end = line.data() + line.size();
        const char* tok = p;
        for (; p <= end; ++p) {
            if (p == end || *p == ',') {
                row.push_back(detail::parse_double(tok, p, path));
                tok = p + 1;
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::invalid_argument(path + ": inconsistent csv row lengths");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty())
        throw std::invalid_argument(path + ": empty csv");

    Image2D img(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index n = 0; n < img.rows(); ++n)
        for (Index m = 0; m < img.cols(); ++m)
            img(n, m) = rows[static_cast<std::size_t>(n)][static_cast<std::size_t>(m)];
    if (!all_finite(img)) throw std::invalid_argument(path + ": csv contains non-finite values");
    return img;
}

inline void save_csv(const Image2D& img, const std::string& path) {
    std::string out;
    out.reserve(static_cast<std::size_t>(img.size()) * 20);
    for (Index n = 0; n < img.rows(); ++n) {
        for (Index m = 0; m < img.cols(); ++m) {
            if (m) out.push_back(',');
            detail::append_double(out, img(n, m));
        }
        out.push_back('\n');
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::invalid_argument(path + ": cannot open file for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error(path + ": write failed");
}

/// Load an image. PNG intensities map to [0, 1] as code / max-code; csv is
/// read verbatim. Row-major orientation is preserved.
inline Image2D load_image(const std::string& path, ImageFormat format) {
    if (format == ImageFormat::csv) return load_csv(path);
    auto [codes, depth] = detail::read_png_gray(path);
    if (format == ImageFormat::png8 && depth != 8)
        throw std::invalid_argument(path + ": expected 8-bit PNG, found " + std::to_string(depth));
    if (format == ImageFormat::png16 && depth != 16)
        throw std::invalid_argument(path + ": expected 16-bit PNG, found " + std::to_string(depth));
    const double max_code = depth == 8 ? 255.0 : 65535.0;
    return codes.cast<double>() / max_code;
}

/// Detect the format from content (PNG magic + bit depth) or fall back to csv.
inline Image2D load_image_auto(const std::string& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw std::invalid_argument(path + ": cannot open file");
    unsigned char magic[8] = {};
    probe.read(reinterpret_cast<char*>(magic), 8);
    static const unsigned char png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    probe.close();
    if (std::equal(std::begin(png_magic), std::end(png_magic), magic)) {
        auto [codes, depth] = detail::read_png_gray(path);
        return codes.cast<double>() / (depth == 8 ? 255.0 : 65535.0);
    }
    return load_csv(path);
}

/// Save an image. png16 rescales by (v - min) / (max - min) to the full code
/// range before quantization (a constant image maps to all-zero codes); csv is
/// written verbatim and round-trips exactly.
inline void save_image(const Image2D& img, const std::string& path, ImageFormat format) {
    require(img.size() > 0, "save_image: empty image");
    if (format == ImageFormat::csv) {
        save_csv(img, path);
        return;
    }
    require(format == ImageFormat::png16, "save_image: only png16 and csv are supported");
    const double lo = img.minCoeff();
    const double hi = img.maxCoeff();
    const double range = hi > lo ? hi - lo : 1.0;
    Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> codes(img.rows(),
                                                                                        img.cols());
    for (Index n = 0; n < img.rows(); ++n)
        for (Index m = 0; m < img.cols(); ++m)
            codes(n, m) = static_cast<std::uint16_t>(
                std::lround((img(n, m) - lo) / range * 65535.0));
    detail::write_png_gray16(path, codes);
}

/// Elementwise ln(max(x, floor)); the logarithm of an EL image corresponds to
/// the internal device voltage.
inline Image2D log_transform(const Image2D& img, double floor_value) {
    require(floor_value > 0.0, "log_transform: floor must be positive");
    return img.unaryExpr([floor_value](double v) { return std::log(std::max(v, floor_value)); });
}

} // namespace elssa
