#ifndef RADSPLICE_IMAGE_IO_HPP
#define RADSPLICE_IMAGE_IO_HPP

// PNG and binary PGM/PPM reading and writing, plus an in-memory baseline
// JPEG round trip used to simulate compression. Needs libpng and libjpeg.

#include <png.h>

#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "radsplice/error.hpp"
#include "radsplice/image.hpp"

namespace radsplice {

namespace detail {

inline std::uint8_t to_byte(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes to a sibling temporary and renames over the target.
inline void write_file_atomic(const std::string& path, const void* data, std::size_t size) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + tmp);
        out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
        if (!out) throw Error(ErrorCode::Io, "short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot rename " + tmp + " -> " + path + ": " + ec.message());
}

inline std::string lower_extension(const std::string& path) {
    std::string ext = std::filesystem::path(path).extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return ext;
}

inline GrayImage decode_pnm(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    std::size_t pos = 0;
    auto skip_ws_and_comments = [&] {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> int {
        skip_ws_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
            throw Error(ErrorCode::Io, "malformed PNM header in " + path);
        long v = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            v = v * 10 + (bytes[pos++] - '0');
            if (v > (1L << 24)) throw Error(ErrorCode::Io, "PNM header value too large in " + path);
        }
        return static_cast<int>(v);
    };
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw Error(ErrorCode::Io, "not a binary PGM/PPM file: " + path);
    const bool color = bytes[1] == '6';
    pos = 2;
    const int w = read_int();
    const int h = read_int();
    const int maxval = read_int();
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw Error(ErrorCode::Io, "invalid PNM header in " + path);
    ++pos;  // single whitespace before raster
    const int channels = color ? 3 : 1;
    const int bps = maxval > 255 ? 2 : 1;
    const std::size_t need = static_cast<std::size_t>(w) * h * channels * bps;
    if (bytes.size() < pos + need) throw Error(ErrorCode::Io, "truncated PNM raster in " + path);

    GrayImage img(w, h);
    const float inv = 1.0f / static_cast<float>(maxval);
    auto sample = [&](std::size_t i) -> float {
        if (bps == 1) return bytes[pos + i] * inv;
        return static_cast<float>((bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1]) * inv;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels;
            img.at(x, y) = color ? luminance(sample(i), sample(i + 1), sample(i + 2)) : sample(i);
        }
    return img;
}

struct PngReadState {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadState() { png_destroy_read_struct(&png, info ? &info : nullptr, nullptr); }
};

struct PngMemReader {
    const std::vector<std::uint8_t>* bytes;
    std::size_t pos;
};

inline GrayImage decode_png(const std::vector<std::uint8_t>& bytes, const std::string& path) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0)
        throw Error(ErrorCode::Io, "not a PNG file: " + path);
    PngReadState st;
    st.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!st.png) throw Error(ErrorCode::Io, "libpng init failed");
    st.info = png_create_info_struct(st.png);
    if (!st.info) throw Error(ErrorCode::Io, "libpng init failed");

    std::vector<std::uint8_t> raster;
    std::vector<png_bytep> rows;
    int w = 0, h = 0, channels = 0;
    if (setjmp(png_jmpbuf(st.png))) throw Error(ErrorCode::Io, "cannot decode PNG " + path);

    PngMemReader reader{&bytes, 0};
    png_set_read_fn(st.png, &reader, [](png_structp p, png_bytep out, png_size_t n) {
        auto* r = static_cast<PngMemReader*>(png_get_io_ptr(p));
        if (r->pos + n > r->bytes->size()) png_error(p, "truncated");
        std::copy_n(r->bytes->data() + r->pos, n, out);
        r->pos += n;
    });
    png_read_info(st.png, st.info);
    png_set_strip_16(st.png);
    png_set_strip_alpha(st.png);
    png_set_packing(st.png);
    const int color_type = png_get_color_type(st.png, st.info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(st.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(st.png, st.info) < 8)
        png_set_expand_gray_1_2_4_to_8(st.png);
    png_read_update_info(st.png, st.info);
    w = static_cast<int>(png_get_image_width(st.png, st.info));
    h = static_cast<int>(png_get_image_height(st.png, st.info));
    channels = png_get_channels(st.png, st.info);
    const std::size_t stride = png_get_rowbytes(st.png, st.info);
    raster.resize(stride * h);
    rows.resize(h);
    for (int y = 0; y < h; ++y) rows[y] = raster.data() + stride * y;
    png_read_image(st.png, rows.data());
    png_read_end(st.png, nullptr);

    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const std::uint8_t* px = rows[y] + static_cast<std::size_t>(x) * channels;
            img.at(x, y) = channels >= 3
                               ? luminance(px[0] / 255.0f, px[1] / 255.0f, px[2] / 255.0f)
                               : px[0] / 255.0f;
        }
    return img;
}

}  // namespace detail

/// Reads PNG or binary PGM/PPM (detected by signature); color is reduced
/// to luminance 0.299R + 0.587G + 0.114B.
inline GrayImage read_image(const std::string& path) {
    const auto bytes = detail::read_file_bytes(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return detail::decode_png(bytes, path);
    if (bytes.size() >= 2 && bytes[0] == 'P') return detail::decode_pnm(bytes, path);
    throw Error(ErrorCode::Io, "unsupported image format: " + path);
}

inline std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(ErrorCode::Io, "libpng init failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out;
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()));
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, info ? &info : nullptr);
        throw Error(ErrorCode::Io, "PNG encoding failed");
    }
    png_set_write_fn(
        png, &out,
        [](png_structp p, png_bytep data, png_size_t n) {
            auto* v = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(p));
            v->insert(v->end(), data, data + n);
        },
        nullptr);
    png_set_IHDR(png, info, img.width(), img.height(), 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) row[x] = detail::to_byte(img.at(x, y));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

inline std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    std::ostringstream header;
    header << "P5\n" << img.width() << " " << img.height() << "\n255\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> out(h.begin(), h.end());
    for (float v : img.pixels()) out.push_back(detail::to_byte(v));
    return out;
}

/// Writes PNG unless the extension is .pgm/.pnm.
inline void write_image(const std::string& path, const GrayImage& img) {
    const std::string ext = detail::lower_extension(path);
    const auto bytes = (ext == ".pgm" || ext == ".pnm") ? encode_pgm(img) : encode_png(img);
    detail::write_file_atomic(path, bytes.data(), bytes.size());
}

namespace detail {

struct JpegErrorJump {
    jpeg_error_mgr mgr;
    std::jmp_buf jump;
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorJump*>(cinfo->err);
    std::longjmp(err->jump, 1);
}

}  // namespace detail

/// Encodes as 8-bit grayscale baseline JPEG at the given quality (1-100) and
/// decodes it again.
inline GrayImage jpeg_roundtrip(const GrayImage& img, int quality) {
    if (quality < 1 || quality > 100) throw Error(ErrorCode::InvalidInput, "jpeg quality must be in 1..100");
    std::vector<std::uint8_t> row(static_cast<std::size_t>(img.width()));
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    {
        jpeg_compress_struct cinfo{};
        detail::JpegErrorJump err{};
        cinfo.err = jpeg_std_error(&err.mgr);
        err.mgr.error_exit = detail::jpeg_error_exit;
        if (setjmp(err.jump)) {
            jpeg_destroy_compress(&cinfo);
            std::free(buffer);
            throw Error(ErrorCode::Io, "JPEG encoding failed");
        }
        jpeg_create_compress(&cinfo);
        jpeg_mem_dest(&cinfo, &buffer, &size);
        cinfo.image_width = static_cast<JDIMENSION>(img.width());
        cinfo.image_height = static_cast<JDIMENSION>(img.height());
        cinfo.input_components = 1;
        cinfo.in_color_space = JCS_GRAYSCALE;
        jpeg_set_defaults(&cinfo);
        jpeg_set_quality(&cinfo, quality, TRUE);
        jpeg_start_compress(&cinfo, TRUE);
        while (cinfo.next_scanline < cinfo.image_height) {
            const int y = static_cast<int>(cinfo.next_scanline);
            for (int x = 0; x < img.width(); ++x) row[x] = detail::to_byte(img.at(x, y));
            JSAMPROW rp = row.data();
            jpeg_write_scanlines(&cinfo, &rp, 1);
        }
        jpeg_finish_compress(&cinfo);
        jpeg_destroy_compress(&cinfo);
    }
    std::unique_ptr<unsigned char, decltype(&std::free)> owned(buffer, &std::free);

    GrayImage out(img.width(), img.height());
    jpeg_decompress_struct dinfo{};
    detail::JpegErrorJump err{};
    dinfo.err = jpeg_std_error(&err.mgr);
    err.mgr.error_exit = detail::jpeg_error_exit;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&dinfo);
        throw Error(ErrorCode::Io, "JPEG decoding failed");
    }
    jpeg_create_decompress(&dinfo);
    jpeg_mem_src(&dinfo, owned.get(), size);
    jpeg_read_header(&dinfo, TRUE);
    dinfo.out_color_space = JCS_GRAYSCALE;
    jpeg_start_decompress(&dinfo);
    while (dinfo.output_scanline < dinfo.output_height) {
        const int y = static_cast<int>(dinfo.output_scanline);
        JSAMPROW rp = row.data();
        jpeg_read_scanlines(&dinfo, &rp, 1);
        for (int x = 0; x < img.width(); ++x) out.at(x, y) = row[x] / 255.0f;
    }
    jpeg_finish_decompress(&dinfo);
    jpeg_destroy_decompress(&dinfo);
    return out;
}

}  // namespace radsplice

#endif
