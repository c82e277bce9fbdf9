// Copyright Contributors to the mmrf project
// SPDX-License-Identifier: Apache-2.0
#include "mmrf/core/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>

namespace mmrf {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode)
{
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f)
        throw IoError("cannot open '" + path.string() + "'");
    return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp msg)
{
    auto* what = static_cast<std::string*>(png_get_error_ptr(png));
    *what = msg;
    png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// Writes rows of `bit_depth` samples. libpng's setjmp error model is confined here.
void write_rows(const std::filesystem::path& path, int width, int height, int color_type, int bit_depth,
                const std::vector<png_bytep>& rows)
{
    auto file = open_file(path, "wb");
    std::string err;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed for '" + path.string() + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("PNG encode failed for '" + path.string() + "': " + err);
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16)
        png_set_swap(png); // rows are host-order (little-endian) u16
    png_write_image(png, const_cast<png_bytepp>(rows.data()));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

struct Decoded {
    int width = 0;
    int height = 0;
    int channels = 0;
    int bit_depth = 0;
    std::vector<unsigned char> bytes;
};

Decoded read_any(const std::filesystem::path& path)
{
    auto file = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw IoError("'" + path.string() + "' is not a PNG file");
    std::string err;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_fail, png_warn);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed for '" + path.string() + "'");
    }
    Decoded d;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("PNG decode failed for '" + path.string() + "': " + err);
    }
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    d.width = static_cast<int>(png_get_image_width(png, info));
    d.height = static_cast<int>(png_get_image_height(png, info));
    d.bit_depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color == PNG_COLOR_TYPE_GRAY)
        d.channels = 1;
    else if (color == PNG_COLOR_TYPE_RGB)
        d.channels = 3;
    else {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("'" + path.string() + "' has an unsupported PNG color type");
    }
    if (d.bit_depth == 16)
        png_set_swap(png);
    png_read_update_info(png, info);
    const auto rowbytes = png_get_rowbytes(png, info);
    d.bytes.resize(rowbytes * d.height);
    rows.resize(d.height);
    for (int y = 0; y < d.height; ++y)
        rows[y] = d.bytes.data() + rowbytes * y;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return d;
}

} // namespace

void write_png(const std::filesystem::path& path, const Image8& img)
{
    if (img.channels != 1 && img.channels != 3)
        throw ContractError("write_png supports 1 or 3 channels");
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = const_cast<png_bytep>(img.data.data() + img.index(0, y));
    write_rows(path, img.width, img.height, img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, 8, rows);
}

void write_png16(const std::filesystem::path& path, const Image16& img)
{
    if (img.channels != 1)
        throw ContractError("write_png16 supports grayscale only");
    std::vector<png_bytep> rows(img.height);
    for (int y = 0; y < img.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(const_cast<std::uint16_t*>(img.data.data() + img.index(0, y)));
    write_rows(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 16, rows);
}

Image8 read_png(const std::filesystem::path& path)
{
    auto d = read_any(path);
    if (d.bit_depth != 8)
        throw IoError("'" + path.string() + "' is not an 8-bit PNG");
    Image8 img(d.width, d.height, d.channels);
    std::copy(d.bytes.begin(), d.bytes.end(), img.data.begin());
    return img;
}

Image16 read_png16(const std::filesystem::path& path)
{
    auto d = read_any(path);
    if (d.bit_depth != 16 || d.channels != 1)
        throw IoError("'" + path.string() + "' is not a 16-bit grayscale PNG");
    Image16 img(d.width, d.height, 1);
    std::memcpy(img.data.data(), d.bytes.data(), img.data.size() * sizeof(std::uint16_t));
    return img;
}

} // namespace mmrf
