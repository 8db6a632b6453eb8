#include "oculolipid/raster.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <numeric>

#include "oculolipid/errors.hpp"

namespace oculolipid::morpho {

size_t BitRaster::count() const {
    return static_cast<size_t>(std::accumulate(cells_.begin(), cells_.end(), size_t{0}));
}

BitRaster BitRaster::unioned(const BitRaster& other) const {
    BitRaster out(width_, height_);
    for (size_t i = 0; i < cells_.size(); ++i) out.cells()[i] = cells_[i] | other.cells()[i];
    return out;
}

const char* vessel_class_name(VesselClass c) {
    switch (c) {
        case VesselClass::Artery: return "artery";
        case VesselClass::Vein: return "vein";
        default: return "combined";
    }
}

const char* eye_name(Eye e) { return e == Eye::Left ? "L" : "R"; }

BitRaster SegmentationMask::class_raster(VesselClass c) const {
    switch (c) {
        case VesselClass::Artery: return artery;
        case VesselClass::Vein: return vein;
        default: return artery.unioned(vein);
    }
}

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

} // namespace

std::vector<uint8_t> read_png_values(const std::string& path, int* width, int* height) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp) throw Error(ErrorKind::Data, "cannot open PNG: " + path);

    png_byte sig[8];
    if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        throw Error(ErrorKind::Data, "not a PNG file: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(ErrorKind::Internal, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw Error(ErrorKind::Internal, "png_create_info_struct failed");
    }

    std::vector<uint8_t> values;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Data, "corrupt PNG: " + path);
    }

    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    // Normalize everything to 8-bit grayscale.
    png_byte color_type = png_get_color_type(png, info);
    png_byte bit_depth = png_get_bit_depth(png, info);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
        color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_rgb_to_gray(png, 1, -1.0, -1.0);
    png_read_update_info(png, info);

    int w = static_cast<int>(png_get_image_width(png, info));
    int h = static_cast<int>(png_get_image_height(png, info));
    size_t rowbytes = png_get_rowbytes(png, info);
    if (rowbytes < static_cast<size_t>(w)) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw Error(ErrorKind::Data, "unexpected PNG row size: " + path);
    }

    values.assign(static_cast<size_t>(w) * h, 0);
    std::vector<uint8_t> row(rowbytes);
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        std::memcpy(values.data() + static_cast<size_t>(y) * w, row.data(), static_cast<size_t>(w));
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    *width = w;
    *height = h;
    return values;
}

BitRaster read_mask_png(const std::string& path) {
    int w = 0, h = 0;
    std::vector<uint8_t> values = read_png_values(path, &w, &h);
    BitRaster raster(w, h);
    for (size_t i = 0; i < values.size(); ++i) raster.cells()[i] = values[i] ? 1 : 0;
    return raster;
}

void write_mask_png(const std::string& path, const BitRaster& raster) {
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp) throw Error(ErrorKind::Data, "cannot open PNG for writing: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw Error(ErrorKind::Internal, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw Error(ErrorKind::Internal, "png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw Error(ErrorKind::Internal, "PNG write failed: " + path);
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width()),
                 static_cast<png_uint_32>(raster.height()), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(raster.width()));
    for (int y = 0; y < raster.height(); ++y) {
        for (int x = 0; x < raster.width(); ++x) row[x] = raster.at(x, y) ? 255 : 0;
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

int count_components(const BitRaster& raster) {
    const int w = raster.width(), h = raster.height();
    std::vector<uint8_t> seen(static_cast<size_t>(w) * h, 0);
    std::vector<std::pair<int, int>> stack;
    int components = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (!raster.at(x, y) || seen[static_cast<size_t>(y) * w + x]) continue;
            ++components;
            stack.push_back({x, y});
            seen[static_cast<size_t>(y) * w + x] = 1;
            while (!stack.empty()) {
                auto [cx, cy] = stack.back();
                stack.pop_back();
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (!dx && !dy) continue;
                        int nx = cx + dx, ny = cy + dy;
                        if (!raster.in_bounds(nx, ny) || !raster.at(nx, ny)) continue;
                        size_t idx = static_cast<size_t>(ny) * w + nx;
                        if (seen[idx]) continue;
                        seen[idx] = 1;
                        stack.push_back({nx, ny});
                    }
            }
        }
    }
    return components;
}

} // namespace oculolipid::morpho
