#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace oculolipid::morpho {

// Binary raster, row-major, one byte per cell (0 = background, 1 = foreground).
class BitRaster {
public:
    BitRaster() = default;
    BitRaster(int width, int height) : width_(width), height_(height) {
        cells_.assign(static_cast<size_t>(width) * height, 0);
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool empty_dims() const { return width_ <= 0 || height_ <= 0; }

    bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

    uint8_t at(int x, int y) const { return cells_[static_cast<size_t>(y) * width_ + x]; }
    // Out-of-bounds reads are background; thinning and tracing lean on this.
    uint8_t at_safe(int x, int y) const { return in_bounds(x, y) ? at(x, y) : 0; }
    void set(int x, int y, uint8_t v) { cells_[static_cast<size_t>(y) * width_ + x] = v ? 1 : 0; }

    size_t count() const;
    BitRaster unioned(const BitRaster& other) const;

    const std::vector<uint8_t>& cells() const { return cells_; }
    std::vector<uint8_t>& cells() { return cells_; }

    bool operator==(const BitRaster& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<uint8_t> cells_;
};

enum class Eye { Left, Right };
enum class VesselClass { Artery, Vein, Combined };

const char* vessel_class_name(VesselClass c);
const char* eye_name(Eye e);

struct SegmentationMask {
    std::string participant_id;
    Eye eye = Eye::Left;
    BitRaster artery;
    BitRaster vein;

    bool valid_dims() const {
        return !artery.empty_dims() && artery.width() == vein.width() &&
               artery.height() == vein.height();
    }
    BitRaster class_raster(VesselClass c) const;
};

// 8-bit grayscale PNG; any nonzero sample is foreground. Color inputs are
// reduced to grayscale by libpng before thresholding.
BitRaster read_mask_png(const std::string& path);
void write_mask_png(const std::string& path, const BitRaster& raster);

// Raw 8-bit PNG values for the indexed single-file convention; the caller maps
// label values onto vessel classes.
std::vector<uint8_t> read_png_values(const std::string& path, int* width, int* height);

// Number of 8-connected foreground components.
int count_components(const BitRaster& raster);

} // namespace oculolipid::morpho
