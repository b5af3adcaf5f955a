#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "gazepet/volume.hpp"

namespace gazepet {

// Value range mapped to black..white on screen.
struct DisplayWindow {
    double norm_min = 0.0;
    double norm_max = 1.0;
    std::optional<int> ct_window_preset;  // 1..9

    void validate() const;
    friend bool operator==(const DisplayWindow&, const DisplayWindow&) = default;
};

struct CtPreset {
    int index;
    const char* name;
    double level;
    double width;

    DisplayWindow window() const {
        return DisplayWindow{level - width / 2, level + width / 2, index};
    }
};

// The nine CT presets bound to keys '1'..'9'.
const std::array<CtPreset, 9>& ct_presets();
const CtPreset& ct_preset(int index);

// 8-bit grayscale image, row-major.
struct Image8 {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<std::uint8_t> pixels;

    friend bool operator==(const Image8&, const Image8&) = default;
};

// clamp((v - min) / (max - min), 0, 1) * 255, rounded half-up.
std::uint8_t window_pixel(double value, const DisplayWindow& window);

Image8 axial_slice(const ScalarVolume& vol, int slice_number, const DisplayWindow& window);

// Window an arbitrary 2D float image (MIP projections, heatmaps).
Image8 window_image(const std::vector<float>& values, int width, int height,
                    const DisplayWindow& window);

// CT grayscale underlay blended with a hot-colormapped PET overlay at alpha
// 0.5 wherever PET exceeds its window minimum. RGB output.
Image8 fused_slice(const ScalarVolume& ct, const ScalarVolume& pet, int slice_number,
                   const DisplayWindow& ct_window, const DisplayWindow& pet_window);

// 256-entry "hot" colormap (black -> red -> yellow -> white).
std::array<std::uint8_t, 3> hot_color(std::uint8_t level);

}  // namespace gazepet
