#include "gazepet/display.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazepet/error.hpp"

namespace gazepet {

void DisplayWindow::validate() const {
    if (!(norm_min < norm_max)) throw InvalidArgument("display window needs norm_min < norm_max");
    if (ct_window_preset && (*ct_window_preset < 1 || *ct_window_preset > 9)) {
        throw InvalidArgument("CT window preset must be 1..9");
    }
}

const std::array<CtPreset, 9>& ct_presets() {
    static const std::array<CtPreset, 9> presets{{
        {1, "lung", -600.0, 1500.0},
        {2, "soft_tissue", 40.0, 400.0},
        {3, "bone", 300.0, 1500.0},
        {4, "brain", 40.0, 80.0},
        {5, "liver", 60.0, 150.0},
        {6, "mediastinum", 50.0, 350.0},
        {7, "abdomen", 40.0, 350.0},
        {8, "spine", 50.0, 250.0},
        {9, "wide", 0.0, 2000.0},
    }};
    return presets;
}

const CtPreset& ct_preset(int index) {
    if (index < 1 || index > 9) throw InvalidArgument("CT preset index must be 1..9");
    return ct_presets()[static_cast<std::size_t>(index - 1)];
}

std::uint8_t window_pixel(double value, const DisplayWindow& window) {
    double t = (value - window.norm_min) / (window.norm_max - window.norm_min);
    t = std::clamp(t, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(t * 255.0 + 0.5));
}

Image8 window_image(const std::vector<float>& values, int width, int height,
                    const DisplayWindow& window) {
    window.validate();
    Image8 img{width, height, 1, std::vector<std::uint8_t>(values.size())};
    std::transform(values.begin(), values.end(), img.pixels.begin(),
                   [&](float v) { return window_pixel(v, window); });
    return img;
}

Image8 axial_slice(const ScalarVolume& vol, int slice_number, const DisplayWindow& window) {
    window.validate();
    const SliceView s = vol.slice(slice_number);
    Image8 img{s.width, s.height, 1, std::vector<std::uint8_t>(s.values.size())};
    std::transform(s.values.begin(), s.values.end(), img.pixels.begin(),
                   [&](float v) { return window_pixel(v, window); });
    return img;
}

std::array<std::uint8_t, 3> hot_color(std::uint8_t level) {
    // Three linear ramps of ~85 levels each: red, then green, then blue.
    const int l = level;
    const auto ramp = [](int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); };
    return {ramp(l * 3), ramp((l - 85) * 3), ramp((l - 170) * 3)};
}

Image8 fused_slice(const ScalarVolume& ct, const ScalarVolume& pet, int slice_number,
                   const DisplayWindow& ct_window, const DisplayWindow& pet_window) {
    if (ct.dims().nx != pet.dims().nx || ct.dims().ny != pet.dims().ny) {
        throw InvalidArgument("fused view needs matching in-plane grids");
    }
    const Image8 under = axial_slice(ct, slice_number, ct_window);
    const SliceView p = pet.slice(slice_number);
    Image8 img{under.width, under.height, 3,
               std::vector<std::uint8_t>(under.pixels.size() * 3)};
    for (std::size_t i = 0; i < under.pixels.size(); ++i) {
        const std::uint8_t g = under.pixels[i];
        std::array<std::uint8_t, 3> rgb{g, g, g};
        const float v = p.values[i];
        if (v > pet_window.norm_min) {
            const auto c = hot_color(window_pixel(v, pet_window));
            for (int k = 0; k < 3; ++k) {
                rgb[k] = static_cast<std::uint8_t>((rgb[k] + c[k] + 1) / 2);
            }
        }
        std::copy(rgb.begin(), rgb.end(), img.pixels.begin() + static_cast<long>(i * 3));
    }
    return img;
}

}  // namespace gazepet
