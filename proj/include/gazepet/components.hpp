#pragma once

#include <cstdint>
#include <vector>

#include "gazepet/bbox.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

struct Component {
    Bbox box;
    int pixel_count = 0;
    int label = 0;  // 1-based index into ComponentLabeling::components
};

struct ComponentLabeling {
    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;  // 0 = background
    std::vector<Component> components; // ordered by (box.y, box.x), then scan order

    std::int32_t at(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

// 8-connected components of {value >= threshold}. Throws InvalidArgument for
// threshold <= 0.
ComponentLabeling label_components(const SliceView& slice, double threshold);

// Same labelling over an explicit binary mask (non-zero = foreground).
ComponentLabeling label_mask(const std::vector<std::uint8_t>& mask, int width, int height);

std::vector<Component> threshold_components(const SliceView& slice, double threshold);

// 26-connected components of the non-zero voxels of a label volume. Returns
// the component id per voxel (0 = background) and the component count.
struct Labeling3D {
    std::vector<std::int32_t> ids;
    int count = 0;
    std::vector<std::int64_t> sizes;  // index id - 1
};
Labeling3D connected_components_3d(const LabelVolume& mask);

}  // namespace gazepet
