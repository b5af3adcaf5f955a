#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace gazepet {

enum class ModalityKind { CT, PET_SUV };

std::string_view to_string(ModalityKind kind);

struct Dims {
    int nx = 1, ny = 1, nz = 1;

    std::size_t voxels() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    std::size_t slice_pixels() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
    }
    friend bool operator==(const Dims&, const Dims&) = default;
};

struct Spacing {
    double sx = 1.0, sy = 1.0, sz = 1.0;
    friend bool operator==(const Spacing&, const Spacing&) = default;
};

// Read-only view of one axial slice, x fastest.
struct SliceView {
    std::span<const float> values;
    int width = 0;
    int height = 0;

    float at(int x, int y) const {
        return values[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                      static_cast<std::size_t>(x)];
    }
};

// Dense 3D voxel grid. Storage order is x fastest, then y, then z, so one
// axial slice is contiguous. The axial index increases foot to head.
class ScalarVolume {
public:
    ScalarVolume() = default;
    ScalarVolume(Dims dims, Spacing spacing, ModalityKind kind, float fill = 0.0f);
    ScalarVolume(Dims dims, Spacing spacing, ModalityKind kind, std::vector<float> data);

    const Dims& dims() const { return dims_; }
    const Spacing& spacing() const { return spacing_; }
    ModalityKind kind() const { return kind_; }

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims_.ny) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims_.nx) +
               static_cast<std::size_t>(x);
    }
    float at(int x, int y, int z) const { return data_[index(x, y, z)]; }
    float& at(int x, int y, int z) { return data_[index(x, y, z)]; }

    bool contains(int x, int y, int z) const {
        return x >= 0 && y >= 0 && z >= 0 && x < dims_.nx && y < dims_.ny && z < dims_.nz;
    }

    std::span<const float> data() const { return data_; }
    std::span<float> data() { return data_; }

    // Throws BoundsError for z outside [0, nz).
    SliceView slice(int z) const;

    float max_value() const;
    float min_value() const;

    // Checks the type invariants; throws SpecError on violation.
    void validate() const;

    friend bool operator==(const ScalarVolume&, const ScalarVolume&) = default;

private:
    Dims dims_;
    Spacing spacing_;
    ModalityKind kind_ = ModalityKind::PET_SUV;
    std::vector<float> data_;
};

// Integer label volume (0 = background) sharing the ScalarVolume grid layout.
struct LabelVolume {
    Dims dims;
    Spacing spacing;
    std::vector<std::int32_t> labels;

    LabelVolume() = default;
    LabelVolume(Dims d, Spacing s) : dims(d), spacing(s), labels(d.voxels(), 0) {}

    std::size_t index(int x, int y, int z) const {
        return (static_cast<std::size_t>(z) * static_cast<std::size_t>(dims.ny) +
                static_cast<std::size_t>(y)) *
                   static_cast<std::size_t>(dims.nx) +
               static_cast<std::size_t>(x);
    }
    std::int32_t at(int x, int y, int z) const { return labels[index(x, y, z)]; }
    std::int32_t& at(int x, int y, int z) { return labels[index(x, y, z)]; }
    std::size_t count_nonzero() const;

    ScalarVolume to_scalar(ModalityKind kind = ModalityKind::PET_SUV) const;
    static LabelVolume from_scalar(const ScalarVolume& v);

    friend bool operator==(const LabelVolume&, const LabelVolume&) = default;
};

// Bilinear in-plane resample with corner alignment; the axial axis is kept.
ScalarVolume resample_in_plane(const ScalarVolume& v, int new_nx, int new_ny);

}  // namespace gazepet
