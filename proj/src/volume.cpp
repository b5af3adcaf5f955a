#include "gazepet/volume.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gazepet/error.hpp"

namespace gazepet {

std::string_view to_string(ModalityKind kind) {
    return kind == ModalityKind::CT ? "CT" : "PET_SUV";
}

ScalarVolume::ScalarVolume(Dims dims, Spacing spacing, ModalityKind kind, float fill)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(dims.voxels(), fill) {
    validate();
}

ScalarVolume::ScalarVolume(Dims dims, Spacing spacing, ModalityKind kind,
                           std::vector<float> data)
    : dims_(dims), spacing_(spacing), kind_(kind), data_(std::move(data)) {
    validate();
}

SliceView ScalarVolume::slice(int z) const {
    if (z < 0 || z >= dims_.nz) {
        throw BoundsError("slice " + std::to_string(z) + " outside [0, " +
                          std::to_string(dims_.nz) + ")");
    }
    const std::size_t n = dims_.slice_pixels();
    return SliceView{std::span<const float>(data_).subspan(static_cast<std::size_t>(z) * n, n),
                     dims_.nx, dims_.ny};
}

float ScalarVolume::max_value() const {
    return data_.empty() ? 0.0f : *std::max_element(data_.begin(), data_.end());
}

float ScalarVolume::min_value() const {
    return data_.empty() ? 0.0f : *std::min_element(data_.begin(), data_.end());
}

void ScalarVolume::validate() const {
    if (dims_.nx < 1 || dims_.ny < 1 || dims_.nz < 1) {
        throw SpecError("volume dims must be >= 1");
    }
    if (!(spacing_.sx > 0.0) || !(spacing_.sy > 0.0) || !(spacing_.sz > 0.0)) {
        throw SpecError("volume spacing must be > 0");
    }
    if (data_.size() != dims_.voxels()) {
        throw SpecError("volume payload size does not match dims");
    }
    if (kind_ == ModalityKind::PET_SUV) {
        for (float v : data_) {
            if (!(v >= 0.0f)) throw SpecError("PET SUV values must be >= 0");
        }
    }
}

std::size_t LabelVolume::count_nonzero() const {
    return static_cast<std::size_t>(
        std::count_if(labels.begin(), labels.end(), [](std::int32_t l) { return l != 0; }));
}

ScalarVolume LabelVolume::to_scalar(ModalityKind kind) const {
    std::vector<float> data(labels.size());
    std::transform(labels.begin(), labels.end(), data.begin(),
                   [](std::int32_t l) { return static_cast<float>(l); });
    return ScalarVolume(dims, spacing, kind, std::move(data));
}

LabelVolume LabelVolume::from_scalar(const ScalarVolume& v) {
    LabelVolume out(v.dims(), v.spacing());
    auto src = v.data();
    for (std::size_t i = 0; i < src.size(); ++i) {
        out.labels[i] = static_cast<std::int32_t>(std::lround(src[i]));
    }
    return out;
}

ScalarVolume resample_in_plane(const ScalarVolume& v, int new_nx, int new_ny) {
    const Dims& d = v.dims();
    if (new_nx < 1 || new_ny < 1) throw InvalidArgument("resample target must be >= 1");
    if (d.nx == new_nx && d.ny == new_ny) return v;

    Dims nd{new_nx, new_ny, d.nz};
    Spacing ns{v.spacing().sx * d.nx / new_nx, v.spacing().sy * d.ny / new_ny, v.spacing().sz};
    std::vector<float> out(nd.voxels());

    auto src_coord = [](int i, int n_new, int n_old) {
        if (n_new == 1) return 0.0;
        return static_cast<double>(i) * (n_old - 1) / (n_new - 1);
    };

    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < new_ny; ++y) {
            const double fy = src_coord(y, new_ny, d.ny);
            const int y0 = std::min(static_cast<int>(fy), d.ny - 1);
            const int y1 = std::min(y0 + 1, d.ny - 1);
            const double wy = fy - y0;
            for (int x = 0; x < new_nx; ++x) {
                const double fx = src_coord(x, new_nx, d.nx);
                const int x0 = std::min(static_cast<int>(fx), d.nx - 1);
                const int x1 = std::min(x0 + 1, d.nx - 1);
                const double wx = fx - x0;
                const double a = v.at(x0, y0, z), b = v.at(x1, y0, z);
                const double c = v.at(x0, y1, z), e = v.at(x1, y1, z);
                double val = (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * c + wx * e);
                // Keep the interpolant inside the neighbour range so rounding
                // never manufactures a new extreme.
                const double lo = std::min({a, b, c, e}), hi = std::max({a, b, c, e});
                val = std::clamp(val, lo, hi);
                out[(static_cast<std::size_t>(z) * new_ny + y) * new_nx + x] =
                    static_cast<float>(val);
            }
        }
    }
    return ScalarVolume(nd, ns, v.kind(), std::move(out));
}

}  // namespace gazepet
