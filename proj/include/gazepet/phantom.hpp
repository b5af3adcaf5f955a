#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazepet/volume.hpp"

namespace gazepet {

struct PhantomSphere {
    std::array<double, 3> center_mm{};
    double radius_mm = 1.0;
    double peak_suv = 1.0;
};

struct PhantomSpec {
    std::vector<PhantomSphere> spheres;
    double background_suv = 1.0;
    Dims dims{512, 512, 32};
    Spacing spacing_mm{2.0, 2.0, 2.0};
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
};

struct Phantom {
    ScalarVolume pet;
    ScalarVolume ct;
    LabelVolume truth;  // sphere i -> label i + 1
};

// Voxel (i, j, k) has its centre at (i*sx, j*sy, k*sz) mm. PET is hard-edged:
// background everywhere, peak inside each sphere, then optional Gaussian noise
// (clamped at zero). Throws SpecError for out-of-bounds or overlapping spheres
// and for peaks not above background.
Phantom generate_phantom(const PhantomSpec& spec);

// Voxel-space centre of a sphere (mm / spacing).
std::array<double, 3> sphere_center_voxel(const PhantomSpec& spec, std::size_t sphere);

void to_json(nlohmann::json& j, const PhantomSpec& spec);
void from_json(const nlohmann::json& j, PhantomSpec& spec);

}  // namespace gazepet
