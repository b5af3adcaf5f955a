#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "gazepet/phantom.hpp"
#include "gazepet/volume.hpp"

namespace testutil {

// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("gazepet_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline gazepet::ScalarVolume random_volume(gazepet::Dims d, std::uint64_t seed,
                                           gazepet::Spacing s = {}, float hi = 10.0f) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.0f, hi);
    gazepet::ScalarVolume v(d, s, gazepet::ModalityKind::PET_SUV);
    for (float& x : v.data()) x = u(rng);
    return v;
}

// Non-overlapping random spheres on a 512 x 512 grid (the canonical PET
// in-plane size the session code works in).
inline gazepet::PhantomSpec random_spec(std::uint64_t seed, int n_spheres, int nz = 24,
                                        double noise = 0.0) {
    std::mt19937_64 rng(seed);
    gazepet::PhantomSpec s;
    s.dims = gazepet::Dims{512, 512, nz};
    s.spacing_mm = gazepet::Spacing{2, 2, 3};
    s.background_suv = 1.0;
    s.noise_sigma = noise;
    s.seed = seed;
    std::uniform_real_distribution<double> r(6, 14), peak(4, 10);
    std::uniform_real_distribution<double> xy(60, 960), z(16, (nz - 1) * 3.0 - 16);
    for (int guard = 0; static_cast<int>(s.spheres.size()) < n_spheres && guard < 10000; ++guard) {
        gazepet::PhantomSphere sp{{xy(rng), xy(rng), z(rng)}, r(rng), peak(rng)};
        bool clear = true;
        for (const auto& o : s.spheres) {
            double d2 = 0;
            for (int a = 0; a < 3; ++a) d2 += (sp.center_mm[a] - o.center_mm[a]) * (sp.center_mm[a] - o.center_mm[a]);
            const double gap = sp.radius_mm + o.radius_mm + 12;
            clear = clear && d2 > gap * gap;
        }
        if (clear) s.spheres.push_back(sp);
    }
    return s;
}

}  // namespace testutil
