#include "gazepet/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "gazepet/error.hpp"

namespace gazepet {

std::array<double, 3> sphere_center_voxel(const PhantomSpec& spec, std::size_t sphere) {
    const auto& c = spec.spheres.at(sphere).center_mm;
    return {c[0] / spec.spacing_mm.sx, c[1] / spec.spacing_mm.sy, c[2] / spec.spacing_mm.sz};
}

Phantom generate_phantom(const PhantomSpec& spec) {
    const Dims& d = spec.dims;
    const Spacing& s = spec.spacing_mm;
    if (d.nx < 1 || d.ny < 1 || d.nz < 1) throw SpecError("phantom dims must be >= 1");
    if (!(s.sx > 0 && s.sy > 0 && s.sz > 0)) throw SpecError("phantom spacing must be > 0");
    if (spec.background_suv < 0) throw SpecError("background SUV must be >= 0");
    if (spec.noise_sigma < 0) throw SpecError("noise sigma must be >= 0");

    const std::array<double, 3> extent{(d.nx - 1) * s.sx, (d.ny - 1) * s.sy, (d.nz - 1) * s.sz};
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        const auto& sp = spec.spheres[i];
        if (!(sp.radius_mm > 0)) throw SpecError("sphere " + std::to_string(i) + ": radius <= 0");
        if (!(sp.peak_suv > spec.background_suv)) {
            throw SpecError("sphere " + std::to_string(i) + ": peak SUV must exceed background");
        }
        for (int a = 0; a < 3; ++a) {
            if (sp.center_mm[a] - sp.radius_mm < 0 || sp.center_mm[a] + sp.radius_mm > extent[a]) {
                throw SpecError("sphere " + std::to_string(i) + " extends outside the volume");
            }
        }
        for (std::size_t j = 0; j < i; ++j) {
            const auto& o = spec.spheres[j];
            double dist2 = 0;
            for (int a = 0; a < 3; ++a) {
                dist2 += (sp.center_mm[a] - o.center_mm[a]) * (sp.center_mm[a] - o.center_mm[a]);
            }
            const double reach = sp.radius_mm + o.radius_mm;
            if (dist2 < reach * reach) {
                throw SpecError("spheres " + std::to_string(j) + " and " + std::to_string(i) +
                                " overlap");
            }
        }
    }

    Phantom ph{ScalarVolume(d, s, ModalityKind::PET_SUV, static_cast<float>(spec.background_suv)),
               ScalarVolume(d, s, ModalityKind::CT, -1000.0f), LabelVolume(d, s)};

    // Body outline for the CT: an elliptic cylinder filling most of the slice.
    const double ex = 0.46 * d.nx, ey = 0.40 * d.ny;
    const double bx = (d.nx - 1) / 2.0, by = (d.ny - 1) / 2.0;
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const double u = (x - bx) / ex, v = (y - by) / ey;
                if (u * u + v * v <= 1.0) ph.ct.at(x, y, z) = 40.0f;
            }

    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        const auto& sp = spec.spheres[i];
        const double r2 = sp.radius_mm * sp.radius_mm;
        const int x0 = std::max(0, static_cast<int>(std::floor((sp.center_mm[0] - sp.radius_mm) / s.sx)));
        const int x1 = std::min(d.nx - 1, static_cast<int>(std::ceil((sp.center_mm[0] + sp.radius_mm) / s.sx)));
        const int y0 = std::max(0, static_cast<int>(std::floor((sp.center_mm[1] - sp.radius_mm) / s.sy)));
        const int y1 = std::min(d.ny - 1, static_cast<int>(std::ceil((sp.center_mm[1] + sp.radius_mm) / s.sy)));
        const int z0 = std::max(0, static_cast<int>(std::floor((sp.center_mm[2] - sp.radius_mm) / s.sz)));
        const int z1 = std::min(d.nz - 1, static_cast<int>(std::ceil((sp.center_mm[2] + sp.radius_mm) / s.sz)));
        for (int z = z0; z <= z1; ++z)
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const double dx = x * s.sx - sp.center_mm[0];
                    const double dy = y * s.sy - sp.center_mm[1];
                    const double dz = z * s.sz - sp.center_mm[2];
                    if (dx * dx + dy * dy + dz * dz <= r2) {
                        ph.pet.at(x, y, z) = static_cast<float>(sp.peak_suv);
                        ph.ct.at(x, y, z) = 60.0f;
                        ph.truth.at(x, y, z) = static_cast<std::int32_t>(i + 1);
                    }
                }
    }

    if (spec.noise_sigma > 0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.noise_sigma);
        for (float& v : ph.pet.data()) {
            v = static_cast<float>(std::max(0.0, v + noise(rng)));
        }
    }
    return ph;
}

void to_json(nlohmann::json& j, const PhantomSpec& spec) {
    nlohmann::json spheres = nlohmann::json::array();
    for (const auto& s : spec.spheres) {
        spheres.push_back({{"center_mm", s.center_mm}, {"radius_mm", s.radius_mm},
                           {"peak_suv", s.peak_suv}});
    }
    j = {{"spheres", spheres},
         {"background_suv", spec.background_suv},
         {"dims", {spec.dims.nx, spec.dims.ny, spec.dims.nz}},
         {"spacing_mm", {spec.spacing_mm.sx, spec.spacing_mm.sy, spec.spacing_mm.sz}},
         {"noise_sigma", spec.noise_sigma},
         {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, PhantomSpec& spec) {
    spec = PhantomSpec{};
    for (const auto& s : j.at("spheres")) {
        spec.spheres.push_back(PhantomSphere{s.at("center_mm").get<std::array<double, 3>>(),
                                             s.at("radius_mm").get<double>(),
                                             s.at("peak_suv").get<double>()});
    }
    spec.background_suv = j.at("background_suv").get<double>();
    const auto dims = j.at("dims").get<std::array<int, 3>>();
    spec.dims = Dims{dims[0], dims[1], dims[2]};
    const auto sp = j.at("spacing_mm").get<std::array<double, 3>>();
    spec.spacing_mm = Spacing{sp[0], sp[1], sp[2]};
    spec.noise_sigma = j.value("noise_sigma", 0.0);
    spec.seed = j.value("seed", std::uint64_t{0});
}

}  // namespace gazepet
