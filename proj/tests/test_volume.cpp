#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "gazepet/display.hpp"
#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"
#include "gazepet/mip.hpp"
#include "gazepet/nifti.hpp"
#include "gazepet/phantom.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace gazepet;
namespace fs = std::filesystem;

namespace {

oracle::Vol to_oracle(const ScalarVolume& v) {
    return {v.dims().nx, v.dims().ny, v.dims().nz, {v.data().begin(), v.data().end()}};
}

}  // namespace

TEST_CASE("nifti round trip 4x4x2") {
    const auto dir = testutil::temp_dir("nifti_rt");
    ScalarVolume v(Dims{4, 4, 2}, Spacing{1, 1, 1}, ModalityKind::CT);
    for (std::size_t i = 0; i < v.data().size(); ++i) v.data()[i] = static_cast<float>(i) - 7.25f;
    save_volume(v, dir / "a.nii");
    CHECK(load_volume(dir / "a.nii", ModalityKind::CT) == v);
}

TEST_CASE("nifti random 8x8x8 bitwise, spacing kept, gz equals plain") {
    const auto dir = testutil::temp_dir("nifti_rand");
    auto v = testutil::random_volume({8, 8, 8}, 3, Spacing{2.0, 2.0, 3.0});
    save_volume(v, dir / "a.nii");
    save_volume(v, dir / "a.nii.gz");
    const auto plain = load_volume_raw(dir / "a.nii", ModalityKind::PET_SUV);
    const auto gz = load_volume_raw(dir / "a.nii.gz", ModalityKind::PET_SUV);
    CHECK(plain == v);
    CHECK(gz == plain);
    CHECK(gz.spacing() == Spacing{2.0, 2.0, 3.0});
    CHECK(looks_gzipped(read_file(dir / "a.nii.gz")));
    CHECK_FALSE(looks_gzipped(read_file(dir / "a.nii")));
}

TEST_CASE("nifti errors") {
    const auto dir = testutil::temp_dir("nifti_err");
    CHECK_THROWS_AS(load_volume(dir / "missing.nii", ModalityKind::CT), IoError);

    auto v = testutil::random_volume({4, 4, 2}, 1);
    save_volume(v, dir / "a.nii");
    std::string bytes = read_file(dir / "a.nii");

    std::string bad_magic = bytes;
    bad_magic[344] = 'x';
    write_file_atomic(dir / "magic.nii", bad_magic);
    CHECK_THROWS_AS(load_volume(dir / "magic.nii", ModalityKind::CT), FormatError);

    write_file_atomic(dir / "trunc.nii", bytes.substr(0, bytes.size() - 10));
    CHECK_THROWS_AS(load_volume(dir / "trunc.nii", ModalityKind::CT), FormatError);

    std::string bad_type = bytes;
    bad_type[70] = 2;  // uint8
    bad_type[71] = 0;
    write_file_atomic(dir / "type.nii", bad_type);
    CHECK_THROWS_AS(load_volume(dir / "type.nii", ModalityKind::CT), UnsupportedError);
}

TEST_CASE("nifti int16 payload") {
    const auto dir = testutil::temp_dir("nifti_i16");
    ScalarVolume v(Dims{3, 2, 2}, Spacing{}, ModalityKind::CT);
    for (std::size_t i = 0; i < v.data().size(); ++i) v.data()[i] = -1000.0f + 100.0f * i;
    save_volume(v, dir / "a.nii.gz", NiftiWriteOptions{NiftiDatatype::Int16, std::nullopt});
    CHECK(load_volume(dir / "a.nii.gz", ModalityKind::CT) == v);
}

TEST_CASE("nifti orientation is canonicalised on load") {
    const auto dir = testutil::temp_dir("nifti_orient");
    auto v = testutil::random_volume({5, 4, 3}, 9, Spacing{2, 2, 3});
    // x toward the right and z toward the feet: both axes come back reversed.
    NiftiWriteOptions o;
    o.srow = std::array<std::array<double, 4>, 3>{
        {{2, 0, 0, 0}, {0, -2, 0, 0}, {0, 0, -3, 0}}};
    save_volume(v, dir / "flip.nii", o);
    const auto back = load_volume_raw(dir / "flip.nii", ModalityKind::PET_SUV);
    REQUIRE(back.dims() == v.dims());
    bool ok = true;
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 5; ++x) ok = ok && back.at(x, y, z) == v.at(4 - x, y, 2 - z);
    CHECK(ok);

    // Axis swap: storage x is patient A-P.
    o.srow = std::array<std::array<double, 4>, 3>{
        {{0, -2, 0, 0}, {-2, 0, 0, 0}, {0, 0, 3, 0}}};
    save_volume(v, dir / "swap.nii", o);
    const auto sw = load_volume_raw(dir / "swap.nii", ModalityKind::PET_SUV);
    REQUIRE(sw.dims() == Dims{4, 5, 3});
    ok = true;
    for (int z = 0; z < 3; ++z)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 4; ++x) ok = ok && sw.at(x, y, z) == v.at(y, x, z);
    CHECK(ok);
}

TEST_CASE("PET upsampling matches bilinear oracle") {
    const auto dir = testutil::temp_dir("nifti_up");
    auto v = testutil::random_volume({256, 256, 2}, 5, Spacing{4, 4, 3});
    save_volume(v, dir / "pet.nii.gz");
    const auto up = load_volume(dir / "pet.nii.gz", ModalityKind::PET_SUV);
    REQUIRE(up.dims() == Dims{512, 512, 2});
    for (int z = 0; z < 2; ++z) {
        CHECK(up.at(0, 0, z) == v.at(0, 0, z));
        CHECK(up.at(511, 0, z) == v.at(255, 0, z));
        CHECK(up.at(0, 511, z) == v.at(0, 255, z));
        CHECK(up.at(511, 511, z) == v.at(255, 255, z));
    }
    const auto sl = v.slice(1);
    std::vector<float> g(sl.values.begin(), sl.values.end());
    std::mt19937 rng(2);
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
        const int x = static_cast<int>(rng() % 512), y = static_cast<int>(rng() % 512);
        const double ref = oracle::bilinear(g, 256, 256, x * 255.0 / 511.0, y * 255.0 / 511.0);
        worst = std::max(worst, std::abs(ref - up.at(x, y, 1)));
    }
    CHECK(worst < 1e-5);
    // CT is never resampled.
    CHECK(load_volume(dir / "pet.nii.gz", ModalityKind::CT).dims() == Dims{256, 256, 2});
}

TEST_CASE("display window mapping") {
    const DisplayWindow w{0.0, 6.0, std::nullopt};
    CHECK(window_pixel(0.0, w) == 0);
    CHECK(window_pixel(-3.0, w) == 0);
    CHECK(window_pixel(6.0, w) == 255);
    CHECK(window_pixel(60.0, w) == 255);
    CHECK(window_pixel(3.0, w) == 128);  // 127.5 rounds up

    ScalarVolume flat(Dims{4, 4, 1}, Spacing{}, ModalityKind::PET_SUV, 2.0f);
    const auto lo = axial_slice(flat, 0, DisplayWindow{2.0, 5.0, std::nullopt});
    CHECK(std::all_of(lo.pixels.begin(), lo.pixels.end(), [](auto p) { return p == 0; }));
    const auto hi = axial_slice(flat, 0, DisplayWindow{-1.0, 2.0, std::nullopt});
    CHECK(std::all_of(hi.pixels.begin(), hi.pixels.end(), [](auto p) { return p == 255; }));
    CHECK_THROWS_AS(axial_slice(flat, 1, w), BoundsError);
    CHECK_THROWS(DisplayWindow{3.0, 3.0, std::nullopt}.validate());

    std::mt19937 rng(4);
    std::uniform_real_distribution<double> u(-10, 20);
    bool mono = true;
    for (int i = 0; i < 5000; ++i) {
        double a = u(rng), b = u(rng);
        if (a > b) std::swap(a, b);
        mono = mono && window_pixel(a, w) <= window_pixel(b, w);
    }
    CHECK(mono);
}

TEST_CASE("CT presets and hot colormap") {
    CHECK(ct_presets().size() == 9);
    for (int i = 1; i <= 9; ++i) {
        const auto win = ct_preset(i).window();
        CHECK(win.norm_max > win.norm_min);
        CHECK(win.ct_window_preset == i);
    }
    CHECK(hot_color(0) == std::array<std::uint8_t, 3>{0, 0, 0});
    CHECK(hot_color(255) == std::array<std::uint8_t, 3>{255, 255, 255});
}

TEST_CASE("MIP single voxel on the rotation axis keeps its value") {
    ScalarVolume v(Dims{15, 15, 5}, Spacing{}, ModalityKind::PET_SUV);
    v.at(7, 7, 2) = 7.3f;
    const auto stack = mip_stack(v);
    REQUIRE(stack.projections.size() == 12);
    for (const auto& p : stack.projections) CHECK(p.max_value() == 7.3f);
}

TEST_CASE("MIP right angles equal axis permutations") {
    for (int n : {16, 15}) {
        const auto v = testutil::random_volume({n, n, 4}, 11 + n);
        const auto ov = to_oracle(v);
        for (int q = 0; q < 4; ++q) {
            const auto p = project_rotated(v, 90.0 * q);
            const auto ref = oracle::mip_quarter(ov, q);
            REQUIRE(p.values.size() == ref.size());
            double worst = 0;
            for (std::size_t i = 0; i < ref.size(); ++i) {
                worst = std::max(worst, std::abs(static_cast<double>(p.values[i]) - ref[i]));
            }
            CHECK(worst <= 1e-6);
        }
    }
}

TEST_CASE("MIP global max conservation and aspect") {
    for (const Spacing s : {Spacing{2, 2, 2}, Spacing{2, 2, 3}, Spacing{4, 4, 1}}) {
        const auto v = testutil::random_volume({12, 12, 6}, 21, s);
        const auto stack = mip_stack(v);
        float m = 0;
        for (const auto& p : stack.projections) m = std::max(m, p.max_value());
        CHECK(m == v.max_value());
        const int rows = static_cast<int>(std::lround(6 * s.sz / s.sx));
        CHECK(stack.projections[0].height == rows);
    }
    ScalarVolume ct(Dims{4, 4, 2}, Spacing{}, ModalityKind::CT);
    CHECK_THROWS_AS(mip_stack(ct), InvalidArgument);
}

TEST_CASE("MIP stack to volume") {
    const auto v = testutil::random_volume({8, 8, 3}, 2);
    const auto vol = mip_stack_to_volume(mip_stack(v), v.spacing());
    CHECK(vol.dims() == Dims{8, 3, 12});
    CHECK(vol.max_value() == v.max_value());
}

TEST_CASE("phantom voxel counts match brute force") {
    PhantomSpec spec;
    spec.dims = Dims{64, 64, 20};
    spec.spacing_mm = Spacing{2, 2, 3};
    spec.spheres = {{{40, 40, 30}, 9, 8.0}, {{90, 70, 24}, 6.5, 5.0}};
    const auto ph = generate_phantom(spec);
    for (std::size_t i = 0; i < spec.spheres.size(); ++i) {
        const auto& sp = spec.spheres[i];
        std::int64_t expect = 0;
        for (int z = 0; z < 20; ++z)
            for (int y = 0; y < 64; ++y)
                for (int x = 0; x < 64; ++x) {
                    const double dx = 2.0 * x - sp.center_mm[0], dy = 2.0 * y - sp.center_mm[1],
                                 dz = 3.0 * z - sp.center_mm[2];
                    if (dx * dx + dy * dy + dz * dz <= sp.radius_mm * sp.radius_mm) ++expect;
                }
        const auto got = std::count(ph.truth.labels.begin(), ph.truth.labels.end(),
                                    static_cast<std::int32_t>(i + 1));
        CHECK(got == expect);
        CHECK(got > 0);
    }
    CHECK(ph.pet.max_value() == 8.0f);
    CHECK(ph.pet.min_value() == 1.0f);
}

TEST_CASE("phantom edge cases") {
    PhantomSpec spec;
    spec.dims = Dims{16, 16, 4};
    CHECK(generate_phantom(spec).truth.count_nonzero() == 0);

    spec.spheres = {{{10, 10, 3}, 3, 5}, {{14, 10, 3}, 3, 5}};
    CHECK_THROWS_AS(generate_phantom(spec), SpecError);
    spec.spheres = {{{1, 10, 3}, 3, 5}};
    CHECK_THROWS_AS(generate_phantom(spec), SpecError);
    spec.spheres = {{{10, 10, 3}, 2, 0.5}};
    CHECK_THROWS_AS(generate_phantom(spec), SpecError);

    spec.spheres = {{{10, 10, 3}, 2, 5}};
    spec.noise_sigma = 0.4;
    spec.seed = 77;
    const auto a = generate_phantom(spec), b = generate_phantom(spec);
    CHECK(a.pet == b.pet);
    spec.seed = 78;
    CHECK_FALSE(generate_phantom(spec).pet == a.pet);

    nlohmann::json j = spec;
    CHECK(j.get<PhantomSpec>().spheres.size() == 1);
}
