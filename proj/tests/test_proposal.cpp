#include <algorithm>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "gazepet/error.hpp"
#include "gazepet/phantom.hpp"
#include "gazepet/proposal.hpp"
#include "oracles.hpp"

using namespace gazepet;

namespace {

// Tight box of truth label `label` on slice z, by scanning every pixel.
std::optional<Bbox> truth_box(const Phantom& ph, int label, int z) {
    int x0 = 1 << 30, y0 = 1 << 30, x1 = -1, y1 = -1;
    const auto& d = ph.truth.dims;
    for (int y = 0; y < d.ny; ++y)
        for (int x = 0; x < d.nx; ++x)
            if (ph.truth.at(x, y, z) == label) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return std::nullopt;
    return Bbox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

// Distance from p to the nearest pixel of box b, by visiting every pixel.
double exhaustive_distance(const Point2& p, const Bbox& b) {
    double best = std::numeric_limits<double>::infinity();
    for (int y = b.y; y < b.y_end(); ++y)
        for (int x = b.x; x < b.x_end(); ++x) best = std::min(best, std::hypot(x - p.x, y - p.y));
    return best;
}

PhantomSpec five_spheres() {
    PhantomSpec s;
    s.dims = Dims{128, 128, 24};
    s.spacing_mm = Spacing{2, 2, 2};
    s.background_suv = 1.0;
    s.spheres = {{{40, 40, 24}, 8, 6},
                 {{120, 50, 24}, 10, 8},
                 {{200, 60, 24}, 6, 5},
                 {{70, 170, 24}, 12, 9},
                 {{180, 180, 24}, 9, 7}};
    return s;
}

SelectionContext at(Point2 p) { return SelectionContext{p, 0, {}}; }

}  // namespace

TEST_CASE("propose returns the gazed sphere's tight box") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    const int z = 12;
    for (std::size_t i = 0; i < 5; ++i) {
        AnnotationEngine e;
        const auto c = sphere_center_voxel(spec, i);
        const auto& cand = e.propose(ph.pet, z, 3.0, Certainty::Certain, at({c[0], c[1]}));
        CHECK(cand.box == *truth_box(ph, static_cast<int>(i + 1), z));
        CHECK(e.state().mode == Mode::Confirmation);
    }
}

TEST_CASE("rejected sphere yields the next nearest") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    const int z = 12;
    for (std::size_t i = 0; i < 5; ++i) {
        AnnotationEngine e;
        const auto c = sphere_center_voxel(spec, i);
        const Point2 g{c[0] + 3, c[1] - 2};
        e.propose(ph.pet, z, 3.0, Certainty::Certain, at(g));
        REQUIRE(e.reject(ph.pet, RejectScope::CurrentSlice, z, g, 1).applied);
        const auto& next = e.propose(ph.pet, z, 3.0, Certainty::Certain, at(g));

        int best = -1;
        double best_d = 1e18;
        std::int64_t best_area = 0;
        for (int j = 0; j < 5; ++j) {
            if (j == static_cast<int>(i)) continue;
            const auto b = *truth_box(ph, j + 1, z);
            const double d = exhaustive_distance(g, b);
            if (d < best_d - 1e-12 || (std::abs(d - best_d) <= 1e-12 && b.area() < best_area)) {
                best = j;
                best_d = d;
                best_area = b.area();
            }
        }
        CHECK(next.box == *truth_box(ph, best + 1, z));
    }
}

TEST_CASE("nearest component ties go to the smaller box") {
    std::vector<Component> cs{{Bbox{0, 0, 10, 10}, 100, 1}, {Bbox{20, 0, 2, 2}, 4, 2}};
    CHECK(*nearest_component(cs, {15, 0}) == 1);
    CHECK(*nearest_component(cs, {5, 5}) == 0);
    CHECK_FALSE(nearest_component({}, {0, 0}).has_value());
}

TEST_CASE("exhaustion and clear rejections") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    AnnotationEngine e;
    const Point2 g{60, 60};
    for (int i = 0; i < 5; ++i) {
        e.propose(ph.pet, 12, 3.0, Certainty::Uncertain, at(g));
        e.reject(ph.pet, RejectScope::CurrentSlice, 12, g, i);
    }
    CHECK_THROWS_AS(e.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g)), NoCandidateError);
    CHECK(e.clear_rejections(12).applied);
    CHECK_FALSE(e.clear_rejections(12).applied);
    CHECK_NOTHROW(e.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g)));
    CHECK_THROWS_AS(e.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g)), StateError);
}

TEST_CASE("resize on a hard-edged sphere") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    AnnotationEngine e;
    const auto c = sphere_center_voxel(spec, 1);
    const auto first = e.propose(ph.pet, 12, 4.0, Certainty::Certain, at({c[0], c[1]}));
    const auto grown = e.resize(ph.pet, ResizeDirection::Grow);
    CHECK_FALSE(grown.at_limit);
    CHECK(grown.candidate.box == first.box);
    CHECK(grown.candidate.suv_threshold == doctest::Approx(3.6));

    ResizeResult r{};
    int steps = 0;
    do {
        r = e.resize(ph.pet, ResizeDirection::Shrink);
    } while (!r.at_limit && ++steps < 100);
    CHECK(r.at_limit);
    // The next step would pass the sphere's peak of 8.
    CHECK(r.candidate.suv_threshold <= 8.0);
    CHECK(r.candidate.suv_threshold / 0.9 > 8.0);
    CHECK(r.candidate.box == first.box);

    AnnotationEngine idle;
    CHECK_THROWS_AS(idle.resize(ph.pet, ResizeDirection::Grow), StateError);
}

TEST_CASE("propagation reproduces per-slice cross-sections") {
    PhantomSpec s;
    s.dims = Dims{64, 64, 20};
    s.spacing_mm = Spacing{2, 2, 2};
    s.spheres = {{{64, 60, 20}, 10, 7}};  // radius 5 slices, equator at z = 10
    const auto ph = generate_phantom(s);
    AnnotationEngine e;
    e.propose(ph.pet, 10, 3.0, Certainty::Certain, at({32, 30}));
    const auto& lesion = e.accept(ph.pet, 99);
    CHECK(e.state().mode == Mode::Browsing);

    // Oracle: flood fill of every thresholded slice, the blob holding the
    // sphere axis.
    std::map<int, Bbox> expect;
    for (int z = 0; z < 20; ++z) {
        const auto sl = ph.pet.slice(z);
        std::vector<std::uint8_t> m(sl.values.size());
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = sl.values[i] >= 3.0f;
        for (const auto& b : oracle::flood_fill(m, 64, 64)) {
            if (std::binary_search(b.pixels.begin(), b.pixels.end(), std::pair{30, 32})) {
                expect[z] = Bbox{b.x0, b.y0, b.x1 - b.x0 + 1, b.y1 - b.y0 + 1};
            }
        }
    }
    REQUIRE(expect.size() == 11);
    REQUIRE(lesion.slice_boxes.size() == expect.size());
    for (const auto& [z, b] : expect) {
        REQUIRE(lesion.slice_boxes.count(z) == 1);
        CHECK(lesion.slice_boxes.at(z).box == b);
        CHECK(lesion.slice_boxes.at(z).status ==
              (z == 10 ? BoxStatus::Validated : BoxStatus::Extrapolated));
        CHECK(lesion.slice_boxes.at(z).threshold == 3.0);
    }
    // Areas never grow moving away from the equator.
    for (int z = 10; z < 15; ++z) {
        CHECK(lesion.slice_boxes.at(z + 1).box.area() <= lesion.slice_boxes.at(z).box.area());
        CHECK(lesion.slice_boxes.at(20 - z - 1).box.area() <= lesion.slice_boxes.at(20 - z).box.area());
    }
    CHECK_NOTHROW(check_invariants(e.state()));
}

TEST_CASE("propagation boundaries") {
    PhantomSpec s;
    s.dims = Dims{32, 32, 12};
    s.spacing_mm = Spacing{1, 1, 1};
    // Two lesions on the same axis, a cold slice between them.
    s.spheres = {{{15, 15, 2}, 1.5, 5}, {{15, 15, 7}, 2, 5}};
    auto ph = generate_phantom(s);
    ph.pet.at(5, 5, 11) = 4.0f;
    AnnotationEngine e;
    e.propose(ph.pet, 7, 2.0, Certainty::Certain, at({15, 15}));
    const auto& l = e.accept(ph.pet, 1);
    CHECK(l.slice_boxes.begin()->first == 5);
    CHECK(l.slice_boxes.rbegin()->first == 9);

    // Single-slice lesion on the top slice.
    e.propose(ph.pet, 11, 2.0, Certainty::Certain, at({5, 5}));
    const auto& top = e.accept(ph.pet, 2);
    CHECK(top.slice_boxes.size() == 1);
    CHECK(top.root_slice == 11);
}

TEST_CASE("accept, reject-all, undo") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    const auto c = sphere_center_voxel(spec, 3);
    const Point2 g{c[0], c[1]};
    AnnotationEngine e;
    const auto before = e.state();
    e.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g));
    e.accept(ph.pet, 5);
    REQUIRE(e.state().accepted.size() == 1);
    CHECK(e.state().accepted[0].lesion_id == 1);
    CHECK(e.undo(12, g).applied);
    CHECK(e.state().accepted == before.accepted);
    CHECK(e.state().rejected_boxes == before.rejected_boxes);
    CHECK_FALSE(e.undo(12, g).applied);

    // Reject-all on an accepted lesion turns every slice box into a rejection.
    e.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g));
    const auto n = e.accept(ph.pet, 6).slice_boxes.size();
    CHECK_FALSE(e.reject(ph.pet, RejectScope::CurrentSlice, 12, g, 7).applied);
    CHECK(e.reject(ph.pet, RejectScope::AllAdjacent, 12, g, 7).applied);
    CHECK(e.state().accepted.empty());
    CHECK(e.state().rejected_boxes.size() == n);
    const auto rejected14 = std::find_if(e.state().rejected_boxes.begin(), e.state().rejected_boxes.end(),
                                         [](const RejectedBox& r) { return r.slice_number == 14; });
    REQUIRE(rejected14 != e.state().rejected_boxes.end());
    CHECK(e.propose(ph.pet, 14, 3.0, Certainty::Certain, at(g)).box != rejected14->box);

    // Reject-all on a pending candidate also covers its propagation.
    AnnotationEngine f;
    f.propose(ph.pet, 12, 3.0, Certainty::Certain, at(g));
    f.reject(ph.pet, RejectScope::AllAdjacent, 12, g, 8);
    CHECK(f.state().rejected_boxes.size() == n);
    CHECK(f.state().mode == Mode::Browsing);
    CHECK(f.state().next_lesion_id == 1);
}

TEST_CASE("accepted lesion filters later proposals") {
    const auto spec = five_spheres();
    const auto ph = generate_phantom(spec);
    const auto c = sphere_center_voxel(spec, 0);
    AnnotationEngine e;
    e.propose(ph.pet, 12, 3.0, Certainty::Certain, at({c[0], c[1]}));
    e.accept(ph.pet, 1);
    const auto& next = e.propose(ph.pet, 12, 3.0, Certainty::Certain, at({c[0], c[1]}));
    CHECK(next.box != *truth_box(ph, 1, 12));
    CHECK(e.accept(ph.pet, 2).lesion_id == 2);
}
