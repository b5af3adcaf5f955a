#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "gazepet/agreement.hpp"
#include "gazepet/calibration.hpp"
#include "gazepet/error.hpp"
#include "gazepet/geometry.hpp"
#include "gazepet/icc.hpp"
#include "gazepet/seg_metrics.hpp"
#include "gazepet/session.hpp"
#include "oracles.hpp"

using namespace gazepet;

namespace {

// Monitor pixel that lands dx_mm right of the screen centre.
Point2 px_at_mm(const ViewingGeometry& g, double dx_mm, double dy_mm = 0) {
    return {g.monitor_width_px / 2.0 + dx_mm * g.monitor_width_px / g.screen_width_mm,
            g.monitor_height_px / 2.0 - dy_mm * g.monitor_height_px / g.screen_height_mm};
}

Box3D random_box(std::mt19937_64& rng) {
    Box3D b;
    b.x = static_cast<int>(rng() % 40);
    b.y = static_cast<int>(rng() % 40);
    b.w = 1 + static_cast<int>(rng() % 12);
    b.h = 1 + static_cast<int>(rng() % 12);
    b.z_min = static_cast<int>(rng() % 10);
    b.z_max = b.z_min + static_cast<int>(rng() % 5);
    return b;
}

LesionAnnotation lesion_with(int id, std::map<int, Bbox> boxes) {
    LesionAnnotation l;
    l.lesion_id = id;
    l.root_slice = boxes.begin()->first;
    for (const auto& [z, b] : boxes) l.slice_boxes[z] = SliceBox{b, BoxStatus::Validated, 2.0};
    return l;
}

GazeSample gaze_at(const Point2& monitor_px, const DisplaySample& d, std::int64_t ts,
                   const Vec3& origin) {
    GazeSample g;
    g.system_time_stamp = g.device_time_stamp = ts;
    for (EyeSample* e : {&g.left, &g.right}) {
        e->gaze_point_on_display_area = {monitor_px.x / d.monitor_width,
                                         monitor_px.y / d.monitor_height};
        e->gaze_point_validity = 1;
        e->pupil_validity = 1;
        e->pupil_diameter = 3;
        e->gaze_origin_in_user_coordinate_system = origin;
    }
    return g;
}

DisplaySample centred_display() {
    DisplaySample d;
    d.window_x = 580;
    d.window_y = 20;
    d.window_width = d.window_height = 1400;
    return d;
}

// One accepted lesion and `points` gaze ticks at 60 Hz ending at the key.
SessionRecording recording_with(const std::vector<Point2>& points, const Vec3& origin,
                                const Bbox& root) {
    SessionRecording r;
    const auto d = centred_display();
    const std::int64_t t_key = 10'000'000;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto ts = t_key - static_cast<std::int64_t>((points.size() - 1 - i) * 16667);
        r.tobii_cam.push_back(gaze_at(points[i], d, ts, origin));
        r.common_cam.push_back(d);
        r.pauses.push_back(false);
    }
    auto l = lesion_with(1, {{5, root}});
    l.selection.time_stamp = t_key;
    l.selection.display = d;
    r.lesions.push_back(l);
    return r;
}

}  // namespace

TEST_CASE("angle between screen points") {
    const ViewingGeometry g;
    const Vec3 o{0, 0, 600};
    const auto p1 = px_at_mm(g, 0), p2 = px_at_mm(g, 10.47);
    CHECK(angle_between(o, p1, p2, g) ==
          doctest::Approx(std::atan(10.47 / 600) * 180 / std::numbers::pi).epsilon(1e-12));
    CHECK(angle_between(o, p1, p2, g) == doctest::Approx(0.9997).epsilon(1e-4));
    CHECK(angle_between(o, p1, p1, g) == 0.0);
    CHECK(angle_between(o, p1, p2, g) == angle_between(o, p2, p1, g));
    CHECK_THROWS_AS(angle_between(Vec3{0, 0, 0}, px_at_mm(g, 0), p2, g), DegenerateGeometryError);
}

TEST_CASE("angle matches an independent oracle on random geometries") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> ox(-200, 200), oz(400, 900);
    std::uniform_real_distribution<double> px(0, 2560), py(0, 1440);
    const ViewingGeometry g;
    double worst = 0;
    for (int i = 0; i < 100; ++i) {
        const Vec3 o{ox(rng), ox(rng), oz(rng)};
        const Point2 a{px(rng), py(rng)}, b{px(rng), py(rng)};
        const double ref = oracle::ray_angle_deg(o, g.screen_point_mm(a), g.screen_point_mm(b));
        worst = std::max(worst, std::abs(angle_between(o, a, b, g) - ref));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("ICC matches the ANOVA oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> target(50, 20), noise(0, 5);
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 3 + rng() % 30, k = 2 + rng() % 4;
        std::vector<std::vector<double>> m(n, std::vector<double>(k));
        for (auto& row : m) {
            const double base = target(rng);
            for (auto& v : row) v = base + noise(rng);
        }
        const auto got = icc_average_fixed_raters(m);
        const auto ref = oracle::icc3k(m);
        worst = std::max(worst, std::abs(got.icc - ref.icc));
        CHECK(got.ci_low <= got.icc);
        CHECK(got.icc <= got.ci_high);
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("ICC worked matrices") {
    // Six targets, three raters.
    const std::vector<std::vector<double>> m{{1, 2, 3}, {4, 4, 5}, {7, 9, 8},
                                             {2, 1, 2}, {10, 9, 11}, {5, 6, 4}};
    const auto r = icc_average_fixed_raters(m);
    const auto ref = oracle::icc3k(m);
    CHECK(r.ms_rows == doctest::Approx(ref.msr).epsilon(1e-12));
    CHECK(r.ms_error == doctest::Approx(ref.mse).epsilon(1e-12));
    CHECK(r.icc == doctest::Approx(ref.icc).epsilon(1e-12));

    // Classic six targets x four judges reliability table.
    const std::vector<std::vector<double>> sf{{9, 2, 5, 8}, {6, 1, 3, 2}, {8, 4, 6, 8},
                                              {7, 1, 2, 6}, {10, 5, 6, 9}, {6, 2, 4, 7}};
    const auto s = icc_average_fixed_raters(sf);
    CHECK(s.icc == doctest::Approx(0.909).epsilon(5e-4));
    CHECK(s.ms_rows / s.ms_error == doctest::Approx(11.027).epsilon(1e-3));
    CHECK(s.ci_low == doctest::Approx(0.68).epsilon(0.01));
    CHECK(s.ci_high == doctest::Approx(0.98).epsilon(0.01));
}

TEST_CASE("ICC edge cases") {
    const std::vector<std::vector<double>> same{{1, 1}, {5, 5}, {3, 3}, {9, 9}};
    const auto r = icc_average_fixed_raters(same);
    CHECK(r.icc == 1.0);
    CHECK(r.ci_low == 1.0);

    // Consistency form: a constant per rater cancels out.
    std::vector<std::vector<double>> m{{1, 2, 3}, {4, 4, 5}, {7, 9, 8}, {2, 1, 2}};
    const double base = icc_average_fixed_raters(m).icc;
    for (auto& row : m) {
        row[1] += 37.5;
        row[2] -= 4.25;
    }
    CHECK(icc_average_fixed_raters(m).icc == doctest::Approx(base).epsilon(1e-12));

    CHECK_THROWS_AS(icc_average_fixed_raters({{1, 2}}), InvalidArgument);
    CHECK_THROWS_AS(icc_average_fixed_raters({{1}, {2}}), InvalidArgument);
    CHECK_THROWS_AS(icc_average_fixed_raters({{1, 2}, {3}}), InvalidArgument);
    CHECK_THROWS_AS(icc_average_fixed_raters({{1, NAN}, {3, 4}}), InvalidArgument);
    CHECK_THROWS_AS(icc_average_fixed_raters({{2, 1}, {1, 2}}), UndefinedIccError);
}

TEST_CASE("per-target offsets only move the target term") {
    std::vector<std::vector<double>> m{{1, 2, 3}, {4, 4, 5}, {7, 9, 8}, {2, 1, 2}};
    const auto a = icc_average_fixed_raters(m);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (auto& v : m[i]) v += 3.0 * static_cast<double>(i);
    const auto b = icc_average_fixed_raters(m);
    CHECK(b.ms_error == doctest::Approx(a.ms_error).epsilon(1e-12));
    CHECK(b.ms_rows != doctest::Approx(a.ms_rows));
}

TEST_CASE("agreement examples") {
    const std::vector<Box3D> b{{0, 0, 10, 10, 0, 2}, {30, 30, 5, 5, 1, 1}};
    auto same = match_and_agree(b, b);
    CHECK(same.precision == 1.0);
    CHECK(same.recall == 1.0);
    CHECK(same.pct_agreement == 1.0);

    auto a = b;
    a.push_back({60, 60, 4, 4, 0, 0});
    const auto extra = match_and_agree(a, b);
    CHECK(extra.precision == doctest::Approx(2.0 / 3));
    CHECK(extra.recall == 1.0);
    CHECK(extra.pct_agreement == doctest::Approx(2.0 / 3));
    CHECK(extra.unmatched_a == std::vector<std::size_t>{2});

    const std::vector<Box3D> far{{100, 100, 3, 3, 0, 0}};
    const auto none = match_and_agree(far, b);
    CHECK(none.precision == 0.0);
    CHECK(none.recall == 0.0);
    CHECK(none.pct_agreement == 0.0);

    const auto empty = match_and_agree({}, {});
    CHECK(empty.precision == 1.0);
    CHECK(empty.recall == 1.0);
    CHECK(empty.pct_agreement == 1.0);
    CHECK(match_and_agree({}, b).recall == 0.0);
}

TEST_CASE("agreement bound and greedy audit on random sets") {
    std::mt19937_64 rng(17);
    int bound_ok = 0, card_ok = 0;
    for (int t = 0; t < 1000; ++t) {
        std::vector<Box3D> a(rng() % 8), b(rng() % 8);
        for (auto& x : a) x = random_box(rng);
        for (auto& x : b) x = random_box(rng);
        const auto g = match_and_agree(a, b);
        if (g.pct_agreement <= std::min(g.precision, g.recall) + 1e-15) ++bound_ok;
        // Greedy is maximal, so it gets at least half the maximum matching.
        const auto e = match_and_agree_exact(a, b);
        if (2 * g.tp >= e.tp && g.tp <= e.tp) ++card_ok;
    }
    CHECK(bound_ok == 1000);
    CHECK(card_ok == 1000);
}

TEST_CASE("3D box IoU") {
    const Box3D a{0, 0, 2, 2, 0, 1}, b{1, 0, 2, 2, 1, 2};
    CHECK(intersection_voxels(a, b) == 2);
    CHECK(iou3d(a, b) == doctest::Approx(2.0 / 14));
    CHECK(iou3d(a, a) == 1.0);
    CHECK(iou3d(a, Box3D{5, 5, 1, 1, 0, 0}) == 0.0);
}

TEST_CASE("merge slices into 3D boxes") {
    const auto one = merge_slices_to_3d({lesion_with(1, {{4, Bbox{3, 4, 5, 6}}})});
    REQUIRE(one.size() == 1);
    CHECK(one[0] == Box3D{3, 4, 5, 6, 4, 4});

    const Bbox b{10, 10, 4, 4};
    const auto four = merge_slices_to_3d({lesion_with(1, {{2, b}, {3, b}, {4, b}, {5, b}})});
    CHECK(four[0].z_max - four[0].z_min + 1 == 4);
    CHECK(four[0].voxels() == 64);

    const auto stair = merge_slices_to_3d(
        {lesion_with(1, {{0, Bbox{0, 0, 2, 2}}, {1, Bbox{1, 1, 2, 2}}, {2, Bbox{2, 2, 2, 2}}})});
    CHECK(stair[0] == Box3D{0, 0, 4, 4, 0, 2});
}

TEST_CASE("dice and lesion precision/recall") {
    LabelVolume a(Dims{20, 20, 1}, Spacing{}), b(Dims{20, 20, 1}, Spacing{});
    for (int i = 0; i < 100; ++i) a.labels[static_cast<std::size_t>(i)] = 1;
    for (int i = 50; i < 150; ++i) b.labels[static_cast<std::size_t>(i)] = 1;
    CHECK(dice(a, b) == doctest::Approx(0.5));
    const LabelVolume e(Dims{20, 20, 1}, Spacing{});
    CHECK(dice(e, e) == 1.0);
    CHECK_THROWS_AS(dice(a, LabelVolume(Dims{2, 2, 1}, Spacing{})), InvalidArgument);

    LabelVolume truth(Dims{30, 30, 3}, Spacing{});
    const auto blob = [](LabelVolume& v, int x, int y) {
        for (int dy = 0; dy < 3; ++dy)
            for (int dx = 0; dx < 3; ++dx) v.at(x + dx, y + dy, 1) = 1;
    };
    blob(truth, 2, 2);
    blob(truth, 20, 20);
    LabelVolume half(truth.dims, Spacing{});
    blob(half, 2, 2);
    CHECK(lesion_pr(half, truth).recall == 0.5);
    CHECK(lesion_pr(half, truth).precision == 1.0);

    blob(truth, 2, 20);
    LabelVolume spurious = truth;
    blob(spurious, 20, 2);
    const auto pr = lesion_pr(spurious, truth);
    CHECK(pr.precision == 0.75);
    CHECK(pr.recall == 1.0);
    CHECK(pr.pred_lesions == 4);
}

TEST_CASE("mean point to mask distance") {
    CHECK(mean_point_to_mask({1, 0}, {{0, 0}, {2, 0}}) == 1.0);
    CHECK_THROWS_AS(mean_point_to_mask({1, 0}, {}), InvalidArgument);

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 512);
    double worst = 0;
    for (int t = 0; t < 50; ++t) {
        std::vector<Point2> mask(1 + rng() % 50);
        for (auto& q : mask) q = {std::floor(u(rng)), std::floor(u(rng))};
        const Point2 p{u(rng), u(rng)};
        long double s = 0;
        for (const auto& q : mask) {
            const long double dx = q.x - p.x, dy = q.y - p.y;
            s += std::sqrt(dx * dx + dy * dy);
        }
        worst = std::max(worst, std::abs(mean_point_to_mask(p, mask) -
                                         static_cast<double>(s / mask.size())));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("gaze correction evaluation") {
    const ViewingGeometry g;
    std::vector<CorrectionCase> cases;
    for (int i = 0; i < 4; ++i) {
        CorrectionCase c;
        c.display = centred_display();
        const double cx = 100 + 60 * i, cy = 200;
        for (int dy = -2; dy <= 2; ++dy)
            for (int dx = -2; dx <= 2; ++dx) c.mask_pixels.push_back({cx + dx, cy + dy});
        c.predicted = {cx, cy};
        c.last_gaze = {cx + 20, cy - 15};
        cases.push_back(c);
    }
    const auto r = gaze_correction_eval(cases, g);
    CHECK(r.on_mask_pct == 100.0);
    CHECK(r.improved_pct == 100.0);
    CHECK(r.mean_angle_deg == doctest::Approx(0.0).epsilon(1e-12));

    for (auto& c : cases) c.predicted = c.last_gaze;
    const auto same = gaze_correction_eval(cases, g);
    CHECK(same.improved_pct == 0.0);
    CHECK(same.on_mask_pct == 0.0);
    CHECK(gaze_correction_eval({}, g).cases == 0);
}

TEST_CASE("calibration on exact fixation is zero") {
    const Bbox root{200, 180, 21, 15};
    const auto d = centred_display();
    const Point2 target = image_to_monitor(root.center(), d);
    const auto rec = recording_with(std::vector<Point2>(15, target), {10, -20, 620}, root);
    const auto rep = calibration_metrics(rec, ViewingGeometry{});
    REQUIRE(rep.records.size() == 1);
    CHECK(rep.records[0].samples == 15);
    CHECK(rep.records[0].accuracy_deg < 1e-9);
    CHECK(rep.records[0].precision_deg < 1e-9);
    CHECK(rep.records[0].last_gaze_deg < 1e-9);
}

TEST_CASE("calibration precision of a two-point alternation") {
    const ViewingGeometry g;
    const double alpha = 0.5;
    const Vec3 origin{0, 0, 600};
    const Point2 p1 = px_at_mm(g, 0);
    const Point2 p2 = px_at_mm(g, 600 * std::tan(alpha * std::numbers::pi / 180));
    std::vector<Point2> pts;
    for (int i = 0; i < 15; ++i) pts.push_back(i % 2 ? p2 : p1);
    const auto rec = recording_with(pts, origin, Bbox{250, 250, 5, 5});
    const auto rep = calibration_metrics(rec, g);
    CHECK(rep.records[0].precision_deg == doctest::Approx(alpha).epsilon(1e-9));
    CHECK(std::abs(rep.precision.mean - alpha) < 1e-6);
}

TEST_CASE("calibration window, skipping and output") {
    const auto d = centred_display();
    const Bbox root{100, 100, 9, 9};
    const Point2 target = image_to_monitor(root.center(), d);
    // Gaze sits 30 mm right of the target: accuracy is the ray angle from the origin.
    const ViewingGeometry g;
    const Vec3 o{0, 0, 650};
    const auto sm = g.screen_point_mm(target);
    const Point2 off = px_at_mm(g, sm[0] + 30, sm[1]);
    auto rec = recording_with(std::vector<Point2>(20, off), o, root);
    // A second lesion selected before any gaze exists is skipped.
    auto early = rec.lesions[0];
    early.lesion_id = 2;
    early.selection.time_stamp = 1000;
    rec.lesions.push_back(early);

    const auto rep = calibration_metrics(rec, g);
    CHECK(rep.skipped == 1);
    REQUIRE(rep.records.size() == 1);
    // 250 ms at 60 Hz holds 15 samples ending on the key tick.
    CHECK(rep.records[0].samples == 15);
    const double ref = oracle::ray_angle_deg(o, g.screen_point_mm(off), sm);
    CHECK(rep.records[0].accuracy_deg == doctest::Approx(ref).epsilon(1e-9));
    CHECK(rep.records[0].closest_gaze_deg == doctest::Approx(ref).epsilon(1e-9));

    const auto j = rep.to_json();
    CHECK(j["unit"] == "deg");
    CHECK(j["records"].size() == 1);
    CHECK(j["skipped"] == 1);
    const auto csv = rep.to_csv();
    CHECK(csv.rfind("metric,unit,mean,std,median,min,max\n", 0) == 0);
    CHECK(csv.find("precision,deg,") != std::string::npos);

    const auto merged = merge_reports({rep, rep});
    CHECK(merged.records.size() == 2);
    CHECK(merged.skipped == 2);
    CHECK(merged.accuracy.std == 0.0);

    rec.lesions.erase(rec.lesions.begin());
    CHECK_THROWS_AS(calibration_metrics(rec, g), EmptyReportError);
    CHECK_THROWS_AS(merge_reports({}), EmptyReportError);
}

TEST_CASE("aggregate statistics") {
    const auto a = aggregate({4, 1, 3, 2});
    CHECK(a.mean == 2.5);
    CHECK(a.median == 2.5);
    CHECK(a.min == 1);
    CHECK(a.max == 4);
    CHECK(a.std == doctest::Approx(std::sqrt(5.0 / 3)));
    CHECK(aggregate({7}).std == 0.0);
    CHECK(aggregate({}).mean == 0.0);
}

TEST_CASE("pairwise agreement between annotation sets") {
    std::vector<LesionAnnotation> r1, r2, r3;
    for (int i = 0; i < 5; ++i) {
        const int s = 4 + 2 * i;
        r1.push_back(lesion_with(i + 1, {{i, Bbox{40 * i, 10, s, s}}, {i + 1, Bbox{40 * i, 10, s, s}}}));
        r2.push_back(lesion_with(i + 1, {{i, Bbox{40 * i + 1, 10, s, s}}, {i + 1, Bbox{40 * i, 10, s, s}}}));
    }
    r3.push_back(lesion_with(1, {{0, Bbox{0, 10, 4, 4}}}));
    const auto rep = agree_sets({"r1", "r2", "r3"}, {r1, r2, r3});
    REQUIRE(rep.pairs.size() == 3);
    CHECK(rep.pairs[0].agreement.precision == 1.0);
    CHECK(rep.pairs[0].agreement.recall == 1.0);
    REQUIRE(rep.pairs[0].icc.has_value());
    CHECK(*rep.pairs[0].icc > 0.9);
    // One matched lesion is too few for ICC.
    CHECK_FALSE(rep.pairs[1].icc.has_value());
    CHECK_FALSE(rep.pairs[1].icc_note.empty());
    CHECK(rep.pairs[1].agreement.precision == doctest::Approx(0.2));
    CHECK(rep.pairs[1].agreement.recall == 1.0);

    const auto self = agree_sets({"a", "b"}, {r1, r1});
    CHECK(*self.pairs[0].icc == 1.0);
    const auto csv = self.to_csv();
    CHECK(csv.find("a vs b,1.0000,1.0000,1.0000,1.0000") != std::string::npos);
    CHECK(self.to_json()["pairs"][0]["tp"] == 5);

    CHECK_THROWS_AS(agree_sets({"a"}, {r1}), InvalidArgument);
    CHECK_THROWS_AS(agree_sets({"a", "b"}, {r1}), InvalidArgument);
}
