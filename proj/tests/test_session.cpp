#include <cmath>
#include <limits>

#include "doctest.h"
#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"
#include "gazepet/key_codes.hpp"
#include "gazepet/phantom.hpp"
#include "gazepet/pointer_sim.hpp"
#include "gazepet/session.hpp"
#include "gazepet/session_driver.hpp"
#include "gazepet/simulate.hpp"
#include "test_util.hpp"

using namespace gazepet;

namespace {

struct Sim {
    PhantomSpec spec;
    Phantom phantom;
    SessionRecording rec;
};

Sim simulated(std::uint64_t seed, int spheres = 4) {
    Sim s;
    s.spec = testutil::random_spec(seed, spheres);
    s.phantom = generate_phantom(s.spec);
    SimulationOptions o;
    o.seed = seed;
    s.rec = simulate_read(s.phantom, s.spec, o);
    return s;
}

}  // namespace

TEST_CASE("gaze mapping") {
    DisplaySample d;
    d.window_x = 200;
    d.window_y = 100;
    d.window_width = 1000;
    d.window_height = 1000;
    const auto g = pointer_gaze(Point2{700, 600}, 1);
    const auto p = map_gaze_to_image(g, d);
    REQUIRE(p.has_value());
    CHECK(p->x == doctest::Approx(256.0).epsilon(1e-12));
    CHECK(p->y == doctest::Approx(256.0).epsilon(1e-12));

    const auto back = image_to_monitor(*p, d);
    CHECK(back.x == doctest::Approx(700.0));
    CHECK(back.y == doctest::Approx(600.0));

    // Window centre maps to the image centre.
    const auto c = map_gaze_to_image(pointer_gaze(Point2{700, 600}, 2), d);
    CHECK(c->x == doctest::Approx(256.0));

    CHECK_FALSE(map_gaze_to_image(pointer_gaze(std::nullopt, 3), d).has_value());
    CHECK_FALSE(map_gaze_to_image(pointer_gaze(Point2{100, 600}, 4), d).has_value());

    // One valid eye is enough.
    auto one = pointer_gaze(Point2{700, 600}, 5);
    one.left.gaze_point_validity = 0;
    CHECK(map_gaze_to_image(one, d).has_value());
    one.right.gaze_point_validity = 0;
    CHECK_FALSE(map_gaze_to_image(one, d).has_value());
    CHECK_FALSE(gaze_origin(one).has_value());

    const auto o = gaze_origin(pointer_gaze(Point2{700, 600}, 6));
    REQUIRE(o.has_value());
    CHECK((*o)[0] == doctest::Approx(0.0));
    CHECK((*o)[2] == doctest::Approx(600.0));
}

TEST_CASE("display box conversion") {
    DisplaySample d;
    d.window_width = 1400;
    d.window_height = 1400;
    const Bbox b{100, 50, 20, 10};
    const auto disp = box_to_display(b, d);
    CHECK(disp == Bbox{273, 137, 55, 27});
    CHECK(box_from_display(disp, d) == b);
}

TEST_CASE("recorder keeps the synced lists aligned") {
    SessionRecorder r;
    DisplaySample d;
    for (int i = 0; i < 25; ++i) r.ingest_tick(pointer_gaze(Point2{1000, 700}, tick_time(0, i)), d, i % 5 == 0);
    const auto& rec = r.recording();
    CHECK(rec.tobii_cam.size() == 25);
    CHECK(rec.common_cam.size() == 25);
    CHECK(rec.pauses.size() == 25);
    CHECK(rec.pauses[5]);
    CHECK(rec.tobii_cam[5].left.valid());
    CHECK_NOTHROW(rec.check_integrity());

    CHECK_THROWS_AS(r.ingest_tick(pointer_gaze(std::nullopt, 0), d, false), StateError);
    r.record_key(KeyEvent{500, 's', {}});
    CHECK_THROWS_AS(r.record_key(KeyEvent{400, 's', {}}), StateError);
    r.close();
    CHECK_THROWS_AS(r.ingest_tick(pointer_gaze(std::nullopt, 1'000'000), d, false), StateError);
}

TEST_CASE("empty session serialises to empty lists") {
    SessionRecording rec;
    const auto g = nlohmann::json::parse(emit_gaze_json(rec));
    CHECK(g.at("tobii_cam").empty());
    CHECK(g.at("pauses").empty());
    CHECK(nlohmann::json::parse(emit_lesion_json(rec)).is_object());
    CHECK(nlohmann::json::parse(emit_key_json(rec)).is_object());
    const auto back = parse_session_documents(emit_gaze_json(rec), emit_lesion_json(rec), emit_key_json(rec));
    CHECK(back == rec);
}

TEST_CASE("session round trip is a fixed point") {
    const auto s = simulated(3);
    REQUIRE_FALSE(s.rec.lesions.empty());
    const auto dir = testutil::temp_dir("session_rt");
    emit_session(s.rec, dir);
    const auto parsed = parse_session(dir);
    CHECK(parsed.header == s.rec.header);
    CHECK(parsed.tobii_cam == s.rec.tobii_cam);
    CHECK(parsed.common_cam == s.rec.common_cam);
    CHECK(parsed.pauses == s.rec.pauses);
    CHECK(parsed.key_events == s.rec.key_events);
    CHECK(parsed.lesions == s.rec.lesions);
    CHECK(parsed.rejected == s.rec.rejected);
    CHECK(parsed.gaze_extras == s.rec.gaze_extras);
    CHECK(parsed.lesion_extras == s.rec.lesion_extras);
    CHECK(parsed.key_extras == s.rec.key_extras);
    CHECK(parsed == s.rec);

    const auto dir2 = testutil::temp_dir("session_rt2");
    emit_session(parsed, dir2);
    for (const char* f : {kGazeFile, kLesionFile, kKeyFile}) {
        CHECK(read_file(dir / f) == read_file(dir2 / f));
    }
}

TEST_CASE("NaN coordinates survive as null") {
    SessionRecording rec;
    rec.tobii_cam.push_back(pointer_gaze(std::nullopt, 10));
    rec.common_cam.push_back(DisplaySample{});
    rec.pauses.push_back(false);
    const auto text = emit_gaze_json(rec);
    CHECK(text.find("null") != std::string::npos);
    const auto back = parse_session_documents(text, emit_lesion_json(rec), emit_key_json(rec));
    CHECK(std::isnan(back.tobii_cam[0].left.gaze_point_on_display_area[0]));
    CHECK(back == rec);
    CHECK(emit_gaze_json(back) == text);
}

TEST_CASE("integrity and unknown fields") {
    const auto s = simulated(4, 3);
    auto g = nlohmann::json::parse(emit_gaze_json(s.rec));
    const auto lesions = emit_lesion_json(s.rec);
    const auto keys = emit_key_json(s.rec);

    auto truncated = g;
    truncated["pauses"].erase(truncated["pauses"].size() - 1);
    CHECK_THROWS_AS(parse_session_documents(truncated.dump(), lesions, keys), IntegrityError);

    auto extra = g;
    extra["scanner_notes"] = {{"room", 3}};
    extra["tobii_cam"][0]["firmware"] = "1.2";
    const auto parsed = parse_session_documents(extra.dump(), lesions, keys);
    CHECK(parsed.gaze_extras.at("scanner_notes").at("room") == 3);
    CHECK(parsed.tobii_cam[0].extras.at("firmware") == "1.2");
    const auto again = nlohmann::json::parse(emit_gaze_json(parsed));
    CHECK(again.at("scanner_notes") == extra.at("scanner_notes"));
    CHECK(again.at("tobii_cam")[0].at("firmware") == "1.2");

    CHECK_THROWS_AS(parse_session_documents("{not json", lesions, keys), FormatError);
    CHECK_THROWS_AS(parse_session(testutil::temp_dir("empty_session")), IoError);
}

TEST_CASE("key table defaults and remap") {
    const auto t = KeyTable::defaults();
    CHECK(t.lookup(' ')->action == KeyAction::TogglePause);
    CHECK(t.lookup('F')->action == KeyAction::RejectAll);
    CHECK(t.lookup('f')->action == KeyAction::Reject);
    CHECK(t.lookup('=')->action == KeyAction::ContrastUp);
    CHECK(t.lookup('.')->action == KeyAction::NextSlice);
    CHECK(t.lookup(13)->action == KeyAction::Enter);
    CHECK(t.lookup('\t')->action == KeyAction::ToggleOverlay);
    CHECK(t.lookup('7')->action == KeyAction::CtPreset);
    CHECK(t.lookup('7')->preset == 7);
    CHECK_FALSE(t.lookup('!').has_value());

    const auto r = KeyTable::from_json({{"select_certain", 115 + 1000}, {"ct_preset_3", {99}}});
    CHECK(r.lookup(1115)->action == KeyAction::SelectCertain);
    CHECK_FALSE(r.lookup('s').has_value());
    CHECK(r.lookup('c')->action == KeyAction::CtPreset);
    CHECK(r.lookup('c')->preset == 3);
    CHECK_FALSE(r.lookup('3').has_value());
    CHECK(r.lookup('d')->action == KeyAction::SelectUncertain);
    CHECK_THROWS(KeyTable::from_json({{"launch_rockets", 1}}));
    CHECK(KeyTable::from_json(t.to_json()).entries() == t.entries());
}

TEST_CASE("driver view keys") {
    ScalarVolume pet(Dims{512, 512, 4}, Spacing{2, 2, 3}, ModalityKind::PET_SUV, 1.0f);
    SessionDriver d(pet, {});
    std::int64_t t = 1;
    auto key = [&](int c) { return d.press(KeyEvent{t++, c, {}}); };

    key('>');
    key('>');
    CHECK(d.view().slice_number == 2);
    key('>');
    CHECK_FALSE(key('>').applied);
    CHECK(d.view().slice_number == 3);
    key('m');
    key('<');
    CHECK(d.view().mip_angle == 11);
    CHECK(d.view().sample().slice_number == 11);
    key('p');
    CHECK(d.view().sample().slice_number == 3);
    key('b');
    CHECK(d.view().norm_max == 25.0);
    key('l');
    key('+');
    CHECK(d.view().norm_max == doctest::Approx(5.4));
    key('-');
    CHECK(d.view().norm_max == doctest::Approx(6.0));
    key('4');
    CHECK(d.view().ct_window == 4);
    key('\t');
    CHECK_FALSE(d.view().overlay_visible);
    CHECK_FALSE(key('!').binding.has_value());
    CHECK(key('s').warning.find("no gaze tick") != std::string::npos);
    CHECK_FALSE(key(13).applied);
    key('n');
    key(13);
    CHECK(d.save_state() == SaveState::Discarded);
    key('y');
    key(13);
    CHECK(d.save_state() == SaveState::Saved);
    key('q');
    CHECK(d.quit_requested());
    CHECK(d.recorder().recording().key_events.size() == 21);
}

TEST_CASE("driver pause flags and select on a phantom") {
    PhantomSpec spec;
    spec.dims = Dims{512, 512, 8};
    spec.spacing_mm = Spacing{2, 2, 3};
    spec.spheres = {{{400, 300, 12}, 9, 6}};
    const auto ph = generate_phantom(spec);
    ScriptedReader r(ph.pet);
    r.look(Point2{200, 150}, 3);
    r.key(' ');
    r.look(Point2{200, 150}, 2);
    r.key(' ');
    r.go_to_slice(4);
    r.set_threshold_between(2.0, 4.0);
    r.look(Point2{200, 150}, 5);
    CHECK(r.key('s').annotation_changed);
    r.look(Point2{200, 150}, 4);
    CHECK_FALSE(r.key('s').applied);  // candidate already waiting
    CHECK(r.key('a').annotation_changed);
    r.look(Point2{200, 150}, 2);

    const auto rec = r.finish();
    const std::vector<bool> expect_prefix{false, false, false, true, true};
    for (std::size_t i = 0; i < expect_prefix.size(); ++i) CHECK(rec.pauses[i] == expect_prefix[i]);
    // Ticks while the candidate waited are flagged.
    std::size_t paused_tail = 0;
    for (std::size_t i = rec.pauses.size() - 6; i < rec.pauses.size() - 2; ++i) paused_tail += rec.pauses[i];
    CHECK(paused_tail == 4);
    CHECK_FALSE(rec.pauses.back());
    REQUIRE(rec.lesions.size() == 1);
    CHECK(rec.lesions[0].root_slice == 4);
    CHECK(rec.lesions[0].suv_threshold > 2.0);
    CHECK(rec.lesions[0].selection.gaze.x == doctest::Approx(200.0).epsilon(1e-9));
}

TEST_CASE("MIP view blocks selection") {
    ScalarVolume pet(Dims{512, 512, 2}, Spacing{}, ModalityKind::PET_SUV, 1.0f);
    ScriptedReader r(pet);
    r.key('m');
    r.look(Point2{10, 10}, 2);
    CHECK(r.key('s').warning.find("MIP") != std::string::npos);
}

TEST_CASE("replay reproduces simulated sessions") {
    for (std::uint64_t seed : {11u, 12u}) {
        const auto s = simulated(seed, 5);
        CHECK(s.rec.lesions.size() == 4);  // one sphere is rejected outright
        CHECK_FALSE(s.rec.rejected.empty());
        const auto a = replay(s.rec, s.phantom.pet);
        const auto b = replay(s.rec, s.phantom.pet);
        CHECK(a == b);
        CHECK(a.accepted == s.rec.lesions);
    }
}

TEST_CASE("tampered recordings fail replay") {
    const auto s = simulated(21, 4);
    for (int target : {'s', 'a', 'f', 'F', 'z'}) {
        auto bad = s.rec;
        const auto it = std::find_if(bad.key_events.begin(), bad.key_events.end(),
                                     [&](const KeyEvent& k) { return k.key_code == target; });
        REQUIRE(it != bad.key_events.end());
        bad.key_events.erase(it);
        CHECK_THROWS_AS(replay(bad, s.phantom.pet), ReplayMismatchError);
    }
    auto moved = s.rec;
    moved.lesions[0].slice_boxes.begin()->second.box.w += 1;
    CHECK_THROWS_AS(replay(moved, s.phantom.pet), ReplayMismatchError);

    auto paused = s.rec;
    paused.pauses[3] = !paused.pauses[3];
    CHECK_THROWS_AS(replay(paused, s.phantom.pet), ReplayMismatchError);
    ReplayOptions lax;
    lax.check_pauses = false;
    CHECK_NOTHROW(replay(paused, s.phantom.pet, lax));
}
