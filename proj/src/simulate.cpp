#include "gazepet/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gazepet {

ScriptedReader::ScriptedReader(const ScalarVolume& pet, SessionHeader header, ViewState view,
                               DriverOptions options, std::int64_t t0)
    : driver_(pet, std::move(header), view, std::move(options)), t0_(t0) {}

void ScriptedReader::look(const std::optional<Point2>& p, int ticks, double jitter) {
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < ticks; ++i) {
        std::optional<Point2> at = p;
        if (at && jitter > 0) {
            at->x = std::clamp(at->x + jitter * n(rng_), 0.0, 511.0);
            at->y = std::clamp(at->y + jitter * n(rng_), 0.0, 511.0);
        }
        const std::int64_t ts = tick_time(t0_, tick_++);
        driver_.ingest(image_gaze(at, driver_.view().sample(), ts));
    }
}

KeyOutcome ScriptedReader::key(int code) {
    const std::int64_t after_tick = tick_ == 0 ? t0_ - 10000 : tick_time(t0_, tick_ - 1) + 4000;
    last_key_ = std::max(after_tick, last_key_ + 1);
    return driver_.press(KeyEvent{last_key_, code, nlohmann::json::object()});
}

void ScriptedReader::go_to_slice(int z) {
    while (driver_.view().slice_number != z) {
        const int before = driver_.view().slice_number;
        key(z > before ? '>' : '<');
        look(Point2{256, 256}, 1, 20.0);
        if (driver_.view().slice_number == before) break;
    }
}

void ScriptedReader::set_threshold_between(double below, double at_most) {
    for (int guard = 0; guard < 200; ++guard) {
        const double m = driver_.view().norm_max;
        if (m > at_most) {
            key('+');
        } else if (m <= below) {
            key('-');
        } else {
            return;
        }
    }
}

SessionRecording simulate_read(const Phantom& phantom, const PhantomSpec& spec,
                               const SimulationOptions& opt, const DriverOptions& driver) {
    SessionHeader header;
    header.case_difficulty = 2;
    header.ui_experience = 4;
    header.comment = "simulated read";
    ScriptedReader r(phantom.pet, header, ViewState{}, driver);
    r.seed(opt.seed);
    std::mt19937_64 rng(opt.seed);

    std::vector<std::size_t> order(spec.spheres.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);

    const double kx = 512.0 / phantom.pet.dims().nx, ky = 512.0 / phantom.pet.dims().ny;
    r.look(Point2{256, 256}, 30, 40.0);

    if (opt.exercise_views) {
        r.key('c');
        r.look(Point2{200, 300}, 20, 30.0);
        r.key('5');
        r.key('o');
        r.look(Point2{300, 200}, 20, 30.0);
        r.key('m');
        for (int a = 0; a < 3; ++a) {
            r.look(Point2{256, 100}, 10, 30.0);
            r.key('>');
        }
        r.key('p');
        r.key(' ');
        r.look(Point2{256, 256}, 15, 30.0);
        r.key(' ');
    }

    for (std::size_t step = 0; step < order.size(); ++step) {
        const std::size_t s = order[step];
        const auto c = sphere_center_voxel(spec, s);
        const int z = std::clamp(static_cast<int>(std::lround(c[2])), 0, phantom.pet.dims().nz - 1);
        const Point2 target{c[0] * kx, c[1] * ky};
        const double bg = spec.background_suv, d = spec.spheres[s].peak_suv - bg;

        r.go_to_slice(z);
        r.set_threshold_between(bg + 0.3 * d, bg + 0.6 * d);
        r.look(target, opt.dwell_ticks, 1.5);
        const int select = (rng() % 3 == 0) ? 'd' : 's';

        if (opt.exercise_rejection && step == 0) {
            r.key(select);
            r.look(target, 12, 1.5);
            r.key('f');
            r.look(target, 6, 1.5);
            r.key('x');
            r.look(target, 20, 1.5);
        }
        r.key(select);
        r.look(target, 20, 1.5);
        if (opt.exercise_rejection && step == 1) {
            r.key('r');
            r.look(target, 5, 1.5);
            r.key('e');
            r.look(target, 5, 1.5);
        }
        r.key('a');
        r.look(target, 10, 1.5);
        if (opt.exercise_rejection && step == 1) {
            r.key('z');
            r.look(target, 30, 1.5);
            r.key(select);
            r.look(target, 10, 1.5);
            r.key('a');
        }
        r.look(Point2{256, 256}, 20, 60.0);
    }

    if (opt.exercise_rejection && order.size() >= 3) {
        const std::size_t s = order[2];
        const auto c = sphere_center_voxel(spec, s);
        const int z = std::clamp(static_cast<int>(std::lround(c[2])), 0, phantom.pet.dims().nz - 1);
        r.go_to_slice(z);
        r.look(Point2{c[0] * kx, c[1] * ky}, 30, 1.5);
        r.key('F');
        r.look(Point2{c[0] * kx, c[1] * ky}, 10, 1.5);
        r.key('s');  // filtered now: a warning, nothing proposed
        r.look(Point2{256, 256}, 10, 60.0);
    }

    r.key('y');
    r.key(13);
    return r.finish();
}

}  // namespace gazepet
