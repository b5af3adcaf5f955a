#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "gazepet/phantom.hpp"
#include "gazepet/pointer_sim.hpp"
#include "gazepet/session_driver.hpp"

namespace gazepet {

// Drives a SessionDriver the way a reader would: 60 Hz ticks with the gaze
// somewhere, keys pressed between ticks.
class ScriptedReader {
public:
    ScriptedReader(const ScalarVolume& pet, SessionHeader header = {}, ViewState view = {},
                   DriverOptions options = {}, std::int64_t t0 = 1'000'000'000);

    // `ticks` samples at `image_point` (nullopt = looking away / lost).
    void look(const std::optional<Point2>& image_point, int ticks, double jitter_px = 0.0);
    KeyOutcome key(int code);
    void go_to_slice(int z);
    // '+' / '-' until the PET window max sits in (below, at_most].
    void set_threshold_between(double below, double at_most);

    SessionDriver& driver() { return driver_; }
    std::int64_t ticks() const { return tick_; }
    SessionRecording finish() { return driver_.finish(); }

    void seed(std::uint64_t s) { rng_.seed(s); }

private:
    SessionDriver driver_;
    std::int64_t t0_;
    std::int64_t tick_ = 0;
    std::int64_t last_key_ = 0;
    std::mt19937_64 rng_{0};
};

struct SimulationOptions {
    std::uint64_t seed = 1;
    int dwell_ticks = 90;          // gaze on a lesion before selecting
    bool exercise_rejection = true;
    bool exercise_views = true;
};

// A full read of a phantom: every sphere is found, selected and accepted,
// with some rejections, resizes, undos and view changes mixed in.
SessionRecording simulate_read(const Phantom& phantom, const PhantomSpec& spec,
                               const SimulationOptions& options = {},
                               const DriverOptions& driver = {});

}  // namespace gazepet
