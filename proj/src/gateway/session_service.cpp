#include "gazepet/gateway/session_service.hpp"

#include <algorithm>

#include "gazepet/display.hpp"
#include "gazepet/error.hpp"
#include "gazepet/gateway/codec.hpp"
#include "gazepet/nifti.hpp"
#include "gazepet/pointer_sim.hpp"

namespace gazepet::gateway {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kReplyCache = 64;

json box_json(const Bbox& b) { return json::array({b.x, b.y, b.w, b.h}); }

json box_entry(const char* status, int slice, const Bbox& b, double threshold) {
    return {{"status", status},
            {"color", status_color(status)},
            {"slice", slice},
            {"bbox", box_json(b)},
            {"threshold", threshold}};
}

const char* save_state_name(SaveState s) {
    switch (s) {
        case SaveState::None: return "none";
        case SaveState::YesPending: return "yes_pending";
        case SaveState::NoPending: return "no_pending";
        case SaveState::Saved: return "saved";
        case SaveState::Discarded: return "discarded";
    }
    return "none";
}

// A relative path that cannot climb out of the data root.
fs::path safe_relative(const std::string& s) {
    const fs::path p(s);
    if (s.empty() || p.is_absolute()) throw InvalidArgument("study_path must be a relative path");
    for (const auto& part : p) {
        if (part == "..") throw InvalidArgument("study_path must not contain '..'");
    }
    return p;
}

GazeSample tick_from_json(const json& t, const PointerSimOptions& sim) {
    if (!t.is_object()) throw FormatError("gaze tick must be an object");
    if (t.contains("pointer")) {
        const auto ts = t.at("t").get<std::int64_t>();
        const auto& p = t["pointer"];
        if (p.is_null()) return pointer_gaze(std::nullopt, ts, sim);
        if (!p.is_array() || p.size() != 2) throw FormatError("pointer must be [x, y] or null");
        return pointer_gaze(Point2{p[0].get<double>(), p[1].get<double>()}, ts, sim);
    }
    return tracker_sample_from_json(t);
}

json view_json(const ViewState& v) {
    return {{"slice_number", v.slice_number},
            {"modality", to_string(v.modality)},
            {"mip_angle", v.mip_angle},
            {"norm_min", v.norm_min},
            {"norm_max", v.norm_max},
            {"ct_window", v.ct_window},
            {"overlay_visible", v.overlay_visible},
            {"window",
             {{"x", v.window_x}, {"y", v.window_y}, {"width", v.window_width}, {"height", v.window_height}}}};
}

// The fields that change what the slice image looks like.
auto render_key(const ViewState& v) {
    return std::make_tuple(v.slice_number, v.mip_angle, v.modality, v.norm_min, v.norm_max, v.ct_window);
}

}  // namespace

GatewaySession::GatewaySession(GatewayConfig config) : config_(std::move(config)) {}

GatewaySession::~GatewaySession() = default;

Reply GatewaySession::handle_frame(std::string_view text) {
    std::int64_t seq = -1;
    Message m;
    try {
        m = parse_client_message(text, &seq);
    } catch (const ProtocolError& e) {
        return Reply{{make_error(seq, e.kind(), e.what())}, true};
    }
    return handle(m);
}

Reply GatewaySession::handle(const Message& m) {
    const std::int64_t seq = m.seq.value_or(-1);
    if (last_seq_ && seq <= *last_seq_) {
        // Retransmit: answer again without applying twice.
        if (const auto it = replies_.find(seq); it != replies_.end()) return it->second;
        return Reply{{make_error(seq, "stale_seq", "seq " + std::to_string(seq) +
                                                       " is older than the last command")}};
    }
    last_seq_ = seq;

    Reply r;
    const auto before_rev = revision_;
    const auto before_view = driver_ ? std::optional(render_key(driver_->view())) : std::nullopt;
    bool view_changed = false;
    try {
        json payload;
        if (m.kind == kSessionOpen) {
            payload = on_open(m.payload);
        } else if (m.kind == kSessionClose) {
            payload = on_close(m.payload);
        } else if (m.kind == kGazeBatch) {
            payload = on_gaze(m.payload);
        } else if (m.kind == kKeyPress) {
            payload = on_key(m.payload, view_changed);
        } else if (m.kind == kViewSet) {
            payload = on_view(m.payload);
        } else {
            return Reply{{make_error(seq, "protocol", "unknown message kind '" + m.kind + "'")}, true};
        }
        payload["revision"] = revision_;
        r.messages.push_back(make_ack(seq, std::move(payload)));
    } catch (const Error& e) {
        r.messages.push_back(make_error(seq, e.kind(), e.what()));
    } catch (const json::exception& e) {
        r.messages.push_back(make_error(seq, "format", std::string("bad payload: ") + e.what()));
    }
    if (revision_ != before_rev) {
        r.messages.push_back(Message{kStateBroadcast, std::nullopt, state_payload()});
        const bool new_image = driver_ && (!before_view || *before_view != render_key(driver_->view()) ||
                                           m.kind == kViewSet);
        if (new_image) r.messages.push_back(slice_image());
    }
    replies_[seq] = r;
    while (replies_.size() > kReplyCache) replies_.erase(replies_.begin());
    return r;
}

void GatewaySession::require_open() const {
    if (!driver_) throw StateError("no open session");
}

json GatewaySession::on_open(const json& p) {
    if (driver_) throw StateError("a session is already open");
    const auto study = p.at("study_path").get<std::string>();
    const auto rel = safe_relative(study);
    const auto role = p.value("reader_role", std::string("trainee"));
    if (role != "trainee" && role != "experienced") {
        throw InvalidArgument("reader_role must be 'trainee' or 'experienced'");
    }
    const auto source = p.value("gaze_source", std::string("pointer_sim"));
    if (source != "pointer_sim" && source != "live_stream" && source != "scripted_file") {
        throw InvalidArgument("unknown gaze_source '" + source + "'");
    }
    const auto reader = p.value("reader_id", std::string("reader"));
    safe_relative(reader);

    const fs::path dir = config_.data_root / rel;
    auto pet = std::make_unique<ScalarVolume>(load_volume(dir / "SUV.nii.gz", ModalityKind::PET_SUV));
    std::unique_ptr<ScalarVolume> ct;
    if (fs::exists(dir / "CTres.nii.gz")) {
        auto c = load_volume(dir / "CTres.nii.gz", ModalityKind::CT);
        if (c.dims().nz == pet->dims().nz) {
            if (c.dims().nx != pet->dims().nx || c.dims().ny != pet->dims().ny) {
                c = resample_in_plane(c, pet->dims().nx, pet->dims().ny);
            }
            ct = std::make_unique<ScalarVolume>(std::move(c));
        }
    }

    SessionHeader header;
    header.monitor_width = config_.geometry.monitor_width_px;
    header.monitor_height = config_.geometry.monitor_height_px;
    header.display_window_dim = {config_.view.window_width, config_.view.window_height};
    if (const auto h = p.find("header"); h != p.end()) {
        header.case_difficulty = h->value("case_difficulty", 0);
        header.ui_experience = h->value("ui_experience", 0);
        header.comment = h->value("comment", std::string());
    }
    ViewState view = config_.view;
    view.slice_number = pet->dims().nz / 2;

    pet_ = std::move(pet);
    ct_ = std::move(ct);
    mips_.reset();
    driver_ = std::make_unique<SessionDriver>(*pet_, header, view, config_.driver);
    study_path_ = study;
    reader_id_ = reader;
    reader_role_ = role;
    buffer_.clear();
    last_tick_ts_.reset();
    last_key_ts_.reset();
    saved_dir_.reset();
    ++revision_;
    return {{"study_path", study},
            {"dims", {pet_->dims().nx, pet_->dims().ny, pet_->dims().nz}},
            {"ct", ct_ != nullptr}};
}

void GatewaySession::end_session(bool save) {
    flush_all();
    const auto rec = driver_->finish();
    if (save) {
        const auto dir = config_.session_root() / reader_id_ / study_path_;
        emit_session(rec, dir);
        saved_dir_ = dir;
    }
    driver_.reset();
    mips_.reset();
    pet_.reset();
    ct_.reset();
    ++revision_;
}

json GatewaySession::on_close(const json& p) {
    require_open();
    const bool save = p.at("save").get<bool>();
    end_session(save);
    json out{{"saved", save}};
    if (save) out["dir"] = saved_dir_->string();
    return out;
}

json GatewaySession::on_gaze(const json& p) {
    require_open();
    const auto& ticks = p.at("ticks");
    if (!ticks.is_array()) throw FormatError("ticks must be an array");
    PointerSimOptions sim;
    sim.geometry = config_.geometry;
    std::vector<GazeSample> batch;
    batch.reserve(ticks.size());
    for (const auto& t : ticks) batch.push_back(tick_from_json(t, sim));
    // All or nothing: a batch with a tick older than what is already recorded is refused.
    // A tick sharing a key's stamp replays before that key, so it must not follow it here.
    const std::int64_t floor = std::max(last_tick_ts_.value_or(INT64_MIN),
                                        last_key_ts_ ? *last_key_ts_ + 1 : INT64_MIN);
    for (const auto& g : batch) {
        if (g.system_time_stamp < floor) {
            throw StateError("late gaze tick at " + std::to_string(g.system_time_stamp) +
                             " (already recorded up to " + std::to_string(floor) + ")");
        }
    }
    for (auto& g : batch) buffer_.emplace(g.system_time_stamp, std::move(g));
    flush_watermark();
    json out{{"accepted", batch.size()}, {"buffered", buffer_.size()}};
    if (p.contains("gap")) out["gap"] = p["gap"];
    return out;
}

json GatewaySession::on_key(const json& p, bool& view_changed) {
    require_open();
    int code = 0;
    if (const auto k = p.find("key"); k != p.end() && k->is_string()) {
        const auto s = k->get<std::string>();
        if (s.size() != 1) throw FormatError("key must be a single character");
        code = static_cast<unsigned char>(s[0]);
    } else {
        code = p.at("code").get<int>();
    }
    std::int64_t t = 0;
    if (const auto ts = p.find("t"); ts != p.end()) {
        t = ts->get<std::int64_t>();
        const std::int64_t floor = std::max(last_tick_ts_.value_or(INT64_MIN), last_key_ts_.value_or(INT64_MIN));
        if (t < floor) {
            throw StateError("late key at " + std::to_string(t) + " (already recorded up to " +
                             std::to_string(floor) + ")");
        }
        flush_until(t);
    } else {
        flush_all();
        t = std::max(last_tick_ts_.value_or(0), last_key_ts_.value_or(0));
    }
    last_key_ts_ = t;
    const auto pause_before = driver_->paused_now();
    const auto out = driver_->press(KeyEvent{t, code, json::object()});
    json reply{{"code", code},
               {"action", out.binding ? json(to_string(out.binding->action)) : json()},
               {"applied", out.applied},
               {"warning", out.warning}};
    view_changed = out.view_changed;
    if (out.applied || driver_->paused_now() != pause_before) ++revision_;
    if (driver_->save_state() == SaveState::Saved || driver_->save_state() == SaveState::Discarded) {
        const bool save = driver_->save_state() == SaveState::Saved;
        end_session(save);
        reply["session_closed"] = true;
        if (save) reply["dir"] = saved_dir_->string();
    }
    return reply;
}

json GatewaySession::on_view(const json& p) {
    require_open();
    flush_all();
    ViewState v = driver_->view();
    if (p.contains("slice_number")) v.slice_number = p["slice_number"].get<int>();
    if (p.contains("mip_angle")) v.mip_angle = p["mip_angle"].get<int>();
    if (p.contains("modality")) v.modality = view_modality_from_string(p["modality"].get<std::string>());
    if (p.contains("norm_min")) v.norm_min = p["norm_min"].get<double>();
    if (p.contains("norm_max")) v.norm_max = p["norm_max"].get<double>();
    if (p.contains("ct_window")) v.ct_window = p["ct_window"].get<int>();
    if (p.contains("overlay_visible")) v.overlay_visible = p["overlay_visible"].get<bool>();
    if (const auto w = p.find("window"); w != p.end()) {
        v.window_x = w->value("x", v.window_x);
        v.window_y = w->value("y", v.window_y);
        v.window_width = w->value("width", v.window_width);
        v.window_height = w->value("height", v.window_height);
    }
    if (v.slice_number < 0 || v.slice_number >= pet_->dims().nz) throw BoundsError("slice_number out of range");
    if (v.mip_angle < 0 || v.mip_angle >= kMipAngles) throw BoundsError("mip_angle must be 0..11");
    if (v.ct_window < 1 || v.ct_window > 9) throw BoundsError("ct_window must be 1..9");
    if (!(v.norm_max > v.norm_min)) throw InvalidArgument("norm_max must exceed norm_min");
    if ((v.modality == ViewModality::CT || v.modality == ViewModality::Fused) && !ct_) {
        throw StateError("study has no CT volume");
    }
    if (v.window_width <= 0 || v.window_height <= 0) throw InvalidArgument("window size must be positive");
    const bool changed = !(v == driver_->view());
    driver_->set_view(v);
    ++revision_;  // a view.set always answers with a fresh broadcast and image
    return {{"changed", changed}};
}

void GatewaySession::flush_until(std::int64_t t) {
    auto it = buffer_.begin();
    for (; it != buffer_.end() && it->first <= t; ++it) {
        driver_->ingest(it->second);
        last_tick_ts_ = it->first;
    }
    buffer_.erase(buffer_.begin(), it);
}

void GatewaySession::flush_all() {
    if (!buffer_.empty()) flush_until(buffer_.rbegin()->first);
}

void GatewaySession::flush_watermark() {
    if (buffer_.empty()) return;
    flush_until(buffer_.rbegin()->first - config_.flush_watermark_us);
}

const MipStack& GatewaySession::mips() const {
    if (!mips_) mips_ = std::make_unique<MipStack>(mip_stack(*pet_));
    return *mips_;
}

json GatewaySession::state_payload() const {
    json s{{"revision", revision_}, {"open", driver_ != nullptr}};
    if (!driver_) {
        if (saved_dir_) s["saved_dir"] = saved_dir_->string();
        return s;
    }
    const auto& st = driver_->engine().state();
    const auto& v = driver_->view();
    const bool paused = driver_->paused_now();
    s["study_path"] = study_path_;
    s["reader_id"] = reader_id_;
    s["reader_role"] = reader_role_;
    s["mode"] = st.mode == Mode::Confirmation ? "confirmation" : "browsing";
    s["pending"] = st.pending.has_value();
    s["recording"] = {{"status", paused ? "paused" : "recording"}, {"color", paused ? "red" : "green"}};
    s["view"] = view_json(v);
    s["save_state"] = save_state_name(driver_->save_state());
    s["ticks"] = driver_->recorder().ticks();
    s["lesions"] = st.accepted.size();
    s["rejected"] = st.rejected_boxes.size();
    const auto& g = driver_->last_gaze();
    s["last_gaze"] = g ? json::array({g->x, g->y}) : json();

    json boxes = json::array();
    if (is_axial(v.modality)) {
        const int z = v.slice_number;
        if (st.pending && st.pending->candidate.slice_number == z) {
            boxes.push_back(box_entry("candidate", z, st.pending->candidate.box, st.pending->candidate.suv_threshold));
        }
        for (const auto& l : st.accepted) {
            const auto it = l.slice_boxes.find(z);
            if (it == l.slice_boxes.end()) continue;
            auto e = box_entry(it->second.status == BoxStatus::Validated ? "accepted" : "extrapolated", z,
                               it->second.box, it->second.threshold);
            e["lesion_id"] = l.lesion_id;
            boxes.push_back(std::move(e));
        }
        for (const auto& r : st.rejected_boxes) {
            if (r.slice_number == z) boxes.push_back(box_entry("rejected", z, r.box, r.threshold));
        }
    }
    s["boxes"] = std::move(boxes);
    return s;
}

Message GatewaySession::slice_image() const {
    require_open();
    const auto& v = driver_->view();
    const DisplayWindow pet_window{v.norm_min, v.norm_max, std::nullopt};
    Image8 img;
    switch (v.modality) {
        case ViewModality::PET:
            img = axial_slice(*pet_, v.slice_number, pet_window);
            break;
        case ViewModality::CT:
            img = axial_slice(*ct_, v.slice_number, ct_preset(v.ct_window).window());
            break;
        case ViewModality::Fused:
            img = fused_slice(*ct_, *pet_, v.slice_number, ct_preset(v.ct_window).window(), pet_window);
            break;
        case ViewModality::MIP: {
            const auto& pr = mips().projections.at(static_cast<std::size_t>(v.mip_angle));
            img = window_image(pr.values, pr.width, pr.height, pet_window);
            break;
        }
    }
    return Message{kSliceImage,
                   std::nullopt,
                   {{"revision", revision_},
                    {"modality", to_string(v.modality)},
                    {"slice_number", v.slice_number},
                    {"mip_angle", v.mip_angle},
                    {"width", img.width},
                    {"height", img.height},
                    {"channels", img.channels},
                    {"encoding", "png"},
                    {"data", base64_encode(encode_png(img))}}};
}

}  // namespace gazepet::gateway
