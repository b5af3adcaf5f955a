#include "gazepet/session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace gazepet {
namespace {

bool same_number(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

template <std::size_t N>
bool same_array(const std::array<double, N>& a, const std::array<double, N>& b) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!same_number(a[i], b[i])) return false;
    }
    return true;
}

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

template <std::size_t N>
std::array<double, N> read_array(const json& j) {
    if (!j.is_array()) throw FormatError("expected an array, got " + j.dump());
    std::array<double, N> out{};
    // The published schema lists some triples as pairs; missing entries stay 0.
    for (std::size_t i = 0; i < N && i < j.size(); ++i) out[i] = number_or_nan(j[i]);
    return out;
}

// Splits an object into the fields we know (returned) and the rest (extras).
json take_extras(const json& obj, std::initializer_list<const char*> known) {
    json extras = json::object();
    std::set<std::string> k(known.begin(), known.end());
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!k.count(it.key())) extras[it.key()] = it.value();
    }
    return extras;
}

void append_extras(ojson& out, const json& extras) {
    for (auto it = extras.begin(); it != extras.end(); ++it) out[it.key()] = it.value();
}

template <typename T>
T field(const json& obj, const char* name) {
    const auto it = obj.find(name);
    if (it == obj.end()) throw FormatError(std::string("missing field '") + name + "'");
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad field '") + name + "': " + e.what());
    }
}

// ---- tracker_sample --------------------------------------------------------

constexpr const char* kEyeFields[] = {
    "gaze_point_on_display_area",         "gaze_point_in_user_coordinate_system",
    "gaze_point_validity",                "pupil_diameter",
    "pupil_validity",                     "gaze_origin_in_user_coordinate_system",
    "gaze_origin_in_trackbox_coordinate_system"};

void emit_eye(ojson& out, const std::string& side, const EyeSample& e) {
    out[side + "_gaze_point_on_display_area"] = e.gaze_point_on_display_area;
    out[side + "_gaze_point_in_user_coordinate_system"] = e.gaze_point_in_user_coordinate_system;
    out[side + "_gaze_point_validity"] = e.gaze_point_validity;
    out[side + "_pupil_diameter"] = e.pupil_diameter;
    out[side + "_pupil_validity"] = e.pupil_validity;
    out[side + "_gaze_origin_in_user_coordinate_system"] = e.gaze_origin_in_user_coordinate_system;
    out[side + "_gaze_origin_in_trackbox_coordinate_system"] =
        e.gaze_origin_in_trackbox_coordinate_system;
}

EyeSample parse_eye(const json& j, const std::string& side) {
    EyeSample e;
    const auto at = [&](const char* name) -> const json& {
        const auto it = j.find(side + name);
        if (it == j.end()) throw FormatError("tracker_sample missing '" + side + name + "'");
        return *it;
    };
    e.gaze_point_on_display_area = read_array<2>(at("_gaze_point_on_display_area"));
    e.gaze_point_in_user_coordinate_system = read_array<3>(at("_gaze_point_in_user_coordinate_system"));
    e.gaze_point_validity = at("_gaze_point_validity").get<int>();
    e.pupil_diameter = number_or_nan(at("_pupil_diameter"));
    e.pupil_validity = at("_pupil_validity").get<int>();
    e.gaze_origin_in_user_coordinate_system =
        read_array<3>(at("_gaze_origin_in_user_coordinate_system"));
    e.gaze_origin_in_trackbox_coordinate_system =
        read_array<3>(at("_gaze_origin_in_trackbox_coordinate_system"));
    return e;
}

ojson emit_tracker(const GazeSample& g) {
    ojson out = ojson::object();
    out["device_time_stamp"] = g.device_time_stamp;
    out["system_time_stamp"] = g.system_time_stamp;
    emit_eye(out, "left", g.left);
    emit_eye(out, "right", g.right);
    append_extras(out, g.extras);
    return out;
}

GazeSample parse_tracker(const json& j) {
    GazeSample g;
    g.device_time_stamp = field<std::int64_t>(j, "device_time_stamp");
    g.system_time_stamp = field<std::int64_t>(j, "system_time_stamp");
    g.left = parse_eye(j, "left");
    g.right = parse_eye(j, "right");
    std::set<std::string> known{"device_time_stamp", "system_time_stamp"};
    for (const char* f : kEyeFields) {
        known.insert(std::string("left_") + f);
        known.insert(std::string("right_") + f);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) g.extras[it.key()] = it.value();
    }
    return g;
}

// ---- display_sample --------------------------------------------------------

ojson emit_display(const DisplaySample& d) {
    ojson out = ojson::object();
    out["slice_number"] = d.slice_number;
    out["modality"] = std::string(to_string(d.modality));
    out["norm_min"] = d.norm_min;
    out["norm_max"] = d.norm_max;
    out["window_x"] = d.window_x;
    out["window_y"] = d.window_y;
    out["window_width"] = d.window_width;
    out["window_height"] = d.window_height;
    out["monitor_width"] = d.monitor_width;
    out["monitor_height"] = d.monitor_height;
    out["ct_window"] = d.ct_window;
    append_extras(out, d.extras);
    return out;
}

DisplaySample parse_display(const json& j) {
    DisplaySample d;
    d.slice_number = field<int>(j, "slice_number");
    d.modality = view_modality_from_string(field<std::string>(j, "modality"));
    d.norm_min = field<double>(j, "norm_min");
    d.norm_max = field<double>(j, "norm_max");
    d.window_x = field<int>(j, "window_x");
    d.window_y = field<int>(j, "window_y");
    d.window_width = field<int>(j, "window_width");
    d.window_height = field<int>(j, "window_height");
    d.monitor_width = field<int>(j, "monitor_width");
    d.monitor_height = field<int>(j, "monitor_height");
    d.ct_window = field<int>(j, "ct_window");
    d.extras = take_extras(j, {"slice_number", "modality", "norm_min", "norm_max", "window_x",
                               "window_y", "window_width", "window_height", "monitor_width",
                               "monitor_height", "ct_window"});
    return d;
}

// ---- lesions ---------------------------------------------------------------

std::array<int, 4> xywh(const Bbox& b) { return {b.x, b.y, b.w, b.h}; }

Bbox bbox_from(const json& j) {
    const auto v = j.get<std::array<int, 4>>();
    return Bbox{v[0], v[1], v[2], v[3]};
}

std::array<double, 2> gaze_to_display(const Point2& p, const DisplaySample& d) {
    return {p.x * d.window_width / 512.0, p.y * d.window_height / 512.0};
}

Bbox read_box(const json& j, const char* display_key, const char* canonical_key,
              const DisplaySample& d) {
    if (const auto it = j.find(canonical_key); it != j.end()) return bbox_from(*it);
    return box_from_display(bbox_from(j.at(display_key)), d);
}

Point2 read_select_gaze(const json& j, const DisplaySample& d) {
    if (const auto it = j.find("select_gaze_512"); it != j.end()) {
        const auto v = read_array<2>(*it);
        return {v[0], v[1]};
    }
    const auto v = read_array<2>(j.at("select_gaze"));
    return {v[0] * 512.0 / d.window_width, v[1] * 512.0 / d.window_height};
}

ojson emit_lesion(const LesionAnnotation& l) {
    const DisplaySample& d = l.selection.display;
    ojson out = ojson::object();
    out["lesion_id"] = l.lesion_id;
    out["certainty"] = std::string(to_string(l.certainty));
    out["select_time_stamp"] = l.selection.time_stamp;
    out["accept_time_stamp"] = l.accept_time_stamp;
    out["select_gaze"] = gaze_to_display(l.selection.gaze, d);
    out["select_gaze_512"] = std::array<double, 2>{l.selection.gaze.x, l.selection.gaze.y};
    out["root_slice"] = l.root_slice;
    out["root_bbox"] = xywh(box_to_display(l.root_box().box, d));
    out["root_bbox_512"] = xywh(l.root_box().box);
    out["threshold"] = l.suv_threshold;
    out["display_sample"] = emit_display(d);
    ojson slices = ojson::array();
    for (const auto& [z, sb] : l.slice_boxes) {
        ojson s = ojson::object();
        s["slice_number"] = z;
        s["bbox"] = xywh(box_to_display(sb.box, d));
        s["bbox_512"] = xywh(sb.box);
        s["status"] = std::string(to_string(sb.status));
        s["threshold"] = sb.threshold;
        slices.push_back(std::move(s));
    }
    out["slices"] = std::move(slices);
    append_extras(out, l.extras);
    return out;
}

LesionAnnotation parse_lesion(const json& j) {
    LesionAnnotation l;
    l.lesion_id = field<int>(j, "lesion_id");
    l.certainty = certainty_from_string(field<std::string>(j, "certainty"));
    l.selection.time_stamp = field<std::int64_t>(j, "select_time_stamp");
    l.accept_time_stamp = j.value("accept_time_stamp", std::int64_t{0});
    l.selection.display = parse_display(j.at("display_sample"));
    l.selection.gaze = read_select_gaze(j, l.selection.display);
    l.root_slice = field<int>(j, "root_slice");
    l.suv_threshold = field<double>(j, "threshold");
    for (const auto& s : j.at("slices")) {
        const int z = field<int>(s, "slice_number");
        SliceBox sb{read_box(s, "bbox", "bbox_512", l.selection.display),
                    box_status_from_string(field<std::string>(s, "status")),
                    s.value("threshold", l.suv_threshold)};
        if (!l.slice_boxes.emplace(z, sb).second) {
            throw FormatError("lesion " + std::to_string(l.lesion_id) + " repeats slice " +
                              std::to_string(z));
        }
    }
    if (!l.slice_boxes.count(l.root_slice)) {
        throw FormatError("lesion " + std::to_string(l.lesion_id) + " lacks its root slice");
    }
    l.extras = take_extras(j, {"lesion_id", "certainty", "select_time_stamp", "accept_time_stamp",
                               "select_gaze", "select_gaze_512", "root_slice", "root_bbox",
                               "root_bbox_512", "threshold", "display_sample", "slices"});
    return l;
}

ojson emit_rejected(const RejectedBox& r) {
    const DisplaySample& d = r.selection.display;
    ojson out = ojson::object();
    out["slice_number"] = r.slice_number;
    out["bbox"] = xywh(box_to_display(r.box, d));
    out["bbox_512"] = xywh(r.box);
    out["threshold"] = r.threshold;
    out["certainty"] = std::string(to_string(r.certainty));
    out["root_slice"] = r.root_slice;
    out["select_time_stamp"] = r.selection.time_stamp;
    out["reject_time_stamp"] = r.reject_time_stamp;
    out["select_gaze"] = gaze_to_display(r.selection.gaze, d);
    out["select_gaze_512"] = std::array<double, 2>{r.selection.gaze.x, r.selection.gaze.y};
    out["display_sample"] = emit_display(d);
    append_extras(out, r.extras);
    return out;
}

RejectedBox parse_rejected(const json& j) {
    RejectedBox r;
    r.slice_number = field<int>(j, "slice_number");
    r.selection.display = parse_display(j.at("display_sample"));
    r.box = read_box(j, "bbox", "bbox_512", r.selection.display);
    r.threshold = field<double>(j, "threshold");
    r.certainty = certainty_from_string(field<std::string>(j, "certainty"));
    r.root_slice = j.value("root_slice", r.slice_number);
    r.selection.time_stamp = field<std::int64_t>(j, "select_time_stamp");
    r.reject_time_stamp = j.value("reject_time_stamp", std::int64_t{0});
    r.selection.gaze = read_select_gaze(j, r.selection.display);
    r.extras = take_extras(j, {"slice_number", "bbox", "bbox_512", "threshold", "certainty",
                               "root_slice", "select_time_stamp", "reject_time_stamp",
                               "select_gaze", "select_gaze_512", "display_sample"});
    return r;
}

json parse_json_document(const std::string& text, const char* name) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string(name) + ": " + e.what());
    }
}

}  // namespace

nlohmann::json tracker_sample_to_json(const GazeSample& g) {
    return json::parse(emit_tracker(g).dump());
}

GazeSample tracker_sample_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw FormatError("tracker_sample must be an object");
    return parse_tracker(j);
}

bool operator==(const EyeSample& a, const EyeSample& b) {
    return same_array(a.gaze_point_on_display_area, b.gaze_point_on_display_area) &&
           same_array(a.gaze_point_in_user_coordinate_system,
                      b.gaze_point_in_user_coordinate_system) &&
           a.gaze_point_validity == b.gaze_point_validity &&
           same_number(a.pupil_diameter, b.pupil_diameter) &&
           a.pupil_validity == b.pupil_validity &&
           same_array(a.gaze_origin_in_user_coordinate_system,
                      b.gaze_origin_in_user_coordinate_system) &&
           same_array(a.gaze_origin_in_trackbox_coordinate_system,
                      b.gaze_origin_in_trackbox_coordinate_system);
}

void SessionRecording::check_integrity() const {
    if (tobii_cam.size() != common_cam.size() || tobii_cam.size() != pauses.size()) {
        throw IntegrityError("synced lists differ in length: tobii_cam=" +
                             std::to_string(tobii_cam.size()) +
                             " common_cam=" + std::to_string(common_cam.size()) +
                             " pauses=" + std::to_string(pauses.size()));
    }
    for (std::size_t i = 0; i < tobii_cam.size(); ++i) {
        const auto& g = tobii_cam[i];
        for (const EyeSample* e : {&g.left, &g.right}) {
            if ((e->gaze_point_validity != 0 && e->gaze_point_validity != 1) ||
                (e->pupil_validity != 0 && e->pupil_validity != 1)) {
                throw IntegrityError("validity flag outside {0,1} at tick " + std::to_string(i));
            }
        }
        if (i > 0 && g.system_time_stamp < tobii_cam[i - 1].system_time_stamp) {
            throw IntegrityError("gaze timestamps decrease at tick " + std::to_string(i));
        }
    }
    for (std::size_t i = 1; i < key_events.size(); ++i) {
        if (key_events[i].system_time_stamp < key_events[i - 1].system_time_stamp) {
            throw IntegrityError("key timestamps decrease at event " + std::to_string(i));
        }
    }
}

void SessionRecorder::ingest_tick(const GazeSample& gaze, const DisplaySample& display,
                                  bool paused) {
    if (!open_) throw StateError("session is closed");
    auto& r = recording_;
    if (!r.tobii_cam.empty() && gaze.system_time_stamp < r.tobii_cam.back().system_time_stamp) {
        throw StateError("gaze timestamp goes backwards");
    }
    // Reserve first so the three appends cannot fail halfway.
    const auto grow = [](auto& v) {
        if (v.size() == v.capacity()) v.reserve(std::max<std::size_t>(64, v.size() * 2));
    };
    grow(r.tobii_cam);
    grow(r.common_cam);
    grow(r.pauses);
    r.tobii_cam.push_back(gaze);
    r.common_cam.push_back(display);
    r.pauses.push_back(paused);
    if (r.tobii_cam.back().extras.is_null()) r.tobii_cam.back().extras = json::object();
    if (r.common_cam.back().extras.is_null()) r.common_cam.back().extras = json::object();
}

void SessionRecorder::record_key(const KeyEvent& key) {
    if (!open_) throw StateError("session is closed");
    auto& keys = recording_.key_events;
    if (!keys.empty() && key.system_time_stamp < keys.back().system_time_stamp) {
        throw StateError("key timestamp goes backwards");
    }
    keys.push_back(key);
    if (keys.back().extras.is_null()) keys.back().extras = json::object();
}

std::string emit_gaze_json(const SessionRecording& rec) {
    ojson out = ojson::object();
    ojson tobii = ojson::array();
    for (const auto& g : rec.tobii_cam) tobii.push_back(emit_tracker(g));
    ojson common = ojson::array();
    for (const auto& d : rec.common_cam) common.push_back(emit_display(d));
    ojson pauses = ojson::array();
    for (bool p : rec.pauses) pauses.push_back(p);
    out["tobii_cam"] = std::move(tobii);
    out["common_cam"] = std::move(common);
    out["pauses"] = std::move(pauses);
    out["monitor_width"] = rec.header.monitor_width;
    out["monitor_height"] = rec.header.monitor_height;
    out["display_window_dim"] = rec.header.display_window_dim;
    out["case_difficulty"] = rec.header.case_difficulty;
    out["ui_experience"] = rec.header.ui_experience;
    out["comment"] = rec.header.comment;
    append_extras(out, rec.gaze_extras);
    return out.dump() + "\n";
}

std::string emit_lesion_json(const SessionRecording& rec) {
    ojson out = ojson::object();
    out["display_window_dim"] = rec.header.display_window_dim;
    ojson lesions = ojson::array();
    for (const auto& l : rec.lesions) lesions.push_back(emit_lesion(l));
    ojson rejected = ojson::array();
    for (const auto& r : rec.rejected) rejected.push_back(emit_rejected(r));
    out["lesions"] = std::move(lesions);
    out["rejected"] = std::move(rejected);
    append_extras(out, rec.lesion_extras);
    return out.dump(1) + "\n";
}

std::string emit_key_json(const SessionRecording& rec) {
    ojson out = ojson::object();
    ojson events = ojson::array();
    for (const auto& k : rec.key_events) {
        ojson e = ojson::object();
        e["system_time_stamp"] = k.system_time_stamp;
        e["key_code"] = k.key_code;
        append_extras(e, k.extras);
        events.push_back(std::move(e));
    }
    out["key_press_events"] = std::move(events);
    append_extras(out, rec.key_extras);
    return out.dump(1) + "\n";
}

void emit_session(const SessionRecording& rec, const fs::path& out_dir) {
    rec.check_integrity();
    write_file_atomic(out_dir / kGazeFile, emit_gaze_json(rec));
    write_file_atomic(out_dir / kLesionFile, emit_lesion_json(rec));
    write_file_atomic(out_dir / kKeyFile, emit_key_json(rec));
}

SessionRecording parse_session_documents(const std::string& gaze_text,
                                         const std::string& lesion_text,
                                         const std::string& key_text) {
    SessionRecording rec;
    const json gaze = parse_json_document(gaze_text, kGazeFile);
    const json lesions = parse_json_document(lesion_text, kLesionFile);
    const json keys = parse_json_document(key_text, kKeyFile);

    try {
        for (const auto& t : gaze.at("tobii_cam")) rec.tobii_cam.push_back(parse_tracker(t));
        for (const auto& d : gaze.at("common_cam")) rec.common_cam.push_back(parse_display(d));
        for (const auto& p : gaze.at("pauses")) rec.pauses.push_back(p.get<bool>());
        rec.header.monitor_width = field<int>(gaze, "monitor_width");
        rec.header.monitor_height = field<int>(gaze, "monitor_height");
        rec.header.display_window_dim = field<std::array<int, 2>>(gaze, "display_window_dim");
        rec.header.case_difficulty = gaze.value("case_difficulty", 0);
        rec.header.ui_experience = gaze.value("ui_experience", 0);
        rec.header.comment = gaze.value("comment", std::string());
        rec.gaze_extras = take_extras(gaze, {"tobii_cam", "common_cam", "pauses", "monitor_width",
                                             "monitor_height", "display_window_dim",
                                             "case_difficulty", "ui_experience", "comment"});

        for (const auto& l : lesions.at("lesions")) rec.lesions.push_back(parse_lesion(l));
        if (const auto it = lesions.find("rejected"); it != lesions.end()) {
            for (const auto& r : *it) rec.rejected.push_back(parse_rejected(r));
        }
        rec.lesion_extras = take_extras(lesions, {"display_window_dim", "lesions", "rejected"});

        for (const auto& k : keys.at("key_press_events")) {
            rec.key_events.push_back(KeyEvent{field<std::int64_t>(k, "system_time_stamp"),
                                              field<int>(k, "key_code"),
                                              take_extras(k, {"system_time_stamp", "key_code"})});
        }
        rec.key_extras = take_extras(keys, {"key_press_events"});
    } catch (const json::exception& e) {
        throw FormatError(std::string("session schema: ") + e.what());
    }
    rec.check_integrity();
    return rec;
}

SessionRecording parse_session(const fs::path& dir) {
    for (const char* name : {kGazeFile, kLesionFile, kKeyFile}) {
        if (!fs::exists(dir / name)) throw IoError("missing " + (dir / name).string());
    }
    return parse_session_documents(read_file(dir / kGazeFile), read_file(dir / kLesionFile),
                                   read_file(dir / kKeyFile));
}

std::optional<Point2> gaze_monitor_point(const GazeSample& gaze, const DisplaySample& display) {
    double sx = 0, sy = 0;
    int n = 0;
    for (const EyeSample* e : {&gaze.left, &gaze.right}) {
        if (!e->valid()) continue;
        const auto& p = e->gaze_point_on_display_area;
        if (std::isnan(p[0]) || std::isnan(p[1])) continue;
        sx += p[0];
        sy += p[1];
        ++n;
    }
    if (n == 0) return std::nullopt;
    return Point2{sx / n * display.monitor_width, sy / n * display.monitor_height};
}

std::optional<Point2> map_gaze_to_image(const GazeSample& gaze, const DisplaySample& display) {
    const auto m = gaze_monitor_point(gaze, display);
    if (!m) return std::nullopt;
    const double x = (m->x - display.window_x) / display.window_width * 512.0;
    const double y = (m->y - display.window_y) / display.window_height * 512.0;
    if (!(x >= 0.0 && x < 512.0 && y >= 0.0 && y < 512.0)) return std::nullopt;
    return Point2{x, y};
}

std::optional<std::array<double, 3>> gaze_origin(const GazeSample& gaze) {
    std::array<double, 3> sum{};
    int n = 0;
    for (const EyeSample* e : {&gaze.left, &gaze.right}) {
        if (!e->valid()) continue;
        const auto& o = e->gaze_origin_in_user_coordinate_system;
        if (std::isnan(o[0]) || std::isnan(o[1]) || std::isnan(o[2])) continue;
        for (int i = 0; i < 3; ++i) sum[i] += o[i];
        ++n;
    }
    if (n == 0) return std::nullopt;
    for (double& v : sum) v /= n;
    return sum;
}

Point2 image_to_monitor(const Point2& p, const DisplaySample& d) {
    return {d.window_x + p.x / 512.0 * d.window_width, d.window_y + p.y / 512.0 * d.window_height};
}

Bbox box_to_display(const Bbox& b, const DisplaySample& d) {
    const double kx = d.window_width / 512.0, ky = d.window_height / 512.0;
    return Bbox{static_cast<int>(std::lround(b.x * kx)), static_cast<int>(std::lround(b.y * ky)),
                std::max(1, static_cast<int>(std::lround(b.w * kx))),
                std::max(1, static_cast<int>(std::lround(b.h * ky)))};
}

Bbox box_from_display(const Bbox& b, const DisplaySample& d) {
    const double kx = 512.0 / d.window_width, ky = 512.0 / d.window_height;
    return Bbox{static_cast<int>(std::lround(b.x * kx)), static_cast<int>(std::lround(b.y * ky)),
                std::max(1, static_cast<int>(std::lround(b.w * kx))),
                std::max(1, static_cast<int>(std::lround(b.h * ky)))};
}

}  // namespace gazepet
