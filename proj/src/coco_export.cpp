#include "gazepet/coco_export.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"
#include "gazepet/session.hpp"

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace gazepet {
namespace {

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(line);
    }
    return out;
}

void check_cell(const std::string& s, const char* what) {
    if (s.find_first_of(",\n\r\"") != std::string::npos) {
        throw ExportError(std::string(what) + " '" + s + "' contains a CSV delimiter");
    }
}

std::string read_id(const StudyRead& r) { return r.observer_id + "/" + r.study_path; }

}  // namespace

std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

std::array<std::size_t, 3> split_sizes(std::size_t n) {
    const std::size_t val = n / 10, test = n / 10;
    return {n - val - test, val, test};
}

std::string metadata_csv(const std::vector<StudyRead>& reads) {
    std::string out = "observer_id,reader_role,study_path,session_dir\n";
    for (const auto& r : reads) {
        check_cell(r.observer_id, "observer id");
        check_cell(r.study_path, "study path");
        check_cell(r.session_dir.generic_string(), "session dir");
        out += r.observer_id + "," + r.reader_role + "," + r.study_path + "," +
               r.session_dir.generic_string() + "\n";
    }
    return out;
}

std::vector<StudyRead> read_metadata_csv(const fs::path& path) {
    const auto lines = lines_of(read_file(path));
    if (lines.empty() || lines[0] != "observer_id,reader_role,study_path,session_dir") {
        throw FormatError(path.string() + ": unexpected metadata header");
    }
    std::vector<StudyRead> out;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto cells = split_csv_line(lines[i]);
        if (cells.size() != 4) {
            throw FormatError(path.string() + ":" + std::to_string(i + 1) + ": expected 4 columns");
        }
        fs::path dir = cells[3];
        if (dir.is_relative()) dir = path.parent_path() / dir;
        out.push_back(StudyRead{cells[0], cells[1], cells[2], dir});
    }
    return out;
}

ExportSummary export_coco(const std::vector<StudyRead>& reads_in, const fs::path& out_dir,
                          const ExportOptions& options) {
    std::vector<StudyRead> reads = reads_in;
    std::sort(reads.begin(), reads.end(), [](const StudyRead& a, const StudyRead& b) {
        return std::tie(a.study_path, a.observer_id) < std::tie(b.study_path, b.observer_id);
    });

    std::vector<std::string> missing;
    std::set<std::string> study_set;
    std::set<std::string> ids;
    for (const auto& r : reads) {
        check_cell(read_id(r), "study read id");
        if (!ids.insert(read_id(r)).second) {
            throw ExportError("study read listed twice: " + read_id(r));
        }
        study_set.insert(r.study_path);
        for (const char* f : {"SUV.nii.gz", "CTres.nii.gz"}) {
            const fs::path p = options.data_root / r.study_path / f;
            if (!fs::exists(p)) missing.push_back(p.string());
        }
    }
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        std::string msg = "missing study volumes:";
        for (const auto& m : missing) msg += "\n  " + m;
        throw ExportError(msg);
    }

    const std::vector<std::string> studies(study_set.begin(), study_set.end());
    const auto perm = seeded_permutation(studies.size(), options.seed);
    const auto sizes = split_sizes(studies.size());
    std::map<std::string, std::string> split_of;
    ExportSummary summary;
    {
        std::size_t k = 0;
        for (std::size_t s = 0; s < kSplits.size(); ++s) {
            auto& list = summary.split_studies[kSplits[s]];
            for (std::size_t i = 0; i < sizes[s]; ++i, ++k) {
                list.push_back(studies[perm[k]]);
                split_of[studies[perm[k]]] = kSplits[s];
            }
            std::sort(list.begin(), list.end());
        }
    }

    fs::create_directories(out_dir);
    std::int64_t next_lesion = 1, next_slice = 1;
    for (const char* split : kSplits) {
        ojson doc = ojson::object();
        doc["info"] = {{"split", split}, {"seed", options.seed}, {"bbox_space", "512px"}};
        ojson study_reads = ojson::array(), lesions = ojson::array(), slices = ojson::array();
        std::string csv = std::string(kGazeCsvHeader) + "\n";

        for (const auto& r : reads) {
            if (split_of.at(r.study_path) != split) continue;
            const SessionRecording rec = parse_session(r.session_dir);
            const std::string rid = read_id(r);
            study_reads.push_back({{"id", rid},
                                   {"observer_id", r.observer_id},
                                   {"reader_role", r.reader_role},
                                   {"study_path", r.study_path},
                                   {"gaze_file", kGazeFile},
                                   {"lesion_file", kLesionFile},
                                   {"key_file", kKeyFile},
                                   {"case_difficulty", rec.header.case_difficulty},
                                   {"ui_experience", rec.header.ui_experience}});
            ++summary.reads;

            struct SliceRef {
                std::int64_t id;
                int z;
                Bbox box;
            };
            std::vector<SliceRef> read_slices;
            for (const auto& l : rec.lesions) {
                const std::int64_t lid = next_lesion++;
                ojson slice_ids = ojson::array();
                for (const auto& [z, sb] : l.slice_boxes) {
                    const std::int64_t sid = next_slice++;
                    slice_ids.push_back(sid);
                    read_slices.push_back({sid, z, sb.box});
                    slices.push_back({{"id", sid},
                                      {"lesion_ref", lid},
                                      {"study_read_id", rid},
                                      {"slice_number", z},
                                      {"bbox", {sb.box.x, sb.box.y, sb.box.w, sb.box.h}},
                                      {"area", sb.box.area()},
                                      {"status", std::string(to_string(sb.status))},
                                      {"threshold", sb.threshold},
                                      {"category_id", 1}});
                    ++summary.slices;
                }
                lesions.push_back({{"id", lid},
                                   {"study_read_id", rid},
                                   {"lesion_id", l.lesion_id},
                                   {"certainty", std::string(to_string(l.certainty))},
                                   {"root_slice", l.root_slice},
                                   {"threshold", l.suv_threshold},
                                   {"select_time_stamp", l.selection.time_stamp},
                                   {"accept_time_stamp", l.accept_time_stamp},
                                   {"slice_ids", slice_ids},
                                   {"category_id", 1}});
                ++summary.lesions;
            }

            for (std::size_t i = 0; i < rec.tobii_cam.size(); ++i) {
                const DisplaySample& d = rec.common_cam[i];
                if (!is_axial(d.modality)) continue;
                const auto p = map_gaze_to_image(rec.tobii_cam[i], d);
                if (!p) continue;
                const int px = static_cast<int>(std::floor(p->x + 0.5));
                const int py = static_cast<int>(std::floor(p->y + 0.5));
                csv += rid + "," + std::to_string(d.slice_number) + "," +
                       std::to_string(rec.tobii_cam[i].system_time_stamp) + "," + fmt(p->x) + "," +
                       fmt(p->y) + ",";
                const auto hit = std::find_if(read_slices.begin(), read_slices.end(),
                                              [&](const SliceRef& s) {
                                                  return s.z == d.slice_number &&
                                                         s.box.contains(px, py);
                                              });
                if (hit != read_slices.end()) {
                    csv += std::to_string(hit->id) + "," + std::to_string(hit->box.x) + "," +
                           std::to_string(hit->box.y) + "," + std::to_string(hit->box.w) + "," +
                           std::to_string(hit->box.h) + "\n";
                } else {
                    csv += ",,,,\n";
                }
                ++summary.gaze_rows;
            }
        }

        doc["study_reads"] = std::move(study_reads);
        doc["lesions"] = std::move(lesions);
        doc["slices"] = std::move(slices);
        doc["categories"] = ojson::array({{{"id", 1}, {"name", "lesion"}}});
        write_file_atomic(out_dir / ("coco_style_info_" + std::string(split) + ".json"),
                          doc.dump(1) + "\n");
        write_file_atomic(out_dir / ("gaze_data_" + std::string(split) + ".csv"), csv);
    }
    write_file_atomic(out_dir / "metadata.csv", metadata_csv(reads));
    return summary;
}

void validate_coco_export(const fs::path& dir) {
    const auto fail = [](const std::string& msg) { throw IntegrityError(msg); };
    std::map<std::string, std::string> study_split;
    std::set<std::string> all_reads;
    std::set<std::int64_t> all_lesions, all_slices;

    for (const char* split : kSplits) {
        const fs::path jpath = dir / ("coco_style_info_" + std::string(split) + ".json");
        const fs::path cpath = dir / ("gaze_data_" + std::string(split) + ".csv");
        if (!fs::exists(jpath) || !fs::exists(cpath)) fail("missing files for split " + std::string(split));
        json doc;
        try {
            doc = json::parse(read_file(jpath));
        } catch (const json::exception& e) {
            fail(jpath.string() + ": " + e.what());
        }
        for (const char* key : {"study_reads", "lesions", "slices", "categories"}) {
            if (!doc.contains(key) || !doc[key].is_array()) {
                fail(jpath.string() + ": missing array '" + key + "'");
            }
        }

        std::map<std::string, bool> reads;
        for (const auto& r : doc["study_reads"]) {
            const auto id = r.at("id").get<std::string>();
            if (!all_reads.insert(id).second) fail("study read id repeated: " + id);
            reads[id] = true;
            const auto study = r.at("study_path").get<std::string>();
            const auto [it, fresh] = study_split.emplace(study, split);
            if (!fresh && it->second != split) {
                fail("study " + study + " appears in splits " + it->second + " and " + split);
            }
        }

        struct SliceInfo {
            std::int64_t lesion;
            std::string read;
            int z;
            std::array<int, 4> box;
        };
        std::map<std::int64_t, SliceInfo> slices;
        for (const auto& s : doc["slices"]) {
            const auto id = s.at("id").get<std::int64_t>();
            if (!all_slices.insert(id).second) fail("slice id repeated: " + std::to_string(id));
            const auto box = s.at("bbox").get<std::array<int, 4>>();
            if (box[2] < 1 || box[3] < 1) fail("slice " + std::to_string(id) + " has an empty box");
            slices[id] = {s.at("lesion_ref").get<std::int64_t>(),
                          s.at("study_read_id").get<std::string>(), s.at("slice_number").get<int>(),
                          box};
            if (!reads.count(slices[id].read)) {
                fail("slice " + std::to_string(id) + " references unknown study read " +
                     slices[id].read);
            }
        }

        std::map<std::int64_t, std::string> lesion_read;
        for (const auto& l : doc["lesions"]) {
            const auto id = l.at("id").get<std::int64_t>();
            if (!all_lesions.insert(id).second) fail("lesion id repeated: " + std::to_string(id));
            const auto rid = l.at("study_read_id").get<std::string>();
            if (!reads.count(rid)) fail("lesion " + std::to_string(id) + " references unknown read " + rid);
            lesion_read[id] = rid;
            const auto& sids = l.at("slice_ids");
            if (sids.empty()) fail("lesion " + std::to_string(id) + " has no slice records");
            for (const auto& sid_j : sids) {
                const auto sid = sid_j.get<std::int64_t>();
                const auto it = slices.find(sid);
                if (it == slices.end() || it->second.lesion != id) {
                    fail("lesion " + std::to_string(id) + " lists slice " + std::to_string(sid) +
                         " which does not point back");
                }
            }
        }
        for (const auto& [sid, info] : slices) {
            const auto it = lesion_read.find(info.lesion);
            if (it == lesion_read.end()) {
                fail("slice " + std::to_string(sid) + " references unknown lesion");
            }
            if (it->second != info.read) fail("slice " + std::to_string(sid) + " read mismatch");
        }

        const auto lines = lines_of(read_file(cpath));
        if (lines.empty() || lines[0] != kGazeCsvHeader) fail(cpath.string() + ": bad header");
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i].empty()) continue;
            const auto c = split_csv_line(lines[i]);
            const std::string where = cpath.string() + ":" + std::to_string(i + 1);
            if (c.size() != 10) fail(where + ": expected 10 columns");
            if (!reads.count(c[0])) fail(where + ": unknown study read " + c[0]);
            if (c[5].empty()) continue;
            const auto it = slices.find(std::stoll(c[5]));
            if (it == slices.end()) fail(where + ": unknown slice record " + c[5]);
            const auto& s = it->second;
            if (s.read != c[0] || s.z != std::stoi(c[1]) || s.box[0] != std::stoi(c[6]) ||
                s.box[1] != std::stoi(c[7]) || s.box[2] != std::stoi(c[8]) ||
                s.box[3] != std::stoi(c[9])) {
                fail(where + ": row disagrees with slice record " + c[5]);
            }
        }
    }
}

}  // namespace gazepet
