#include "gazepet/pseudoseg.hpp"

#include <map>

#include "gazepet/components.hpp"
#include "gazepet/error.hpp"

namespace gazepet {

nlohmann::json PseudoSeg::report() const {
    nlohmann::json out;
    out["labels"] = nlohmann::json::array();
    for (std::size_t i = 0; i < label_to_lesion_id.size(); ++i) {
        out["labels"].push_back({{"label", i + 1}, {"lesion_id", label_to_lesion_id[i]}});
    }
    out["conflicts"] = nlohmann::json::array();
    for (const auto& c : conflicts) {
        out["conflicts"].push_back({{"slice_number", c.slice_number},
                                    {"winner_label", c.winner_label},
                                    {"overwritten_label", c.overwritten_label},
                                    {"voxels", c.voxels}});
    }
    out["warnings"] = warnings;
    out["labeled_voxels"] = mask.count_nonzero();
    return out;
}

PseudoSeg build_pseudo_seg(const std::vector<LesionAnnotation>& lesions, const ScalarVolume& pet) {
    PseudoSeg out;
    out.mask = LabelVolume(pet.dims(), pet.spacing());
    const Dims& d = pet.dims();
    const Bbox image{0, 0, d.nx, d.ny};

    for (std::size_t li = 0; li < lesions.size(); ++li) {
        const auto& lesion = lesions[li];
        const int label = static_cast<int>(li) + 1;
        out.label_to_lesion_id.push_back(lesion.lesion_id);
        for (const auto& [z, sb] : lesion.slice_boxes) {
            const std::string where =
                "lesion " + std::to_string(lesion.lesion_id) + ", slice " + std::to_string(z);
            if (z < 0 || z >= d.nz) {
                out.warnings.push_back(where + ": slice outside the volume");
                continue;
            }
            if (intersection_area(sb.box, image) != sb.box.area()) {
                throw BoundsError(where + ": box outside the image");
            }
            if (!(sb.threshold > 0)) {
                out.warnings.push_back(where + ": non-positive threshold");
                continue;
            }
            const auto labeling = label_components(pet.slice(z), sb.threshold);
            // The component with most pixels inside the box; stray specks are ignored.
            std::map<int, std::int64_t> inside;
            for (int y = sb.box.y; y < sb.box.y_end(); ++y) {
                for (int x = sb.box.x; x < sb.box.x_end(); ++x) {
                    if (const int l = labeling.at(x, y); l > 0) ++inside[l];
                }
            }
            if (inside.empty()) {
                out.warnings.push_back(where + ": no voxel at or above threshold " +
                                       std::to_string(sb.threshold));
                continue;
            }
            int best = 0;
            std::int64_t best_count = 0;
            for (const auto& [l, n] : inside) {
                if (n > best_count) {
                    best = l;
                    best_count = n;
                }
            }
            std::map<int, std::int64_t> overwritten;
            for (int y = sb.box.y; y < sb.box.y_end(); ++y) {
                for (int x = sb.box.x; x < sb.box.x_end(); ++x) {
                    if (labeling.at(x, y) != best) continue;
                    auto& v = out.mask.at(x, y, z);
                    if (v != 0 && v != label) ++overwritten[v];
                    v = label;
                }
            }
            for (const auto& [prev, n] : overwritten) {
                out.conflicts.push_back(SegConflict{z, label, prev, n});
            }
        }
    }
    return out;
}

}  // namespace gazepet
