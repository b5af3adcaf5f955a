#include "gazepet/heatmap.hpp"

#include <cmath>
#include <numeric>

#include "gazepet/error.hpp"

namespace gazepet {
namespace {

int round_index(double v, int n) {
    const auto i = static_cast<long>(std::floor(v + 0.5));
    return static_cast<int>(std::clamp<long>(i, 0, n - 1));
}

}  // namespace

std::int64_t GazeHeatmap::total() const {
    return std::accumulate(counts.labels.begin(), counts.labels.end(), std::int64_t{0});
}

GazeHeatmap build_heatmap(const SessionRecording& rec, const Dims& dims, const Spacing& spacing) {
    rec.check_integrity();
    GazeHeatmap h;
    h.counts = LabelVolume(dims, spacing);
    h.mip_view = LabelVolume(Dims{512, 512, kMipAngles}, Spacing{1.0, 1.0, 1.0});
    auto& r = h.report;
    r.ticks = rec.tobii_cam.size();
    for (std::size_t i = 0; i < rec.tobii_cam.size(); ++i) {
        const DisplaySample& d = rec.common_cam[i];
        const auto p = map_gaze_to_image(rec.tobii_cam[i], d);
        if (!p) {
            ++r.no_gaze;
            continue;
        }
        if (d.modality == ViewModality::MIP) {
            ++r.mip_ticks;
            const int angle = ((d.slice_number % kMipAngles) + kMipAngles) % kMipAngles;
            ++h.mip_view.at(round_index(p->x, 512), round_index(p->y, 512), angle);
            continue;
        }
        if (d.slice_number < 0 || d.slice_number >= dims.nz) {
            ++r.slice_out_of_range;
            continue;
        }
        const int x = round_index(p->x * dims.nx / 512.0, dims.nx);
        const int y = round_index(p->y * dims.ny / 512.0, dims.ny);
        ++h.counts.at(x, y, d.slice_number);
        ++r.contributed;
    }
    return h;
}

MipStack heatmap_mip(const GazeHeatmap& heatmap) {
    return mip_stack(heatmap.counts.to_scalar(ModalityKind::PET_SUV));
}

std::string derived_volume_name(const std::string& kind, const std::string& role) {
    if (role != "trainee" && role != "experienced") {
        throw InvalidArgument("reader role must be 'trainee' or 'experienced', got '" + role + "'");
    }
    return kind + "_" + role + ".nii.gz";
}

}  // namespace gazepet
