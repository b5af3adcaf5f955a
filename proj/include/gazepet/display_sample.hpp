#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gazepet {

enum class ViewModality { PET, CT, Fused, MIP };

std::string_view to_string(ViewModality m);
// Accepts the emitted names ("PET", "CT", "fused", "MIP"); throws FormatError.
ViewModality view_modality_from_string(std::string_view s);

inline bool is_axial(ViewModality m) { return m != ViewModality::MIP; }

// Display state captured with every gaze tick. In MIP mode slice_number holds
// the MIP angle index (0..11). norm_min/norm_max are always the PET SUV
// window; the CT window comes from ct_window (preset 1..9).
struct DisplaySample {
    int slice_number = 0;
    ViewModality modality = ViewModality::PET;
    double norm_min = 0.0;
    double norm_max = 6.0;
    int window_x = 0;
    int window_y = 0;
    int window_width = 512;
    int window_height = 512;
    int monitor_width = 2560;
    int monitor_height = 1440;
    int ct_window = 2;

    nlohmann::json extras = nlohmann::json::object();  // unknown fields, preserved

    void validate() const;
    friend bool operator==(const DisplaySample&, const DisplaySample&) = default;
};

}  // namespace gazepet
