#include "gazepet/display_sample.hpp"

#include "gazepet/error.hpp"

namespace gazepet {

std::string_view to_string(ViewModality m) {
    switch (m) {
        case ViewModality::PET: return "PET";
        case ViewModality::CT: return "CT";
        case ViewModality::Fused: return "fused";
        case ViewModality::MIP: return "MIP";
    }
    return "PET";
}

ViewModality view_modality_from_string(std::string_view s) {
    if (s == "PET") return ViewModality::PET;
    if (s == "CT") return ViewModality::CT;
    if (s == "fused") return ViewModality::Fused;
    if (s == "MIP") return ViewModality::MIP;
    throw FormatError("unknown modality '" + std::string(s) + "'");
}

void DisplaySample::validate() const {
    if (window_width <= 0 || window_height <= 0) {
        throw InvalidArgument("display window must have positive size");
    }
    if (window_x < 0 || window_y < 0 || window_x + window_width > monitor_width ||
        window_y + window_height > monitor_height) {
        throw InvalidArgument("display window must lie within the monitor");
    }
    if (!(norm_min < norm_max)) throw InvalidArgument("norm_min must be below norm_max");
}

}  // namespace gazepet
