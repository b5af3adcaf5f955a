#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gazepet/geometry.hpp"
#include "gazepet/session_driver.hpp"

namespace gazepet::gateway {

inline constexpr const char* kDataRootEnv = "GAZEPET_DATA_ROOT";

struct GatewayConfig {
    std::filesystem::path data_root = ".";  // studies: <data_root>/<study_path>/{SUV,CTres}.nii.gz
    std::filesystem::path output_root;      // empty: <data_root>/sessions
    std::filesystem::path static_dir;       // empty: no static files
    std::string host = "127.0.0.1";
    int port = 8765;
    ViewingGeometry geometry;
    DriverOptions driver;  // key table, policy knobs, contrast steps
    ViewState view;        // initial window placement
    std::int64_t flush_watermark_us = 1000000;
    std::size_t max_frame_bytes = 16u << 20;

    std::filesystem::path session_root() const {
        return output_root.empty() ? data_root / "sessions" : output_root;
    }
};

// Fields not present keep their defaults. Policy knobs live under "policy":
// filter_iou, resize_factor, suv_hotspot_floor, max_propagation. "keys" is a
// KeyTable remap document. Throws FormatError / InvalidArgument.
GatewayConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const GatewayConfig& c);

// Reads the file when given; a data_root absent from the file comes from
// GAZEPET_DATA_ROOT when that is set.
GatewayConfig load_config(const std::filesystem::path& path = {});

}  // namespace gazepet::gateway
