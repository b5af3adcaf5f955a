#include "gazepet/gateway/config.hpp"

#include <cstdlib>

#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"

namespace gazepet::gateway {

using nlohmann::json;

GatewayConfig config_from_json(const json& j) {
    if (!j.is_object()) throw FormatError("gateway config must be a JSON object");
    GatewayConfig c;
    try {
        if (j.contains("data_root")) c.data_root = j["data_root"].get<std::string>();
        if (j.contains("output_root")) c.output_root = j["output_root"].get<std::string>();
        if (j.contains("static_dir")) c.static_dir = j["static_dir"].get<std::string>();
        c.host = j.value("host", c.host);
        c.port = j.value("port", c.port);
        if (j.contains("geometry")) c.geometry = j["geometry"].get<ViewingGeometry>();
        if (j.contains("keys")) c.driver.keys = KeyTable::from_json(j["keys"]);
        if (j.contains("policy")) {
            const auto& p = j["policy"];
            auto& pol = c.driver.policy;
            pol.filter_iou = p.value("filter_iou", pol.filter_iou);
            pol.resize_factor = p.value("resize_factor", pol.resize_factor);
            pol.min_threshold = p.value("suv_hotspot_floor", pol.min_threshold);
            pol.max_propagation = p.value("max_propagation", pol.max_propagation);
        }
        c.driver.contrast_factor = j.value("contrast_factor", c.driver.contrast_factor);
        c.driver.liver_max = j.value("liver_max", c.driver.liver_max);
        c.driver.brain_max = j.value("brain_max", c.driver.brain_max);
        c.driver.start_paused = j.value("start_paused", c.driver.start_paused);
        if (j.contains("window")) {
            const auto& w = j["window"];
            c.view.window_x = w.value("x", c.view.window_x);
            c.view.window_y = w.value("y", c.view.window_y);
            c.view.window_width = w.value("width", c.view.window_width);
            c.view.window_height = w.value("height", c.view.window_height);
        }
        c.view.monitor_width = c.geometry.monitor_width_px;
        c.view.monitor_height = c.geometry.monitor_height_px;
        if (j.contains("flush_watermark_ms")) {
            c.flush_watermark_us = static_cast<std::int64_t>(j["flush_watermark_ms"].get<double>() * 1000);
        }
    } catch (const json::exception& e) {
        throw FormatError(std::string("gateway config: ") + e.what());
    }
    const auto& pol = c.driver.policy;
    if (!(pol.filter_iou >= 0 && pol.filter_iou <= 1)) throw InvalidArgument("policy.filter_iou must be in [0,1]");
    if (!(pol.resize_factor > 0 && pol.resize_factor < 1)) throw InvalidArgument("policy.resize_factor must be in (0,1)");
    if (!(pol.min_threshold > 0)) throw InvalidArgument("policy.suv_hotspot_floor must be positive");
    if (c.port < 0 || c.port > 65535) throw InvalidArgument("port out of range");
    if (c.view.window_width <= 0 || c.view.window_height <= 0) throw InvalidArgument("window size must be positive");
    return c;
}

json config_to_json(const GatewayConfig& c) {
    return {{"data_root", c.data_root.string()},
            {"output_root", c.session_root().string()},
            {"static_dir", c.static_dir.string()},
            {"host", c.host},
            {"port", c.port},
            {"geometry", c.geometry},
            {"keys", c.driver.keys.to_json()},
            {"policy",
             {{"filter_iou", c.driver.policy.filter_iou},
              {"resize_factor", c.driver.policy.resize_factor},
              {"suv_hotspot_floor", c.driver.policy.min_threshold},
              {"max_propagation", c.driver.policy.max_propagation}}},
            {"window",
             {{"x", c.view.window_x},
              {"y", c.view.window_y},
              {"width", c.view.window_width},
              {"height", c.view.window_height}}},
            {"flush_watermark_ms", static_cast<double>(c.flush_watermark_us) / 1000}};
}

GatewayConfig load_config(const std::filesystem::path& path) {
    json j = json::object();
    if (!path.empty()) {
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw FormatError(path.string() + ": " + e.what());
        }
    }
    auto c = config_from_json(j);
    if (!j.contains("data_root")) {
        if (const char* env = std::getenv(kDataRootEnv); env && *env) c.data_root = env;
    }
    return c;
}

}  // namespace gazepet::gateway
