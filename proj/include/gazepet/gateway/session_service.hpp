#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "gazepet/gateway/config.hpp"
#include "gazepet/gateway/protocol.hpp"
#include "gazepet/mip.hpp"
#include "gazepet/session_driver.hpp"

namespace gazepet::gateway {

struct Reply {
    std::vector<Message> messages;  // ack/error first, then pushes
    bool close = false;             // protocol violation: drop the connection
};

// One UI connection's command context. Not thread safe; the transport feeds
// it one frame at a time.
//
// Ordering: gaze ticks are buffered and only recorded once they are older
// than the newest buffered tick by the watermark, or when a key, view change
// or close needs them. A key stamped at t first records every buffered tick
// with a timestamp <= t, so batching on the wire does not change the result.
// Ticks or keys older than what was already recorded are refused.
class GatewaySession {
public:
    explicit GatewaySession(GatewayConfig config);
    ~GatewaySession();

    Reply handle_frame(std::string_view text);
    Reply handle(const Message& m);

    bool is_open() const { return driver_ != nullptr; }
    std::int64_t revision() const { return revision_; }
    const SessionDriver* driver() const { return driver_.get(); }
    std::size_t buffered_ticks() const { return buffer_.size(); }
    // Directory written by the last saved session, if any.
    const std::optional<std::filesystem::path>& saved_dir() const { return saved_dir_; }

    nlohmann::json state_payload() const;
    // Current view rendered and PNG-encoded.
    Message slice_image() const;

private:
    nlohmann::json on_open(const nlohmann::json& p);
    nlohmann::json on_close(const nlohmann::json& p);
    nlohmann::json on_gaze(const nlohmann::json& p);
    nlohmann::json on_key(const nlohmann::json& p, bool& view_changed);
    nlohmann::json on_view(const nlohmann::json& p);

    void flush_until(std::int64_t t);
    void flush_all();
    void flush_watermark();
    void require_open() const;
    void end_session(bool save);
    const MipStack& mips() const;

    GatewayConfig config_;
    std::unique_ptr<ScalarVolume> pet_, ct_;
    std::unique_ptr<SessionDriver> driver_;
    mutable std::unique_ptr<MipStack> mips_;
    std::string study_path_, reader_id_, reader_role_;
    std::multimap<std::int64_t, GazeSample> buffer_;
    std::optional<std::int64_t> last_tick_ts_, last_key_ts_;
    std::int64_t revision_ = 0;
    std::optional<std::int64_t> last_seq_;
    std::map<std::int64_t, Reply> replies_;  // recent replies by seq, for retransmits
    std::optional<std::filesystem::path> saved_dir_;
};

}  // namespace gazepet::gateway
