#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gazepet::gateway {

inline constexpr int kProtocolVersion = 1;

// Client -> server
inline constexpr const char* kSessionOpen = "session.open";
inline constexpr const char* kSessionClose = "session.close";
inline constexpr const char* kGazeBatch = "gaze.batch";
inline constexpr const char* kKeyPress = "key.press";
inline constexpr const char* kViewSet = "view.set";
// Server -> client
inline constexpr const char* kAck = "ack";
inline constexpr const char* kError = "error";
inline constexpr const char* kStateBroadcast = "state.broadcast";
inline constexpr const char* kSliceImage = "slice.image";

bool is_client_kind(std::string_view kind);

// {"v": 1, "kind": ..., "seq": ..., "payload": {...}}. Server pushes
// (state.broadcast, slice.image) carry no seq.
struct Message {
    std::string kind;
    std::optional<std::int64_t> seq;
    nlohmann::json payload = nlohmann::json::object();

    std::string dump() const;
};

// Throws ProtocolError for bad JSON, a missing/unknown kind, a missing
// integer seq or a non-object payload. `seq_out` receives the seq when one
// could be read, so the error can still carry it.
Message parse_client_message(std::string_view text, std::int64_t* seq_out = nullptr);

Message make_ack(std::int64_t seq, nlohmann::json payload = nlohmann::json::object());
Message make_error(std::int64_t seq, std::string_view code, std::string_view message);

// Box colours by status.
const char* status_color(std::string_view status);

}  // namespace gazepet::gateway
