#include "gazepet/gateway/protocol.hpp"

#include "gazepet/error.hpp"

namespace gazepet::gateway {

using nlohmann::json;

bool is_client_kind(std::string_view kind) {
    return kind == kSessionOpen || kind == kSessionClose || kind == kGazeBatch ||
           kind == kKeyPress || kind == kViewSet;
}

std::string Message::dump() const {
    json j{{"v", kProtocolVersion}, {"kind", kind}};
    if (seq) j["seq"] = *seq;
    j["payload"] = payload;
    return j.dump();
}

Message parse_client_message(std::string_view text, std::int64_t* seq_out) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ProtocolError(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw ProtocolError("message must be a JSON object");
    Message m;
    const auto seq = j.find("seq");
    if (seq == j.end() || !seq->is_number_integer()) throw ProtocolError("message needs an integer seq");
    m.seq = seq->get<std::int64_t>();
    if (seq_out) *seq_out = *m.seq;
    if (const auto v = j.find("v"); v != j.end() && *v != kProtocolVersion) {
        throw ProtocolError("unsupported protocol version " + v->dump());
    }
    const auto kind = j.find("kind");
    if (kind == j.end() || !kind->is_string()) throw ProtocolError("message needs a string kind");
    m.kind = kind->get<std::string>();
    if (!is_client_kind(m.kind)) throw ProtocolError("unknown message kind '" + m.kind + "'");
    if (const auto p = j.find("payload"); p != j.end()) {
        if (!p->is_object()) throw ProtocolError("payload must be an object");
        m.payload = *p;
    }
    return m;
}

Message make_ack(std::int64_t seq, json payload) { return Message{kAck, seq, std::move(payload)}; }

Message make_error(std::int64_t seq, std::string_view code, std::string_view message) {
    return Message{kError, seq, {{"code", code}, {"message", message}}};
}

const char* status_color(std::string_view status) {
    if (status == "candidate") return "blue";
    if (status == "extrapolated") return "orange";
    if (status == "accepted") return "green";
    if (status == "rejected") return "red";
    return "white";
}

}  // namespace gazepet::gateway
