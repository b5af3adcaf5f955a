#include "gazepet/key_codes.hpp"

#include <array>
#include <string>
#include <utility>

#include "gazepet/error.hpp"

namespace gazepet {
namespace {

constexpr std::array<std::pair<KeyAction, const char*>, 26> kNames{{
    {KeyAction::TogglePause, "toggle_pause"},
    {KeyAction::Quit, "quit"},
    {KeyAction::SaveYes, "save_yes"},
    {KeyAction::SaveNo, "save_no"},
    {KeyAction::Enter, "enter"},
    {KeyAction::ShowPet, "show_pet"},
    {KeyAction::ShowCt, "show_ct"},
    {KeyAction::ShowFused, "show_fused"},
    {KeyAction::ShowMip, "show_mip"},
    {KeyAction::LiverContrast, "liver_contrast"},
    {KeyAction::BrainContrast, "brain_contrast"},
    {KeyAction::ContrastUp, "contrast_up"},
    {KeyAction::ContrastDown, "contrast_down"},
    {KeyAction::NextSlice, "next_slice"},
    {KeyAction::PrevSlice, "prev_slice"},
    {KeyAction::SelectCertain, "select_certain"},
    {KeyAction::SelectUncertain, "select_uncertain"},
    {KeyAction::Accept, "accept"},
    {KeyAction::Reject, "reject"},
    {KeyAction::RejectAll, "reject_all"},
    {KeyAction::Grow, "grow"},
    {KeyAction::Shrink, "shrink"},
    {KeyAction::ToggleOverlay, "toggle_overlay"},
    {KeyAction::CtPreset, "ct_preset"},
    {KeyAction::Undo, "undo"},
    {KeyAction::ClearRejections, "clear_rejections"},
}};

std::string binding_name(const KeyBinding& b) {
    std::string name(to_string(b.action));
    if (b.action == KeyAction::CtPreset) name += "_" + std::to_string(b.preset);
    return name;
}

KeyBinding binding_from_name(const std::string& name) {
    const std::string prefix = "ct_preset_";
    if (name.rfind(prefix, 0) == 0) {
        int preset = 0;
        try {
            preset = std::stoi(name.substr(prefix.size()));
        } catch (const std::exception&) {
            throw FormatError("bad key action '" + name + "'");
        }
        if (preset < 1 || preset > 9) throw FormatError("CT preset out of 1..9 in '" + name + "'");
        return {KeyAction::CtPreset, preset};
    }
    const auto a = key_action_from_string(name);
    if (!a || *a == KeyAction::CtPreset) throw FormatError("unknown key action '" + name + "'");
    return {*a, 0};
}

}  // namespace

std::string_view to_string(KeyAction a) {
    for (const auto& [action, name] : kNames) {
        if (action == a) return name;
    }
    return "unknown";
}

std::optional<KeyAction> key_action_from_string(std::string_view s) {
    for (const auto& [action, name] : kNames) {
        if (s == name) return action;
    }
    return std::nullopt;
}

KeyTable KeyTable::defaults() {
    KeyTable t;
    t.bind(' ', {KeyAction::TogglePause});
    t.bind('q', {KeyAction::Quit});
    t.bind('y', {KeyAction::SaveYes});
    t.bind('n', {KeyAction::SaveNo});
    t.bind(13, {KeyAction::Enter});
    t.bind(10, {KeyAction::Enter});
    t.bind('p', {KeyAction::ShowPet});
    t.bind('c', {KeyAction::ShowCt});
    t.bind('o', {KeyAction::ShowFused});
    t.bind('m', {KeyAction::ShowMip});
    t.bind('l', {KeyAction::LiverContrast});
    t.bind('b', {KeyAction::BrainContrast});
    t.bind('+', {KeyAction::ContrastUp});
    t.bind('=', {KeyAction::ContrastUp});
    t.bind('-', {KeyAction::ContrastDown});
    t.bind('>', {KeyAction::NextSlice});
    t.bind('.', {KeyAction::NextSlice});
    t.bind('<', {KeyAction::PrevSlice});
    t.bind(',', {KeyAction::PrevSlice});
    t.bind('s', {KeyAction::SelectCertain});
    t.bind('d', {KeyAction::SelectUncertain});
    t.bind('a', {KeyAction::Accept});
    t.bind('f', {KeyAction::Reject});
    t.bind('F', {KeyAction::RejectAll});
    t.bind('r', {KeyAction::Grow});
    t.bind('e', {KeyAction::Shrink});
    t.bind(9, {KeyAction::ToggleOverlay});
    for (int i = 1; i <= 9; ++i) t.bind('0' + i, {KeyAction::CtPreset, i});
    t.bind('z', {KeyAction::Undo});
    t.bind('x', {KeyAction::ClearRejections});
    return t;
}

void KeyTable::unbind_action(const KeyBinding& binding) {
    std::erase_if(table_, [&](const auto& kv) { return kv.second == binding; });
}

KeyTable KeyTable::from_json(const nlohmann::json& remap) {
    if (!remap.is_object()) throw FormatError("key remap must be a JSON object");
    KeyTable t = defaults();
    for (auto it = remap.begin(); it != remap.end(); ++it) {
        const KeyBinding b = binding_from_name(it.key());
        t.unbind_action(b);
        const auto& v = it.value();
        if (v.is_number_integer()) {
            t.bind(v.get<int>(), b);
        } else if (v.is_array()) {
            for (const auto& c : v) {
                if (!c.is_number_integer()) throw FormatError("key code must be an integer");
                t.bind(c.get<int>(), b);
            }
        } else {
            throw FormatError("key code for '" + it.key() + "' must be an integer or a list");
        }
    }
    return t;
}

std::optional<KeyBinding> KeyTable::lookup(int code) const {
    const auto it = table_.find(code);
    if (it == table_.end()) return std::nullopt;
    return it->second;
}

nlohmann::json KeyTable::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [code, b] : table_) out[binding_name(b)].push_back(code);
    return out;
}

}  // namespace gazepet
