#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace gazepet {

enum class KeyAction {
    TogglePause,
    Quit,
    SaveYes,
    SaveNo,
    Enter,
    ShowPet,
    ShowCt,
    ShowFused,
    ShowMip,
    LiverContrast,
    BrainContrast,
    ContrastUp,
    ContrastDown,
    NextSlice,
    PrevSlice,
    SelectCertain,
    SelectUncertain,
    Accept,
    Reject,
    RejectAll,
    Grow,
    Shrink,
    ToggleOverlay,
    CtPreset,
    Undo,
    ClearRejections,
};

std::string_view to_string(KeyAction a);
std::optional<KeyAction> key_action_from_string(std::string_view s);

struct KeyBinding {
    KeyAction action = KeyAction::Quit;
    int preset = 0;  // CtPreset only, 1..9
    friend bool operator==(const KeyBinding&, const KeyBinding&) = default;
};

// Integer key codes as an OpenCV waitKey loop reports them (ASCII). Shifted
// keys arrive as their shifted character ('F' for Shift+f).
class KeyTable {
public:
    static KeyTable defaults();

    // Remap document: {"select_certain": 115, "ct_preset_3": [51, 99]}.
    // Listed actions lose their default codes; everything else is kept.
    static KeyTable from_json(const nlohmann::json& remap);

    std::optional<KeyBinding> lookup(int code) const;
    void bind(int code, KeyBinding binding) { table_[code] = binding; }
    void unbind_action(const KeyBinding& binding);
    const std::map<int, KeyBinding>& entries() const { return table_; }

    nlohmann::json to_json() const;

private:
    std::map<int, KeyBinding> table_;
};

}  // namespace gazepet
