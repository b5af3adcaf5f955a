#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazepet/proposal.hpp"
#include "gazepet/volume.hpp"

namespace gazepet {

struct SegConflict {
    int slice_number = 0;
    int winner_label = 0;
    int overwritten_label = 0;
    std::int64_t voxels = 0;
};

struct PseudoSeg {
    LabelVolume mask;  // lesion ordinal (1-based, accept order)
    std::vector<int> label_to_lesion_id;  // index label - 1
    std::vector<SegConflict> conflicts;
    std::vector<std::string> warnings;

    nlohmann::json report() const;
};

// Re-applies each slice's recorded threshold inside its box. Per slice box
// the 8-connected supra-threshold component with the most pixels inside the
// box is kept, clipped to the box. Later lesions overwrite earlier ones.
PseudoSeg build_pseudo_seg(const std::vector<LesionAnnotation>& lesions, const ScalarVolume& pet);

}  // namespace gazepet
