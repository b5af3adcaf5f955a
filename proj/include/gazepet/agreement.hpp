#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gazepet/proposal.hpp"

namespace gazepet {

// Axis-aligned 3D box in voxels; z range inclusive.
struct Box3D {
    int x = 0, y = 0, w = 1, h = 1;
    int z_min = 0, z_max = 0;

    std::int64_t voxels() const {
        return static_cast<std::int64_t>(w) * h * (z_max - z_min + 1);
    }
    friend bool operator==(const Box3D&, const Box3D&) = default;
};

std::int64_t intersection_voxels(const Box3D& a, const Box3D& b);
double iou3d(const Box3D& a, const Box3D& b);

// Union bound of each lesion's slice boxes over its z extent.
std::vector<Box3D> merge_slices_to_3d(const std::vector<LesionAnnotation>& lesions);

struct BoxMatch {
    std::size_t a = 0;
    std::size_t b = 0;
    double iou = 0.0;
    friend bool operator==(const BoxMatch&, const BoxMatch&) = default;
};

struct Agreement {
    double precision = 0.0;  // TP / |a|, a taken as prediction
    double recall = 0.0;     // TP / |b|
    double pct_agreement = 0.0;  // TP / (TP + FP + FN)
    std::size_t tp = 0, fp = 0, fn = 0;
    std::vector<BoxMatch> matches;
    std::vector<std::size_t> unmatched_a, unmatched_b;
};

// Greedy one-to-one matching in descending IoU among pairs with IoU > 0
// (ties: lower a index, then lower b index).
Agreement match_and_agree(const std::vector<Box3D>& a, const std::vector<Box3D>& b);

// Maximum-cardinality matching over IoU > 0 pairs, for auditing the greedy
// result.
Agreement match_and_agree_exact(const std::vector<Box3D>& a, const std::vector<Box3D>& b);

struct PairReport {
    std::string name_a, name_b;
    Agreement agreement;
    std::optional<double> icc, icc_ci_low, icc_ci_high;
    std::string icc_note;  // why ICC is missing, if it is
};

struct AgreementReport {
    std::vector<PairReport> pairs;
    nlohmann::json to_json() const;
    std::string to_csv() const;
};

// Pairwise agreement between named annotation sets (all i < j pairs). ICC
// uses the matched lesions' 3D box voxel volumes as the measurement.
AgreementReport agree_sets(const std::vector<std::string>& names,
                           const std::vector<std::vector<LesionAnnotation>>& sets);

}  // namespace gazepet
