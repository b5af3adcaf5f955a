#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gazepet {

// One observer reading one study. Study volumes live at
// <data_root>/<study_path>/{SUV,CTres}.nii.gz.
struct StudyRead {
    std::string observer_id;
    std::string reader_role;  // "trainee" or "experienced"
    std::string study_path;
    std::filesystem::path session_dir;
};

struct ExportOptions {
    std::uint64_t seed = 0;
    std::filesystem::path data_root;
};

struct ExportSummary {
    std::map<std::string, std::vector<std::string>> split_studies;  // split -> study paths
    std::size_t reads = 0;
    std::size_t lesions = 0;
    std::size_t slices = 0;
    std::size_t gaze_rows = 0;
};

inline constexpr std::array<const char*, 3> kSplits{"train", "val", "test"};
inline constexpr const char* kGazeCsvHeader =
    "study_read_id,slice_number,system_time_stamp,x,y,slice_record_id,bbox_x,bbox_y,bbox_w,bbox_h";

// Fisher-Yates driven by mt19937_64 output so the order is the same on
// every standard library.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

// Split sizes for n studies: val = test = floor(n / 10), train the rest.
std::array<std::size_t, 3> split_sizes(std::size_t n);

// Writes coco_style_info_{split}.json, gaze_data_{split}.csv and
// metadata.csv. Throws ExportError listing missing study volumes.
ExportSummary export_coco(const std::vector<StudyRead>& reads,
                          const std::filesystem::path& out_dir, const ExportOptions& options);

// Checks every cross-reference of an export directory. Throws
// IntegrityError naming the first broken one.
void validate_coco_export(const std::filesystem::path& out_dir);

// metadata.csv: observer_id,reader_role,study_path,session_dir
std::vector<StudyRead> read_metadata_csv(const std::filesystem::path& path);
std::string metadata_csv(const std::vector<StudyRead>& reads);

}  // namespace gazepet
