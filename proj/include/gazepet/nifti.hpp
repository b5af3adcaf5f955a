#pragma once

#include <array>
#include <filesystem>
#include <optional>

#include "gazepet/volume.hpp"

namespace gazepet {

// On-disk voxel types the reader accepts (NIfTI-1 datatype codes).
enum class NiftiDatatype : short {
    Int16 = 4,
    Float32 = 16,
    Float64 = 64,
    Uint16 = 512,
};

struct NiftiWriteOptions {
    NiftiDatatype datatype = NiftiDatatype::Float32;
    // Raw sform rows to write instead of the canonical affine. Voxels are
    // written in storage order unchanged; only useful to produce fixtures in
    // other orientations.
    std::optional<std::array<std::array<double, 4>, 3>> srow;
};

// Reads a single-file NIfTI-1 volume (.nii or .nii.gz; gzip is detected from
// content). The result is reoriented so index x runs toward patient left,
// y toward posterior and z toward the head. PET volumes whose in-plane size
// is not 512x512 are bilinearly upsampled to 512x512.
ScalarVolume load_volume(const std::filesystem::path& path, ModalityKind kind);

// Like load_volume but never resamples. Used for derived volumes (heatmaps,
// label masks) whose grid is already fixed.
ScalarVolume load_volume_raw(const std::filesystem::path& path, ModalityKind kind);

// Writes NIfTI-1 with magic "n+1", gzip-compressed when the path ends in
// ".gz". The write goes to a temporary sibling first and is renamed into place.
void save_volume(const ScalarVolume& vol, const std::filesystem::path& path,
                 const NiftiWriteOptions& options = {});

}  // namespace gazepet
