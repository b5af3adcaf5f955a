#include "gazepet/nifti.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <string>

#include "gazepet/error.hpp"
#include "gazepet/file_util.hpp"

namespace fs = std::filesystem;

namespace gazepet {
namespace {

constexpr int kHeaderSize = 348;
constexpr int kDataOffset = 352;

// Field offsets in the NIfTI-1 header.
constexpr int kOffDim = 40;
constexpr int kOffDatatype = 70;
constexpr int kOffBitpix = 72;
constexpr int kOffPixdim = 76;
constexpr int kOffVoxOffset = 108;
constexpr int kOffSclSlope = 112;
constexpr int kOffSclInter = 116;
constexpr int kOffXyztUnits = 123;
constexpr int kOffDescrip = 148;
constexpr int kOffQformCode = 252;
constexpr int kOffSformCode = 254;
constexpr int kOffQuatern = 256;
constexpr int kOffQoffset = 268;
constexpr int kOffSrow = 280;
constexpr int kOffMagic = 344;

class HeaderReader {
public:
    HeaderReader(std::string_view bytes, bool swap) : bytes_(bytes), swap_(swap) {}

    template <typename T>
    T get(int offset) const {
        T v;
        std::memcpy(&v, bytes_.data() + offset, sizeof(T));
        if (swap_) v = byteswap(v);
        return v;
    }

    template <typename T>
    static T byteswap(T v) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        std::reverse(b, b + sizeof(T));
        std::memcpy(&v, b, sizeof(T));
        return v;
    }

private:
    std::string_view bytes_;
    bool swap_;
};

template <typename T>
void put(std::string& buf, int offset, T v) {
    std::memcpy(buf.data() + offset, &v, sizeof(T));
}

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 quaternion_rotation(double b, double c, double d, double qfac) {
    double a = 1.0 - (b * b + c * c + d * d);
    a = a < 1e-7 ? 0.0 : std::sqrt(a);
    Mat3 r{};
    r[0] = {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)};
    r[1] = {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)};
    r[2] = {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - c * c - b * b};
    for (auto& row : r) row[2] *= qfac;
    return r;
}

// Desired world direction (RAS) for each canonical voxel axis: x toward
// patient left (-R), y toward posterior (-A), z toward superior (+S).
constexpr std::array<int, 3> kCanonicalSign = {-1, -1, +1};

struct AxisMap {
    std::array<int, 3> source_axis{0, 1, 2};  // canonical axis -> storage axis
    std::array<bool, 3> flip{false, false, false};
};

AxisMap axis_map_from_direction(const Mat3& m) {
    AxisMap map;
    std::array<int, 3> world_of{-1, -1, -1};
    std::array<int, 3> sign_of{1, 1, 1};
    for (int i = 0; i < 3; ++i) {
        int best = 0;
        for (int w = 1; w < 3; ++w) {
            if (std::abs(m[w][i]) > std::abs(m[best][i])) best = w;
        }
        if (m[best][i] == 0.0) throw FormatError("degenerate orientation matrix");
        world_of[i] = best;
        sign_of[i] = m[best][i] > 0 ? 1 : -1;
    }
    for (int t = 0; t < 3; ++t) {
        int found = -1;
        for (int i = 0; i < 3; ++i) {
            if (world_of[i] == t) {
                if (found >= 0) throw FormatError("orientation does not map axes one-to-one");
                found = i;
            }
        }
        if (found < 0) throw FormatError("orientation does not map axes one-to-one");
        map.source_axis[t] = found;
        map.flip[t] = sign_of[found] != kCanonicalSign[t];
    }
    return map;
}

ScalarVolume parse_nifti(std::string_view bytes, ModalityKind kind) {
    if (bytes.size() < kHeaderSize) throw FormatError("file too short for a NIfTI-1 header");

    std::int32_t sizeof_hdr;
    std::memcpy(&sizeof_hdr, bytes.data(), 4);
    bool swap = false;
    if (sizeof_hdr != kHeaderSize) {
        if (HeaderReader::byteswap(sizeof_hdr) != kHeaderSize) {
            throw FormatError("sizeof_hdr is not 348");
        }
        swap = true;
    }
    const HeaderReader h(bytes, swap);

    if (std::memcmp(bytes.data() + kOffMagic, "n+1\0", 4) != 0) {
        throw FormatError("magic is not n+1 (only single-file NIfTI-1 is supported)");
    }

    const auto ndim = h.get<std::int16_t>(kOffDim);
    if (ndim < 2 || ndim > 7) throw FormatError("dim[0] out of range");
    std::array<int, 3> n{1, 1, 1};
    for (int i = 0; i < std::min<int>(ndim, 3); ++i) {
        n[i] = h.get<std::int16_t>(kOffDim + 2 * (i + 1));
        if (n[i] < 1) throw FormatError("non-positive dimension");
    }
    for (int i = 3; i < ndim; ++i) {
        if (h.get<std::int16_t>(kOffDim + 2 * (i + 1)) > 1) {
            throw UnsupportedError("only 3D volumes are supported");
        }
    }

    std::array<double, 3> pix{};
    for (int i = 0; i < 3; ++i) {
        pix[i] = h.get<float>(kOffPixdim + 4 * (i + 1));
        if (i >= ndim) pix[i] = pix[i] > 0 ? pix[i] : 1.0;
        if (pix[i] < 0) throw FormatError("negative voxel spacing");
        if (!(pix[i] > 0)) throw FormatError("zero voxel spacing");
    }
    double qfac = h.get<float>(kOffPixdim);
    qfac = qfac < 0 ? -1.0 : 1.0;

    const auto datatype = h.get<std::int16_t>(kOffDatatype);
    int width = 0;
    switch (datatype) {
        case static_cast<short>(NiftiDatatype::Int16):
        case static_cast<short>(NiftiDatatype::Uint16): width = 2; break;
        case static_cast<short>(NiftiDatatype::Float32): width = 4; break;
        case static_cast<short>(NiftiDatatype::Float64): width = 8; break;
        default: throw UnsupportedError("unsupported NIfTI datatype " + std::to_string(datatype));
    }

    const double vox_offset = h.get<float>(kOffVoxOffset);
    if (vox_offset < kDataOffset) throw FormatError("vox_offset inside the header");
    const std::size_t offset = static_cast<std::size_t>(vox_offset);
    const std::size_t count = static_cast<std::size_t>(n[0]) * n[1] * n[2];
    if (bytes.size() < offset + count * width) throw FormatError("voxel payload is truncated");

    double slope = h.get<float>(kOffSclSlope);
    double inter = h.get<float>(kOffSclInter);
    const bool scaled = std::isfinite(slope) && slope != 0.0 && !(slope == 1.0 && inter == 0.0);
    if (!scaled) {
        slope = 1.0;
        inter = 0.0;
    }

    std::vector<float> raw(count);
    const char* p = bytes.data() + offset;
    for (std::size_t i = 0; i < count; ++i, p += width) {
        double v = 0;
        switch (datatype) {
            case 4: {
                std::int16_t s;
                std::memcpy(&s, p, 2);
                v = swap ? HeaderReader::byteswap(s) : s;
                break;
            }
            case 512: {
                std::uint16_t s;
                std::memcpy(&s, p, 2);
                v = swap ? HeaderReader::byteswap(s) : s;
                break;
            }
            case 16: {
                float f;
                std::memcpy(&f, p, 4);
                raw[i] = swap ? HeaderReader::byteswap(f) : f;
                if (scaled) raw[i] = static_cast<float>(raw[i] * slope + inter);
                continue;
            }
            case 64: {
                double f;
                std::memcpy(&f, p, 8);
                v = swap ? HeaderReader::byteswap(f) : f;
                break;
            }
        }
        raw[i] = static_cast<float>(v * slope + inter);
    }

    // Orientation: sform wins over qform; with neither we take storage order
    // as canonical.
    AxisMap map;
    const auto sform_code = h.get<std::int16_t>(kOffSformCode);
    const auto qform_code = h.get<std::int16_t>(kOffQformCode);
    if (sform_code > 0) {
        Mat3 m{};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m[r][c] = h.get<float>(kOffSrow + 16 * r + 4 * c);
        map = axis_map_from_direction(m);
    } else if (qform_code > 0) {
        map = axis_map_from_direction(quaternion_rotation(h.get<float>(kOffQuatern),
                                                          h.get<float>(kOffQuatern + 4),
                                                          h.get<float>(kOffQuatern + 8), qfac));
    }

    Dims d{n[map.source_axis[0]], n[map.source_axis[1]], n[map.source_axis[2]]};
    Spacing s{pix[map.source_axis[0]], pix[map.source_axis[1]], pix[map.source_axis[2]]};
    std::vector<float> data(count);
    std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(n[0]),
                                      static_cast<std::size_t>(n[0]) * n[1]};
    for (int z = 0; z < d.nz; ++z) {
        for (int y = 0; y < d.ny; ++y) {
            for (int x = 0; x < d.nx; ++x) {
                const std::array<int, 3> c{x, y, z};
                std::array<int, 3> src{};
                for (int t = 0; t < 3; ++t) {
                    const int extent = n[map.source_axis[t]];
                    src[map.source_axis[t]] = map.flip[t] ? extent - 1 - c[t] : c[t];
                }
                data[(static_cast<std::size_t>(z) * d.ny + y) * d.nx + x] =
                    raw[src[0] * stride[0] + src[1] * stride[1] + src[2] * stride[2]];
            }
        }
    }

    if (kind == ModalityKind::PET_SUV) {
        for (float& v : data) {
            if (v < 0.0f) v = 0.0f;
        }
    }
    return ScalarVolume(d, s, kind, std::move(data));
}

}  // namespace

ScalarVolume load_volume_raw(const fs::path& path, ModalityKind kind) {
    if (!fs::exists(path)) throw IoError("no such file: " + path.string());
    std::string bytes = read_file(path);
    if (looks_gzipped(bytes)) bytes = gzip_decompress(bytes);
    return parse_nifti(bytes, kind);
}

ScalarVolume load_volume(const fs::path& path, ModalityKind kind) {
    ScalarVolume v = load_volume_raw(path, kind);
    if (kind == ModalityKind::PET_SUV && (v.dims().nx != 512 || v.dims().ny != 512)) {
        return resample_in_plane(v, 512, 512);
    }
    return v;
}

void save_volume(const ScalarVolume& vol, const fs::path& path, const NiftiWriteOptions& options) {
    vol.validate();
    const Dims& d = vol.dims();
    if (d.nx > 32767 || d.ny > 32767 || d.nz > 32767) {
        throw UnsupportedError("dimension exceeds NIfTI-1 limit");
    }
    const int width = options.datatype == NiftiDatatype::Float64 ? 8
                      : options.datatype == NiftiDatatype::Float32 ? 4
                                                                   : 2;

    std::string buf(kDataOffset + d.voxels() * width, '\0');
    put<std::int32_t>(buf, 0, kHeaderSize);
    put<std::int16_t>(buf, kOffDim, 3);
    put<std::int16_t>(buf, kOffDim + 2, static_cast<std::int16_t>(d.nx));
    put<std::int16_t>(buf, kOffDim + 4, static_cast<std::int16_t>(d.ny));
    put<std::int16_t>(buf, kOffDim + 6, static_cast<std::int16_t>(d.nz));
    for (int i = 4; i <= 7; ++i) put<std::int16_t>(buf, kOffDim + 2 * i, 1);
    put<std::int16_t>(buf, kOffDatatype, static_cast<std::int16_t>(options.datatype));
    put<std::int16_t>(buf, kOffBitpix, static_cast<std::int16_t>(width * 8));
    put<float>(buf, kOffPixdim, 1.0f);
    put<float>(buf, kOffPixdim + 4, static_cast<float>(vol.spacing().sx));
    put<float>(buf, kOffPixdim + 8, static_cast<float>(vol.spacing().sy));
    put<float>(buf, kOffPixdim + 12, static_cast<float>(vol.spacing().sz));
    put<float>(buf, kOffVoxOffset, static_cast<float>(kDataOffset));
    put<float>(buf, kOffSclSlope, 1.0f);
    put<float>(buf, kOffSclInter, 0.0f);
    buf[kOffXyztUnits] = 2 | 8;  // mm, seconds
    std::memcpy(buf.data() + kOffDescrip, "gazepet", 7);

    std::array<std::array<double, 4>, 3> srow{};
    if (options.srow) {
        srow = *options.srow;
        put<std::int16_t>(buf, kOffQformCode, 0);
    } else {
        // Canonical layout in RAS world: x -> left, y -> posterior, z -> up.
        srow[0] = {-vol.spacing().sx, 0, 0, 0};
        srow[1] = {0, -vol.spacing().sy, 0, 0};
        srow[2] = {0, 0, vol.spacing().sz, 0};
        put<std::int16_t>(buf, kOffQformCode, 1);
        // 180 degree turn about z: (b, c, d) = (0, 0, 1).
        put<float>(buf, kOffQuatern + 8, 1.0f);
    }
    put<std::int16_t>(buf, kOffSformCode, 1);
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 4; ++c) {
            put<float>(buf, kOffSrow + 16 * r + 4 * c, static_cast<float>(srow[r][c]));
        }
    }
    for (int i = 0; i < 3; ++i) put<float>(buf, kOffQoffset + 4 * i, static_cast<float>(srow[i][3]));
    std::memcpy(buf.data() + kOffMagic, "n+1\0", 4);

    char* out = buf.data() + kDataOffset;
    for (float v : vol.data()) {
        switch (options.datatype) {
            case NiftiDatatype::Float32: std::memcpy(out, &v, 4); break;
            case NiftiDatatype::Float64: {
                const double dv = v;
                std::memcpy(out, &dv, 8);
                break;
            }
            case NiftiDatatype::Int16: {
                const auto s = static_cast<std::int16_t>(
                    std::clamp(std::lround(v), -32768L, 32767L));
                std::memcpy(out, &s, 2);
                break;
            }
            case NiftiDatatype::Uint16: {
                const auto s = static_cast<std::uint16_t>(std::clamp(std::lround(v), 0L, 65535L));
                std::memcpy(out, &s, 2);
                break;
            }
        }
        out += width;
    }

    const std::string name = path.filename().string();
    const bool gz = name.size() >= 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
    write_file_atomic(path, gz ? gzip_compress(buf) : buf);
}

}  // namespace gazepet
