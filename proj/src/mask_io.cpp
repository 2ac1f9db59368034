#include "segfair/mask_io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <vector>

#include "segfair/error.hpp"
#include "segfair/log.hpp"

namespace segfair {

namespace {

// All on-disk integers and floats are little-endian. The decoders below work
// byte-wise so they are correct on any host.

std::uint16_t read_u16(const unsigned char* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

std::int16_t read_i16(const unsigned char* p) {
    return static_cast<std::int16_t>(read_u16(p));
}

std::int32_t read_i32(const unsigned char* p) {
    return static_cast<std::int32_t>(read_u32(p));
}

float read_f32(const unsigned char* p) {
    const std::uint32_t bits = read_u32(p);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    return f;
}

double read_f64(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 7; i >= 0; --i) bits = (bits << 8) | p[i];
    double d;
    std::memcpy(&d, &bits, sizeof d);
    return d;
}

void write_u32(std::vector<unsigned char>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void write_f64(std::vector<unsigned char>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open mask file: " + path);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path);
    return bytes;
}

VoxelMask load_raw_v1(const std::string& path, const std::vector<unsigned char>& b) {
    constexpr std::size_t header_size = 4 + 12 + 24;
    if (b.size() < 4 || std::memcmp(b.data(), "SFM1", 4) != 0)
        throw FormatError(path + ": bad magic, expected \"SFM1\"", 0);
    if (b.size() < header_size)
        throw FormatError(path + ": truncated header", b.size());

    VoxelMask m;
    for (int a = 0; a < 3; ++a) m.dims[a] = read_u32(b.data() + 4 + 4 * a);
    for (int a = 0; a < 3; ++a) {
        m.spacing[a] = read_f64(b.data() + 16 + 8 * a);
        if (!(m.spacing[a] > 0.0) || !std::isfinite(m.spacing[a]))
            throw FormatError(path + ": non-positive spacing", 16 + 8 * a);
        if (m.dims[a] == 0) throw FormatError(path + ": zero dims", 4 + 4 * a);
    }
    const std::size_t nvox = m.voxel_count();
    if (b.size() < header_size + nvox)
        throw FormatError(path + ": truncated payload, expected " +
                              std::to_string(header_size + nvox) + " bytes",
                          b.size());
    m.data.resize(nvox);
    for (std::size_t i = 0; i < nvox; ++i) m.data[i] = b[header_size + i] > 0 ? 1 : 0;
    return m;
}

VoxelMask load_nifti_subset(const std::string& path, const std::vector<unsigned char>& b) {
    if (b.size() >= 2 && b[0] == 0x1f && b[1] == 0x8b)
        throw FormatError(path + ": gzip-compressed NIfTI; decompress first", 0);
    if (b.size() < 348) throw FormatError(path + ": truncated header", b.size());

    const std::int32_t sizeof_hdr = read_i32(b.data());
    if (sizeof_hdr != 348) {
        if (sizeof_hdr == 0x5c010000) // 348 byte-swapped
            throw FormatError(path + ": big-endian NIfTI unsupported", 0);
        throw FormatError(path + ": malformed header, sizeof_hdr != 348", 0);
    }
    if (std::memcmp(b.data() + 344, "n+1\0", 4) != 0)
        throw FormatError(path + ": bad magic, expected \"n+1\\0\"", 344);

    const std::int16_t ndim = read_i16(b.data() + 40);
    if (ndim < 1 || ndim > 7)
        throw FormatError(path + ": malformed header, dim[0] out of range", 40);

    VoxelMask m;
    for (int a = 0; a < 3; ++a) {
        const std::int16_t d = a < ndim ? read_i16(b.data() + 42 + 2 * a) : 1;
        if (d < 1)
            throw FormatError(path + ": malformed header, non-positive dim",
                              42 + 2 * a);
        m.dims[a] = static_cast<std::uint32_t>(d);
    }
    for (int a = 3; a < ndim; ++a) {
        if (read_i16(b.data() + 42 + 2 * a) > 1)
            throw FormatError(path + ": more than 3 non-trivial dimensions",
                              42 + 2 * a);
    }

    const std::int16_t datatype = read_i16(b.data() + 70);
    const std::int16_t bitpix = read_i16(b.data() + 72);
    std::size_t bytes_per_voxel;
    switch (datatype) {
    case 2:  bytes_per_voxel = 1; break; // uint8
    case 4:  bytes_per_voxel = 2; break; // int16
    case 16: bytes_per_voxel = 4; break; // float32
    default:
        throw FormatError(path + ": unsupported datatype " + std::to_string(datatype),
                          70);
    }
    if (bitpix != static_cast<std::int16_t>(bytes_per_voxel * 8))
        throw FormatError(path + ": bitpix inconsistent with datatype", 72);

    for (int a = 0; a < 3; ++a) {
        const float pd = read_f32(b.data() + 76 + 4 * (a + 1));
        if (!(pd > 0.0f) || !std::isfinite(pd))
            throw FormatError(path + ": non-positive spacing", 76 + 4 * (a + 1));
        m.spacing[a] = static_cast<double>(pd);
    }

    if (read_i16(b.data() + 252) != 0 || read_i16(b.data() + 254) != 0)
        log_warn(path + ": orientation metadata (qform/sform) present; ignored, "
                        "only voxel spacing is used");

    const float vox_offset_f = read_f32(b.data() + 108);
    if (!(vox_offset_f >= 348.0f) || vox_offset_f != std::floor(vox_offset_f))
        throw FormatError(path + ": malformed vox_offset", 108);
    const std::size_t vox_offset = static_cast<std::size_t>(vox_offset_f);

    const std::size_t nvox = m.voxel_count();
    if (b.size() < vox_offset + nvox * bytes_per_voxel)
        throw FormatError(path + ": truncated payload, expected " +
                              std::to_string(vox_offset + nvox * bytes_per_voxel) +
                              " bytes",
                          b.size());

    m.data.resize(nvox);
    const unsigned char* payload = b.data() + vox_offset;
    switch (datatype) {
    case 2:
        for (std::size_t i = 0; i < nvox; ++i) m.data[i] = payload[i] > 0 ? 1 : 0;
        break;
    case 4:
        for (std::size_t i = 0; i < nvox; ++i)
            m.data[i] = read_i16(payload + 2 * i) > 0 ? 1 : 0;
        break;
    case 16:
        for (std::size_t i = 0; i < nvox; ++i)
            m.data[i] = read_f32(payload + 4 * i) > 0.0f ? 1 : 0;
        break;
    }
    return m;
}

} // namespace

VoxelMask load_mask(const std::string& path, MaskFormat format) {
    const auto bytes = read_file(path);
    VoxelMask m = format == MaskFormat::RawV1 ? load_raw_v1(path, bytes)
                                              : load_nifti_subset(path, bytes);
    m.validate();
    return m;
}

VoxelMask load_mask_auto(const std::string& path) {
    const auto bytes = read_file(path);
    VoxelMask m = (bytes.size() >= 4 && std::memcmp(bytes.data(), "SFM1", 4) == 0)
                      ? load_raw_v1(path, bytes)
                      : load_nifti_subset(path, bytes);
    m.validate();
    return m;
}

void save_mask(const VoxelMask& mask, const std::string& path) {
    mask.validate();
    std::vector<unsigned char> out;
    out.reserve(40 + mask.data.size());
    out.insert(out.end(), {'S', 'F', 'M', '1'});
    for (int a = 0; a < 3; ++a) write_u32(out, mask.dims[a]);
    for (int a = 0; a < 3; ++a) write_f64(out, mask.spacing[a]);
    out.insert(out.end(), mask.data.begin(), mask.data.end());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    if (!f) throw IoError("write failure: " + path);
}

} // namespace segfair
