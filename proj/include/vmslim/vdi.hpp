#pragma once

#include "vmslim/bytes.hpp"
#include "vmslim/parallel.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <vector>

namespace vmslim {

// VirtualBox VDI 1.1 container layout (all integers little-endian, offsets
// from file start):
//
//     0    info text (64 bytes, ASCII, NUL padded)
//    64    signature u32 = 0xBEDA107F
//    68    version u32 (minor u16, major u16) = 0x00010001
//    72    header_size u32
//    76    image_type u32 (1 dynamic, 2 fixed)
//    80    flags u32
//    84    description (256 bytes)
//   340    blocks_offset u32   (start of the block map)
//   344    data_offset u32     (start of the first data block)
//   348    geometry: cylinders, heads, sectors, sector_size (4 x u32)
//   364    unused u32
//   368    disk_size u64
//   376    block_size u32
//   380    block_extra u32
//   384    blocks_total u32
//   388    blocks_allocated u32
//   392    four UUIDs (64 bytes)
//
// Block map: blocks_total x u32 at blocks_offset. An entry is a physical
// block index, VDI_BLOCK_UNALLOCATED, or VDI_BLOCK_ZERO.

inline constexpr uint32_t VDI_SIGNATURE = 0xBEDA107Fu;
inline constexpr uint32_t VDI_BLOCK_UNALLOCATED = 0xFFFFFFFFu;
inline constexpr uint32_t VDI_BLOCK_ZERO = 0xFFFFFFFEu;
inline constexpr size_t VDI_HEADER_BYTES = 456; // through the UUIDs

enum class VdiImageType : uint32_t {
    Dynamic = 1,
    Fixed = 2,
};

struct VdiPreHeader {
    std::array<char, 64> info_text{};
    uint32_t signature = 0;
    uint16_t version_major = 0;
    uint16_t version_minor = 0;
};

struct VdiGeometry {
    uint32_t cylinders = 0;
    uint32_t heads = 0;
    uint32_t sectors = 0;
    uint32_t sector_size = 0;
};

struct VdiHeader {
    uint32_t header_size = 0;
    VdiImageType image_type = VdiImageType::Dynamic;
    uint32_t flags = 0;
    std::array<char, 256> description{};
    uint32_t blocks_offset = 0;
    uint32_t data_offset = 0;
    VdiGeometry geometry;
    uint64_t disk_size = 0;
    uint32_t block_size = 0;
    uint32_t block_extra = 0;
    uint32_t blocks_total = 0;
    uint32_t blocks_allocated = 0;
    std::array<std::array<uint8_t, 16>, 4> uuids{};
};

struct VdiHeaderFields {
    VdiPreHeader pre;
    VdiHeader header;
};

// Parses just the fixed header region (first VDI_HEADER_BYTES bytes).
VdiHeaderFields parse_vdi_header(const uint8_t* data, size_t len);

// Inverse of parse_vdi_header; unused/reserved bytes are written as zero.
std::array<uint8_t, VDI_HEADER_BYTES> serialize_vdi_header(const VdiHeaderFields& f);

// A parsed, validated VDI image. Immutable after parse; reads are safe from
// multiple threads.
class VdiImage {
public:
    // Validates signature, version 1.1, header invariants and the complete
    // block map (marker values aside, entries must be unique physical
    // indices inside the container, blocks_allocated of them in total).
    static VdiImage parse(std::shared_ptr<const ByteSource> source);

    const VdiPreHeader& pre_header() const { return fields_.pre; }
    const VdiHeader& header() const { return fields_.header; }
    const std::vector<uint32_t>& block_map() const { return block_map_; }
    const ByteSource& source() const { return *source_; }
    std::shared_ptr<const ByteSource> source_ptr() const { return source_; }

    // Reads len bytes of the virtual (guest-visible) disk starting at off.
    // Unallocated and zero blocks read as 0x00.
    void read_virtual(uint64_t off, void* dst, size_t len) const;
    std::vector<uint8_t> read_virtual(uint64_t off, size_t len) const;

    // Streams the flat raw disk (exactly disk_size bytes, no container
    // structures) into sink. Blocks are staged through a bounded window
    // whose fill loop is the OpenMP kernel; writes stay in logical order,
    // so output is identical for every mode and thread count.
    void to_raw(ByteSink& sink, ExecMode mode = ExecMode::Auto) const;

private:
    VdiHeaderFields fields_;
    std::vector<uint32_t> block_map_;
    std::shared_ptr<const ByteSource> source_;
};

// One-block-at-a-time reference flattener, kept for tests and the benchmark.
void to_raw_reference(const VdiImage& img, ByteSink& sink);

// ByteSource view of the virtual disk, for layering the volume and
// filesystem readers over a VDI without materializing the raw image.
std::shared_ptr<const ByteSource> make_virtual_source(VdiImage img);

} // namespace vmslim
