#pragma once

#include "vmslim/bytes.hpp"

#include <cstdint>
#include <memory>
#include <vector>

namespace vmslim {

// Classic MBR: partition table at bytes 446-509 (four 16-byte records:
// status u8, CHS 3 bytes, type u8, CHS 3 bytes, start_lba u32 LE,
// sectors u32 LE), boot signature 0x55AA at bytes 510-511. Sectors are
// 512 bytes. GPT disks (protective type 0xEE) are rejected at open time.

inline constexpr uint8_t MBR_TYPE_LINUX = 0x83;
inline constexpr uint8_t MBR_TYPE_GPT_PROTECTIVE = 0xEE;
inline constexpr uint32_t SECTOR_SIZE = 512;

struct PartitionEntry {
    int index = 0; // table slot, 1-4 (primary partition numbering)
    bool bootable = false;
    uint8_t type_code = 0;
    uint32_t start_lba = 0;
    uint32_t sector_count = 0;
};

// Returns the populated primary entries in table order (empty slots are
// skipped); empty list when the boot signature is absent. Entries that
// point past the end of the disk are rejected as corrupt.
std::vector<PartitionEntry> parse_mbr(const ByteSource& raw);

// Bounds-checked window [offset, offset+length) over a byte source.
class VolumeSlice {
public:
    VolumeSlice() = default;
    VolumeSlice(std::shared_ptr<const ByteSource> source, uint64_t offset, uint64_t length);

    uint64_t offset() const { return offset_; }
    uint64_t length() const { return length_; }

    // off is relative to the slice.
    void read_at(uint64_t off, void* dst, size_t n) const;
    std::vector<uint8_t> read(uint64_t off, size_t n) const;

private:
    std::shared_ptr<const ByteSource> source_;
    uint64_t offset_ = 0;
    uint64_t length_ = 0;
};

struct VolumeSelector {
    enum class Kind { Auto, Partition, Offset };

    Kind kind = Kind::Auto;
    int partition_index = 0;
    uint64_t offset_bytes = 0;

    static VolumeSelector auto_detect() { return {}; }
    static VolumeSelector partition(int index) {
        return {Kind::Partition, index, 0};
    }
    static VolumeSelector at_offset(uint64_t off) {
        return {Kind::Offset, 0, off};
    }
};

// Auto picks the first type-0x83 partition; Partition picks a table slot;
// Offset slices from the given byte to the end of the source.
VolumeSlice open_volume(std::shared_ptr<const ByteSource> raw, const VolumeSelector& sel);

} // namespace vmslim
