#include "vmslim/volume.hpp"

#include "vmslim/error.hpp"

#include <string>

namespace vmslim {

std::vector<PartitionEntry> parse_mbr(const ByteSource& raw) {
    if (raw.size() < SECTOR_SIZE)
        fail(Errc::too_short, "disk shorter than one sector");

    uint8_t sector[SECTOR_SIZE];
    raw.read_at(0, sector, sizeof sector);

    std::vector<PartitionEntry> entries;
    if (sector[510] != 0x55 || sector[511] != 0xAA)
        return entries;

    for (int slot = 0; slot < 4; ++slot) {
        const uint8_t* rec = sector + 446 + 16 * slot;
        PartitionEntry e;
        e.index = slot + 1;
        e.bootable = rec[0] == 0x80;
        e.type_code = rec[4];
        e.start_lba = get_u32le(rec + 8);
        e.sector_count = get_u32le(rec + 12);
        if (e.type_code == 0 || e.sector_count == 0)
            continue;
        uint64_t end = (static_cast<uint64_t>(e.start_lba) + e.sector_count) * SECTOR_SIZE;
        if (end > raw.size())
            fail(Errc::corrupt,
                 "partition " + std::to_string(slot + 1) + " extends past end of disk");
        entries.push_back(e);
    }
    return entries;
}

VolumeSlice::VolumeSlice(std::shared_ptr<const ByteSource> source, uint64_t offset,
                         uint64_t length)
    : source_(std::move(source)), offset_(offset), length_(length) {
    if (!source_)
        fail(Errc::io_failure, "null source");
    if (offset_ > source_->size() || length_ > source_->size() - offset_)
        fail(Errc::offset_out_of_range, "slice exceeds source bounds");
}

void VolumeSlice::read_at(uint64_t off, void* dst, size_t n) const {
    if (off > length_ || n > length_ - off)
        fail(Errc::out_of_range, "read past end of volume slice");
    source_->read_at(offset_ + off, dst, n);
}

std::vector<uint8_t> VolumeSlice::read(uint64_t off, size_t n) const {
    std::vector<uint8_t> buf(n);
    if (n > 0)
        read_at(off, buf.data(), n);
    return buf;
}

VolumeSlice open_volume(std::shared_ptr<const ByteSource> raw, const VolumeSelector& sel) {
    if (!raw)
        fail(Errc::io_failure, "null source");

    if (sel.kind == VolumeSelector::Kind::Offset) {
        if (sel.offset_bytes > raw->size())
            fail(Errc::offset_out_of_range,
                 "offset " + std::to_string(sel.offset_bytes) + " past end of source");
        uint64_t len = raw->size() - sel.offset_bytes;
        return VolumeSlice(std::move(raw), sel.offset_bytes, len);
    }

    auto entries = parse_mbr(*raw);
    for (const auto& e : entries) {
        if (e.type_code == MBR_TYPE_GPT_PROTECTIVE)
            fail(Errc::gpt_unsupported, "GPT protective partition found; only classic MBR supported");
    }

    const PartitionEntry* chosen = nullptr;
    if (sel.kind == VolumeSelector::Kind::Auto) {
        for (const auto& e : entries) {
            if (e.type_code == MBR_TYPE_LINUX) {
                chosen = &e;
                break;
            }
        }
        if (!chosen)
            fail(Errc::no_linux_partition, "no Linux (0x83) partition found");
    } else {
        for (const auto& e : entries) {
            if (e.index == sel.partition_index) {
                chosen = &e;
                break;
            }
        }
        if (!chosen)
            fail(Errc::no_linux_partition,
                 "partition " + std::to_string(sel.partition_index) + " not present");
    }

    uint64_t off = static_cast<uint64_t>(chosen->start_lba) * SECTOR_SIZE;
    uint64_t len = static_cast<uint64_t>(chosen->sector_count) * SECTOR_SIZE;
    return VolumeSlice(std::move(raw), off, len);
}

} // namespace vmslim
