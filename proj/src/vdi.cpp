#include "vmslim/vdi.hpp"

#include "vmslim/error.hpp"

#include <algorithm>
#include <cstring>
#include <string>
#include <unordered_set>

namespace vmslim {

namespace {

std::string hex32(uint32_t v) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "0x%08X", v);
    return buf;
}

} // namespace

VdiHeaderFields parse_vdi_header(const uint8_t* p, size_t len) {
    if (len < VDI_HEADER_BYTES)
        fail(Errc::truncated_file, "file too short for a VDI header");

    VdiHeaderFields f;
    std::memcpy(f.pre.info_text.data(), p, 64);
    f.pre.signature = get_u32le(p + 64);
    f.pre.version_minor = get_u16le(p + 68);
    f.pre.version_major = get_u16le(p + 70);

    if (f.pre.signature != VDI_SIGNATURE)
        fail(Errc::bad_signature,
             "bad VDI signature " + hex32(f.pre.signature) + " (expected " +
                 hex32(VDI_SIGNATURE) + ")");
    if (f.pre.version_major != 1 || f.pre.version_minor != 1)
        fail(Errc::unsupported_version,
             "unsupported VDI version " + std::to_string(f.pre.version_major) + "." +
                 std::to_string(f.pre.version_minor) + " (only 1.1 accepted)");

    VdiHeader& h = f.header;
    h.header_size = get_u32le(p + 72);
    uint32_t type = get_u32le(p + 76);
    if (type != 1 && type != 2)
        fail(Errc::corrupt_header,
             "image_type " + std::to_string(type) + " not supported (1 dynamic, 2 fixed)");
    h.image_type = static_cast<VdiImageType>(type);
    h.flags = get_u32le(p + 80);
    std::memcpy(h.description.data(), p + 84, 256);
    h.blocks_offset = get_u32le(p + 340);
    h.data_offset = get_u32le(p + 344);
    h.geometry.cylinders = get_u32le(p + 348);
    h.geometry.heads = get_u32le(p + 352);
    h.geometry.sectors = get_u32le(p + 356);
    h.geometry.sector_size = get_u32le(p + 360);
    h.disk_size = get_u64le(p + 368);
    h.block_size = get_u32le(p + 376);
    h.block_extra = get_u32le(p + 380);
    h.blocks_total = get_u32le(p + 384);
    h.blocks_allocated = get_u32le(p + 388);
    for (int i = 0; i < 4; ++i)
        std::memcpy(h.uuids[i].data(), p + 392 + 16 * i, 16);

    if (h.header_size < VDI_HEADER_BYTES - 72)
        fail(Errc::corrupt_header, "header_size too small: " + std::to_string(h.header_size));
    if (h.block_size == 0)
        fail(Errc::corrupt_header, "block_size is zero");
    if (h.disk_size != static_cast<uint64_t>(h.blocks_total) * h.block_size)
        fail(Errc::corrupt_header, "disk_size does not equal blocks_total * block_size");
    if (h.blocks_allocated > h.blocks_total)
        fail(Errc::corrupt_header, "blocks_allocated exceeds blocks_total");
    if (static_cast<uint64_t>(h.data_offset) <
        static_cast<uint64_t>(h.blocks_offset) + 4ull * h.blocks_total)
        fail(Errc::corrupt_header, "data_offset overlaps the block map");

    return f;
}

std::array<uint8_t, VDI_HEADER_BYTES> serialize_vdi_header(const VdiHeaderFields& f) {
    std::array<uint8_t, VDI_HEADER_BYTES> out{};
    uint8_t* p = out.data();
    std::memcpy(p, f.pre.info_text.data(), 64);
    put_u32le(p + 64, f.pre.signature);
    put_u16le(p + 68, f.pre.version_minor);
    put_u16le(p + 70, f.pre.version_major);
    put_u32le(p + 72, f.header.header_size);
    put_u32le(p + 76, static_cast<uint32_t>(f.header.image_type));
    put_u32le(p + 80, f.header.flags);
    std::memcpy(p + 84, f.header.description.data(), 256);
    put_u32le(p + 340, f.header.blocks_offset);
    put_u32le(p + 344, f.header.data_offset);
    put_u32le(p + 348, f.header.geometry.cylinders);
    put_u32le(p + 352, f.header.geometry.heads);
    put_u32le(p + 356, f.header.geometry.sectors);
    put_u32le(p + 360, f.header.geometry.sector_size);
    put_u64le(p + 368, f.header.disk_size);
    put_u32le(p + 376, f.header.block_size);
    put_u32le(p + 380, f.header.block_extra);
    put_u32le(p + 384, f.header.blocks_total);
    put_u32le(p + 388, f.header.blocks_allocated);
    for (int i = 0; i < 4; ++i)
        std::memcpy(p + 392 + 16 * i, f.header.uuids[i].data(), 16);
    return out;
}

VdiImage VdiImage::parse(std::shared_ptr<const ByteSource> source) {
    if (!source)
        fail(Errc::io_failure, "null source");
    const uint64_t flen = source->size();
    if (flen < 512)
        fail(Errc::truncated_file, "file shorter than 512 bytes");

    std::array<uint8_t, VDI_HEADER_BYTES> hdr{};
    if (flen < VDI_HEADER_BYTES)
        fail(Errc::truncated_file, "file too short for a VDI header");
    source->read_at(0, hdr.data(), hdr.size());

    VdiImage img;
    img.fields_ = parse_vdi_header(hdr.data(), hdr.size());
    const VdiHeader& h = img.fields_.header;

    if (flen < h.data_offset)
        fail(Errc::truncated_file, "file shorter than data_offset");
    uint64_t map_end = static_cast<uint64_t>(h.blocks_offset) + 4ull * h.blocks_total;
    if (map_end > flen)
        fail(Errc::truncated_file, "block map extends past end of file");

    std::vector<uint8_t> raw_map = read_bytes(*source, h.blocks_offset, 4 * h.blocks_total);
    img.block_map_.resize(h.blocks_total);
    uint32_t allocated = 0;
    std::unordered_set<uint32_t> seen;
    seen.reserve(h.blocks_allocated);
    for (uint32_t i = 0; i < h.blocks_total; ++i) {
        uint32_t e = get_u32le(raw_map.data() + 4 * i);
        img.block_map_[i] = e;
        if (e == VDI_BLOCK_UNALLOCATED || e == VDI_BLOCK_ZERO)
            continue;
        ++allocated;
        if (!seen.insert(e).second)
            fail(Errc::corrupt_header,
                 "block_map[" + std::to_string(i) + "]: duplicate physical block " +
                     std::to_string(e));
        uint64_t end = static_cast<uint64_t>(h.data_offset) +
                       (static_cast<uint64_t>(e) + 1) * h.block_size;
        if (end > flen)
            fail(Errc::corrupt_header, "block_map[" + std::to_string(i) +
                                           "]: physical block " + std::to_string(e) +
                                           " past end of file");
    }
    if (allocated != h.blocks_allocated)
        fail(Errc::corrupt_header, "blocks_allocated is " + std::to_string(h.blocks_allocated) +
                                       " but map holds " + std::to_string(allocated) +
                                       " physical entries");

    img.source_ = std::move(source);
    return img;
}

void VdiImage::read_virtual(uint64_t off, void* dst, size_t len) const {
    const VdiHeader& h = fields_.header;
    if (off > h.disk_size || len > h.disk_size - off)
        fail(Errc::out_of_range, "virtual read past disk_size");

    auto* out = static_cast<uint8_t*>(dst);
    uint64_t pos = off;
    size_t remaining = len;
    while (remaining > 0) {
        uint64_t block = pos / h.block_size;
        uint32_t in_block = static_cast<uint32_t>(pos % h.block_size);
        size_t chunk = std::min<uint64_t>(remaining, h.block_size - in_block);
        uint32_t entry = block_map_[block];
        if (entry == VDI_BLOCK_UNALLOCATED || entry == VDI_BLOCK_ZERO) {
            std::memset(out, 0, chunk);
        } else {
            uint64_t src_off = static_cast<uint64_t>(h.data_offset) +
                               static_cast<uint64_t>(entry) * h.block_size + in_block;
            source_->read_at(src_off, out, chunk);
        }
        out += chunk;
        pos += chunk;
        remaining -= chunk;
    }
}

std::vector<uint8_t> VdiImage::read_virtual(uint64_t off, size_t len) const {
    std::vector<uint8_t> buf(len);
    if (len > 0)
        read_virtual(off, buf.data(), len);
    return buf;
}

void VdiImage::to_raw(ByteSink& sink, ExecMode mode) const {
    const VdiHeader& h = fields_.header;
    if (h.blocks_total == 0)
        return;

    const bool parallel = use_parallel(mode);
    // Window sized for ~32 MiB of staging, at least one block per thread.
    uint32_t window = static_cast<uint32_t>(
        std::min<uint64_t>(h.blocks_total,
                           std::max<uint64_t>(max_threads(), (32ull << 20) / h.block_size)));
    if (window == 0)
        window = 1;

    std::vector<uint8_t> buf(static_cast<size_t>(window) * h.block_size);
    for (uint32_t base = 0; base < h.blocks_total; base += window) {
        uint32_t count = std::min(window, h.blocks_total - base);
        detail::parallel_for(count, parallel, [&](size_t i) {
            uint8_t* dst = buf.data() + i * h.block_size;
            uint32_t entry = block_map_[base + i];
            if (entry == VDI_BLOCK_UNALLOCATED || entry == VDI_BLOCK_ZERO) {
                std::memset(dst, 0, h.block_size);
            } else {
                uint64_t src_off = static_cast<uint64_t>(h.data_offset) +
                                   static_cast<uint64_t>(entry) * h.block_size;
                source_->read_at(src_off, dst, h.block_size);
            }
        });
        sink.write(buf.data(), static_cast<size_t>(count) * h.block_size);
    }
}

void to_raw_reference(const VdiImage& img, ByteSink& sink) {
    const VdiHeader& h = img.header();
    std::vector<uint8_t> block(h.block_size);
    for (uint32_t i = 0; i < h.blocks_total; ++i) {
        uint32_t entry = img.block_map()[i];
        if (entry == VDI_BLOCK_UNALLOCATED || entry == VDI_BLOCK_ZERO) {
            std::fill(block.begin(), block.end(), uint8_t{0});
        } else {
            img.source().read_at(static_cast<uint64_t>(h.data_offset) +
                                     static_cast<uint64_t>(entry) * h.block_size,
                                 block.data(), h.block_size);
        }
        sink.write(block.data(), block.size());
    }
}

namespace {

class VdiVirtualSource final : public ByteSource {
public:
    explicit VdiVirtualSource(VdiImage img) : img_(std::move(img)) {}

    uint64_t size() const override { return img_.header().disk_size; }

    void read_at(uint64_t off, void* dst, size_t n) const override {
        img_.read_virtual(off, dst, n);
    }

private:
    VdiImage img_;
};

} // namespace

std::shared_ptr<const ByteSource> make_virtual_source(VdiImage img) {
    return std::make_shared<VdiVirtualSource>(std::move(img));
}

} // namespace vmslim
