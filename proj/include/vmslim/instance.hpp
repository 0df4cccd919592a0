#pragma once

#include "vmslim/bytes.hpp"
#include "vmslim/catalog.hpp"
#include "vmslim/ext2.hpp"
#include "vmslim/parallel.hpp"
#include "vmslim/sha256.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace vmslim {

// Deterministic instance packages: the files one catalog names, extracted
// from a guest filesystem and serialized as a single VSIP file.
//
// VSIP v1, little-endian:
//   magic "VSIP" | version u16 = 1 | flags u16 = 0 | entry_count u32
//   entries, sorted byte-wise by path:
//     path_len u16 | path (UTF-8, absolute) | kind u8 (0 file, 1 dir,
//     2 symlink, 3 other) | mode u32 | size u64 | blob_offset u64 (absolute
//     file offset, 0 for dir/other) | hash 32 bytes (SHA-256, zero for
//     dir/other)
//   missing_count u32 | missing records (path_len u16 | path)
//   blob section: file/symlink contents concatenated in entry order, no
//   padding.

inline constexpr uint16_t VSIP_VERSION = 1;
inline constexpr char VSIP_MAGIC[4] = {'V', 'S', 'I', 'P'};

struct ManifestEntry {
    std::string path;
    FileKind kind = FileKind::File;
    uint32_t mode = 0;        // permission bits
    uint64_t size = 0;        // blob length; 0 for dir/other
    uint64_t blob_offset = 0; // offset in the serialized package; 0 for dir/other
    Sha256Digest hash{};      // zero for dir/other

    bool has_blob() const { return kind == FileKind::File || kind == FileKind::Symlink; }
};

struct InstanceManifest {
    uint16_t format_version = VSIP_VERSION;
    std::string label; // not serialized; unpack leaves it empty
    std::vector<ManifestEntry> entries;  // sorted byte-wise by path
    std::vector<std::string> missing;    // sorted; catalog paths not found
};

struct InstancePackage {
    InstanceManifest manifest;
    std::vector<uint8_t> blobs; // concatenated in entry order
};

// Serialized size of everything before the blob section.
uint64_t header_size(const InstanceManifest& m);
uint64_t packed_size(const InstancePackage& p);

// Expands the catalog closure, resolves each path (final symlinks are kept
// as symlinks), reads and hashes contents, and assembles the package in
// sorted path order. Missing paths are recorded, never fatal. File reads
// and hashing may run in parallel; output is identical across modes.
InstancePackage extract(const FsVolume& fs, const Catalog& c, ExecMode mode = ExecMode::Auto);

// Plain single-threaded implementation kept as the comparison baseline.
InstancePackage extract_reference(const FsVolume& fs, const Catalog& c);

void pack(const InstancePackage& p, ByteSink& sink);
std::vector<uint8_t> pack_bytes(const InstancePackage& p);

// Parses and fully validates a serialized package, including every content
// hash. The in-memory label is not part of the format and comes back empty.
InstancePackage unpack(const ByteSource& src);
InstancePackage unpack(const std::vector<uint8_t>& bytes);

// Field-for-field equality of the serialized content; label excluded.
bool same_content(const InstancePackage& a, const InstancePackage& b);

struct OverlapReport {
    std::vector<std::string> paths; // present in both packages
    uint64_t total_bytes = 0;       // summed entry sizes of the overlap
};

struct InstancePair {
    InstancePackage boot;
    InstancePackage app;
    OverlapReport overlap;
};

InstancePair instance_pair(const FsVolume& fs, const Catalog& boot, const Catalog& app,
                           ExecMode mode = ExecMode::Auto);

} // namespace vmslim
