#pragma once

#include "vmslim/volume.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace vmslim {

// Read-only ext2/ext3 reader over a VolumeSlice, standing in for a host-side
// mount. ext3 journals are ignored; ext4-only incompatible features are
// rejected by name. Layout per the public ext2 specification: superblock at
// byte 1024 of the volume, magic 0xEF53, little-endian throughout.

inline constexpr uint16_t EXT2_SUPER_MAGIC = 0xEF53;
inline constexpr uint32_t EXT2_ROOT_INODE = 2;

// s_feature_incompat bits
inline constexpr uint32_t EXT2_INCOMPAT_COMPRESSION = 0x0001;
inline constexpr uint32_t EXT2_INCOMPAT_FILETYPE = 0x0002;
inline constexpr uint32_t EXT3_INCOMPAT_RECOVER = 0x0004;
inline constexpr uint32_t EXT3_INCOMPAT_JOURNAL_DEV = 0x0008;
inline constexpr uint32_t EXT2_INCOMPAT_META_BG = 0x0010;
inline constexpr uint32_t EXT4_INCOMPAT_EXTENTS = 0x0040;
inline constexpr uint32_t EXT4_INCOMPAT_64BIT = 0x0080;

// s_feature_compat bits (informational only for a reader)
inline constexpr uint32_t EXT3_COMPAT_HAS_JOURNAL = 0x0004;

// s_feature_ro_compat bits
inline constexpr uint32_t EXT2_RO_COMPAT_LARGE_FILE = 0x0002;

struct Superblock {
    uint32_t inodes_count = 0;
    uint32_t blocks_count = 0;
    uint32_t r_blocks_count = 0;
    uint32_t free_blocks_count = 0;
    uint32_t free_inodes_count = 0;
    uint32_t first_data_block = 0;
    uint32_t log_block_size = 0;
    uint32_t blocks_per_group = 0;
    uint32_t inodes_per_group = 0;
    uint16_t magic = 0;
    uint32_t rev_level = 0;
    uint32_t first_ino = 11;
    uint16_t inode_size = 128;
    uint32_t feature_compat = 0;
    uint32_t feature_incompat = 0;
    uint32_t feature_ro_compat = 0;

    uint32_t block_size() const { return 1024u << log_block_size; }
    uint32_t group_count() const {
        return (blocks_count - first_data_block + blocks_per_group - 1) / blocks_per_group;
    }
    bool has_filetype() const { return (feature_incompat & EXT2_INCOMPAT_FILETYPE) != 0; }
};

struct GroupDesc {
    uint32_t block_bitmap = 0;
    uint32_t inode_bitmap = 0;
    uint32_t inode_table = 0;
    uint16_t free_blocks_count = 0;
    uint16_t free_inodes_count = 0;
    uint16_t used_dirs_count = 0;
};

enum class FileKind : uint8_t {
    File = 0,
    Dir = 1,
    Symlink = 2,
    Other = 3, // devices, fifos, sockets
};

const char* kind_name(FileKind k);

struct Inode {
    uint32_t number = 0;
    uint16_t mode = 0; // type + permission bits
    uint16_t links_count = 0;
    uint64_t size = 0;
    uint32_t blocks_512 = 0; // 512-byte units, indirect blocks included
    uint32_t flags = 0;
    uint32_t file_acl = 0;
    std::array<uint32_t, 15> block{}; // 12 direct + single/double/triple indirect

    FileKind kind() const;
    bool is_dir() const { return (mode & 0xF000) == 0x4000; }
    bool is_regular() const { return (mode & 0xF000) == 0x8000; }
    bool is_symlink() const { return (mode & 0xF000) == 0xA000; }
    uint16_t permissions() const { return mode & 07777; }
};

struct DirEntry {
    uint32_t inode = 0;
    std::string name;
};

struct WalkEntry {
    std::string path;
    FileKind kind = FileKind::File;
    uint64_t size_bytes = 0;
    uint64_t disk_usage_bytes = 0; // inode.blocks_512 * 512
    uint32_t inode = 0;
    uint16_t mode = 0;
    uint16_t links_count = 0;
};

struct FsStats {
    uint64_t used_bytes = 0;  // (blocks_count - free_blocks_count) * block_size
    uint64_t total_bytes = 0; // blocks_count * block_size
    uint64_t content_bytes = 0; // regular-file sizes, hardlinks counted once
    uint64_t file_count = 0;    // unique inodes per kind
    uint64_t dir_count = 0;
    uint64_t symlink_count = 0;
    uint64_t other_count = 0;
};

class FsVolume {
public:
    // Validates the superblock and group descriptor table. Revisions 0 and 1
    // are accepted; any incompatible feature other than filetype-in-dirent
    // is rejected with the flag named in the error.
    static FsVolume open(VolumeSlice slice);

    const Superblock& superblock() const { return sb_; }
    const std::vector<GroupDesc>& groups() const { return groups_; }
    const VolumeSlice& slice() const { return slice_; }

    Inode read_inode(uint32_t number) const;

    // Walks from the root inode. The final path component is never
    // dereferenced when it is a symlink; intermediate symlinks are followed
    // with a 40-hop cap.
    Inode resolve_path(std::string_view abs_path) const;

    // Full contents of a regular file or symlink (symlink value = target
    // bytes). Holes read as zeros; fast symlinks come from the inline
    // block-pointer area.
    std::vector<uint8_t> read_file(const Inode& ino) const;
    std::string read_symlink_target(const Inode& ino) const;

    std::vector<DirEntry> read_dir(const Inode& dir) const;

    // Deterministic depth-first enumeration, children in byte-wise name
    // order; "." and ".." are skipped. Every hardlink path is emitted.
    void walk_tree(const std::function<void(const WalkEntry&)>& visit) const;
    std::vector<WalkEntry> walk_tree() const;

    FsStats stats() const;

    uint32_t block_size() const { return sb_.block_size(); }

private:
    explicit FsVolume(VolumeSlice s) : slice_(std::move(s)) {}

    std::vector<uint8_t> read_block(uint32_t block_no) const;
    void enumerate_file_blocks(const Inode& ino,
                               const std::function<void(uint64_t logical, uint32_t phys)>& fn) const;
    void walk_dir(const Inode& dir, const std::string& path,
                  std::vector<uint32_t>& dir_stack,
                  const std::function<void(const WalkEntry&)>& visit) const;

    VolumeSlice slice_;
    Superblock sb_;
    std::vector<GroupDesc> groups_;
};

} // namespace vmslim
