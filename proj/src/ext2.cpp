#include "vmslim/ext2.hpp"

#include "vmslim/bytes.hpp"
#include "vmslim/error.hpp"

#include <algorithm>
#include <cstring>
#include <deque>
#include <functional>
#include <unordered_set>

namespace vmslim {

const char* kind_name(FileKind k) {
    switch (k) {
    case FileKind::File: return "file";
    case FileKind::Dir: return "dir";
    case FileKind::Symlink: return "symlink";
    case FileKind::Other: return "other";
    }
    return "?";
}

FileKind Inode::kind() const {
    switch (mode & 0xF000) {
    case 0x8000: return FileKind::File;
    case 0x4000: return FileKind::Dir;
    case 0xA000: return FileKind::Symlink;
    default: return FileKind::Other;
    }
}

namespace {

std::string incompat_flag_name(uint32_t bit) {
    switch (bit) {
    case EXT2_INCOMPAT_COMPRESSION: return "compression";
    case EXT3_INCOMPAT_RECOVER: return "needs_recovery";
    case EXT3_INCOMPAT_JOURNAL_DEV: return "journal_dev";
    case EXT2_INCOMPAT_META_BG: return "meta_bg";
    case EXT4_INCOMPAT_EXTENTS: return "extents";
    case EXT4_INCOMPAT_64BIT: return "64bit";
    default: {
        char buf[32];
        std::snprintf(buf, sizeof buf, "incompat:0x%x", bit);
        return buf;
    }
    }
}

Superblock parse_superblock(const uint8_t* p) {
    Superblock sb;
    sb.inodes_count = get_u32le(p + 0);
    sb.blocks_count = get_u32le(p + 4);
    sb.r_blocks_count = get_u32le(p + 8);
    sb.free_blocks_count = get_u32le(p + 12);
    sb.free_inodes_count = get_u32le(p + 16);
    sb.first_data_block = get_u32le(p + 20);
    sb.log_block_size = get_u32le(p + 24);
    sb.blocks_per_group = get_u32le(p + 32);
    sb.inodes_per_group = get_u32le(p + 40);
    sb.magic = get_u16le(p + 56);
    sb.rev_level = get_u32le(p + 76);
    if (sb.rev_level >= 1) {
        sb.first_ino = get_u32le(p + 84);
        sb.inode_size = get_u16le(p + 88);
        sb.feature_compat = get_u32le(p + 92);
        sb.feature_incompat = get_u32le(p + 96);
        sb.feature_ro_compat = get_u32le(p + 100);
    }
    return sb;
}

} // namespace

FsVolume FsVolume::open(VolumeSlice slice) {
    if (slice.length() < 2048)
        fail(Errc::too_short, "volume too small to hold an ext2 superblock");

    FsVolume fs(std::move(slice));
    uint8_t raw[1024];
    fs.slice_.read_at(1024, raw, sizeof raw);
    Superblock sb = parse_superblock(raw);

    if (sb.magic != EXT2_SUPER_MAGIC)
        fail(Errc::bad_magic, "superblock magic " + std::to_string(sb.magic) +
                                  ", expected 61267 (0xEF53)");
    if (sb.rev_level > 1)
        fail(Errc::unsupported_feature,
             "superblock revision " + std::to_string(sb.rev_level));
    if (sb.log_block_size > 2)
        fail(Errc::unsupported_feature,
             "block size " + std::to_string(1024ull << sb.log_block_size) +
                 " (supported: 1024, 2048, 4096)");

    uint32_t unsupported = sb.feature_incompat & ~EXT2_INCOMPAT_FILETYPE;
    if (unsupported) {
        std::string names;
        for (uint32_t bit = 1; bit; bit <<= 1) {
            if (unsupported & bit) {
                if (!names.empty()) names += ", ";
                names += incompat_flag_name(bit);
            }
        }
        fail(Errc::unsupported_feature, "incompatible feature(s): " + names);
    }

    const uint64_t bs = sb.block_size();
    uint32_t expect_first = bs == 1024 ? 1 : 0;
    if (sb.first_data_block != expect_first)
        fail(Errc::corrupt, "first_data_block " + std::to_string(sb.first_data_block) +
                                " for block size " + std::to_string(bs));
    if (sb.blocks_per_group == 0 || sb.inodes_per_group == 0)
        fail(Errc::corrupt, "zero blocks_per_group or inodes_per_group");
    if (sb.blocks_count <= sb.first_data_block)
        fail(Errc::corrupt, "block count " + std::to_string(sb.blocks_count));
    if (sb.free_blocks_count > sb.blocks_count)
        fail(Errc::corrupt, "free block count exceeds block count");
    if (sb.free_inodes_count > sb.inodes_count)
        fail(Errc::corrupt, "free inode count exceeds inode count");
    if (sb.inode_size < 128 || (sb.inode_size & (sb.inode_size - 1)) || sb.inode_size > bs)
        fail(Errc::corrupt, "inode size " + std::to_string(sb.inode_size));
    if (fs.slice_.length() < uint64_t(sb.blocks_count) * bs)
        fail(Errc::too_short, "volume shorter than filesystem (" +
                                  std::to_string(uint64_t(sb.blocks_count) * bs) + " bytes needed)");

    uint32_t groups = sb.group_count();
    if (uint64_t(sb.inodes_per_group) * groups < sb.inodes_count)
        fail(Errc::corrupt, "inode count exceeds inodes_per_group * groups");

    // Descriptor table occupies the blocks right after the superblock's block.
    fs.sb_ = sb;
    uint64_t gd_off = uint64_t(sb.first_data_block + 1) * bs;
    std::vector<uint8_t> gd(uint64_t(groups) * 32);
    if (gd_off + gd.size() > fs.slice_.length())
        fail(Errc::too_short, "group descriptor table extends past volume end");
    fs.slice_.read_at(gd_off, gd.data(), gd.size());
    fs.groups_.reserve(groups);
    for (uint32_t g = 0; g < groups; ++g) {
        const uint8_t* d = gd.data() + uint64_t(g) * 32;
        GroupDesc desc;
        desc.block_bitmap = get_u32le(d + 0);
        desc.inode_bitmap = get_u32le(d + 4);
        desc.inode_table = get_u32le(d + 8);
        desc.free_blocks_count = get_u16le(d + 12);
        desc.free_inodes_count = get_u16le(d + 14);
        desc.used_dirs_count = get_u16le(d + 16);
        if (desc.block_bitmap >= sb.blocks_count || desc.inode_bitmap >= sb.blocks_count ||
            desc.inode_table >= sb.blocks_count)
            fail(Errc::corrupt, "group " + std::to_string(g) + " descriptor points past volume");
        fs.groups_.push_back(desc);
    }
    return fs;
}

std::vector<uint8_t> FsVolume::read_block(uint32_t block_no) const {
    if (block_no >= sb_.blocks_count)
        fail(Errc::corrupt, "block pointer " + std::to_string(block_no) + " out of range");
    const uint32_t bs = block_size();
    std::vector<uint8_t> buf(bs);
    slice_.read_at(uint64_t(block_no) * bs, buf.data(), bs);
    return buf;
}

Inode FsVolume::read_inode(uint32_t number) const {
    if (number == 0 || number > sb_.inodes_count)
        fail(Errc::out_of_range, "inode " + std::to_string(number) + " out of range");
    uint32_t group = (number - 1) / sb_.inodes_per_group;
    uint32_t index = (number - 1) % sb_.inodes_per_group;
    const GroupDesc& gd = groups_[group];
    uint64_t off = uint64_t(gd.inode_table) * block_size() + uint64_t(index) * sb_.inode_size;
    if (off + sb_.inode_size > slice_.length())
        fail(Errc::corrupt, "inode " + std::to_string(number) + " lies past volume end");

    uint8_t raw[128];
    slice_.read_at(off, raw, sizeof raw);

    Inode ino;
    ino.number = number;
    ino.mode = get_u16le(raw + 0);
    ino.size = get_u32le(raw + 4);
    ino.links_count = get_u16le(raw + 26);
    ino.blocks_512 = get_u32le(raw + 28);
    ino.flags = get_u32le(raw + 32);
    for (int i = 0; i < 15; ++i)
        ino.block[i] = get_u32le(raw + 40 + 4 * i);
    ino.file_acl = get_u32le(raw + 104);
    if (ino.is_regular() && sb_.rev_level >= 1 &&
        (sb_.feature_ro_compat & EXT2_RO_COMPAT_LARGE_FILE))
        ino.size |= uint64_t(get_u32le(raw + 108)) << 32;
    return ino;
}

// Calls fn(logical, physical) for every data block the file spans, holes
// included (physical == 0). Indirect subtrees that are absent count as holes
// for their whole span.
void FsVolume::enumerate_file_blocks(
    const Inode& ino, const std::function<void(uint64_t, uint32_t)>& fn) const {
    const uint64_t bs = block_size();
    const uint64_t ptrs = bs / 4;
    const uint64_t total = (ino.size + bs - 1) / bs;
    if (total == 0) return;

    auto span_of = [&](int depth) {
        uint64_t s = 1;
        for (int i = 0; i < depth; ++i) s *= ptrs;
        return s;
    };

    std::function<void(uint32_t, int, uint64_t)> visit = [&](uint32_t phys, int depth,
                                                             uint64_t base) {
        if (base >= total) return;
        if (depth == 0) {
            fn(base, phys);
            return;
        }
        if (phys == 0) {
            uint64_t end = std::min(total, base + span_of(depth));
            for (uint64_t l = base; l < end; ++l) fn(l, 0);
            return;
        }
        std::vector<uint8_t> ind = read_block(phys);
        uint64_t sub = span_of(depth - 1);
        for (uint64_t i = 0; i < ptrs; ++i) {
            uint64_t child_base = base + i * sub;
            if (child_base >= total) break;
            visit(get_u32le(ind.data() + i * 4), depth - 1, child_base);
        }
    };

    for (int i = 0; i < 12; ++i) visit(ino.block[i], 0, i);
    visit(ino.block[12], 1, 12);
    visit(ino.block[13], 2, 12 + ptrs);
    visit(ino.block[14], 3, 12 + ptrs + ptrs * ptrs);
}

std::vector<uint8_t> FsVolume::read_file(const Inode& ino) const {
    if (ino.is_symlink()) {
        std::string t = read_symlink_target(ino);
        return std::vector<uint8_t>(t.begin(), t.end());
    }
    if (!ino.is_regular())
        fail(Errc::corrupt, "inode " + std::to_string(ino.number) +
                                " is not a regular file or symlink");
    const uint64_t bs = block_size();
    std::vector<uint8_t> out(ino.size, 0);
    enumerate_file_blocks(ino, [&](uint64_t logical, uint32_t phys) {
        if (phys == 0) return; // hole, already zero
        std::vector<uint8_t> blk = read_block(phys);
        uint64_t off = logical * bs;
        size_t n = size_t(std::min<uint64_t>(bs, out.size() - off));
        std::memcpy(out.data() + off, blk.data(), n);
    });
    return out;
}

std::string FsVolume::read_symlink_target(const Inode& ino) const {
    if (!ino.is_symlink())
        fail(Errc::corrupt, "inode " + std::to_string(ino.number) + " is not a symlink");
    if (ino.size >= block_size())
        fail(Errc::corrupt, "symlink target length " + std::to_string(ino.size));
    if (ino.size < 60 && ino.blocks_512 == 0) {
        // fast symlink: target bytes live in the block-pointer area
        uint8_t raw[60];
        for (int i = 0; i < 15; ++i) put_u32le(raw + 4 * i, ino.block[i]);
        return std::string(reinterpret_cast<char*>(raw), size_t(ino.size));
    }
    std::vector<uint8_t> blk = read_block(ino.block[0]);
    return std::string(reinterpret_cast<char*>(blk.data()), size_t(ino.size));
}

std::vector<DirEntry> FsVolume::read_dir(const Inode& dir) const {
    if (!dir.is_dir())
        fail(Errc::not_a_directory, "inode " + std::to_string(dir.number) + " is not a directory");
    const uint32_t bs = block_size();
    if (dir.size % bs)
        fail(Errc::corrupt, "directory " + std::to_string(dir.number) +
                                " size is not block-aligned");
    std::vector<DirEntry> out;
    enumerate_file_blocks(dir, [&](uint64_t logical, uint32_t phys) {
        if (phys == 0)
            fail(Errc::corrupt, "directory " + std::to_string(dir.number) +
                                    " has a hole at block " + std::to_string(logical));
        std::vector<uint8_t> blk = read_block(phys);
        uint32_t off = 0;
        while (off < bs) {
            if (off + 8 > bs)
                fail(Errc::corrupt, "truncated dirent in inode " + std::to_string(dir.number));
            uint32_t ino = get_u32le(blk.data() + off);
            uint16_t rec_len = get_u16le(blk.data() + off + 4);
            uint8_t name_len = blk[off + 6];
            if (rec_len < 8 || rec_len % 4 != 0 || off + rec_len > bs)
                fail(Errc::corrupt, "bad dirent rec_len " + std::to_string(rec_len) +
                                        " in inode " + std::to_string(dir.number));
            if (8u + name_len > rec_len)
                fail(Errc::corrupt, "dirent name overflows record in inode " +
                                        std::to_string(dir.number));
            if (ino != 0 && name_len != 0) {
                if (ino > sb_.inodes_count)
                    fail(Errc::corrupt, "dirent references inode " + std::to_string(ino) +
                                            " out of range");
                DirEntry e;
                e.inode = ino;
                e.name.assign(reinterpret_cast<char*>(blk.data() + off + 8), name_len);
                out.push_back(std::move(e));
            }
            off += rec_len;
        }
    });
    return out;
}

Inode FsVolume::resolve_path(std::string_view abs_path) const {
    if (abs_path.empty() || abs_path[0] != '/')
        fail(Errc::non_absolute_path, "path must be absolute: '" + std::string(abs_path) + "'");

    std::deque<std::string> todo;
    size_t i = 1;
    while (i <= abs_path.size()) {
        size_t j = abs_path.find('/', i);
        if (j == std::string_view::npos) j = abs_path.size();
        if (j > i) todo.emplace_back(abs_path.substr(i, j - i));
        i = j + 1;
    }

    Inode cur = read_inode(EXT2_ROOT_INODE);
    std::string resolved; // path of cur when cur is a directory
    int hops = 0;

    while (!todo.empty()) {
        std::string comp = std::move(todo.front());
        todo.pop_front();
        if (comp == ".") continue;

        if (!cur.is_dir())
            fail(Errc::not_a_directory, (resolved.empty() ? "/" : resolved) +
                                            " is not a directory");

        uint32_t next_ino = 0;
        for (const DirEntry& e : read_dir(cur)) {
            if (e.name == comp) {
                next_ino = e.inode;
                break;
            }
        }
        if (next_ino == 0)
            fail(Errc::not_found, resolved + "/" + comp);

        Inode next = read_inode(next_ino);
        if (next.is_symlink() && !todo.empty()) {
            if (++hops > 40)
                fail(Errc::symlink_loop, "too many symlinks resolving " + std::string(abs_path));
            std::string target = read_symlink_target(next);
            if (target.empty())
                fail(Errc::corrupt, "empty symlink target at " + resolved + "/" + comp);
            std::deque<std::string> tcomps;
            size_t t = 0;
            while (t <= target.size()) {
                size_t u = target.find('/', t);
                if (u == std::string::npos) u = target.size();
                if (u > t) tcomps.emplace_back(target.substr(t, u - t));
                t = u + 1;
            }
            if (target[0] == '/') {
                cur = read_inode(EXT2_ROOT_INODE);
                resolved.clear();
            }
            for (auto it = tcomps.rbegin(); it != tcomps.rend(); ++it)
                todo.push_front(std::move(*it));
            continue;
        }

        if (comp == "..") {
            // stepping up: trim the resolved prefix
            size_t slash = resolved.rfind('/');
            resolved = slash == std::string::npos ? "" : resolved.substr(0, slash);
        } else {
            resolved += "/" + comp;
        }
        cur = next;
    }
    return cur;
}

void FsVolume::walk_dir(const Inode& dir, const std::string& path,
                        std::vector<uint32_t>& dir_stack,
                        const std::function<void(const WalkEntry&)>& visit) const {
    if (std::find(dir_stack.begin(), dir_stack.end(), dir.number) != dir_stack.end())
        fail(Errc::corrupt, "directory cycle at " + path);
    dir_stack.push_back(dir.number);

    std::vector<DirEntry> entries = read_dir(dir);
    std::sort(entries.begin(), entries.end(),
              [](const DirEntry& a, const DirEntry& b) { return a.name < b.name; });

    for (const DirEntry& e : entries) {
        if (e.name == "." || e.name == "..") continue;
        Inode child = read_inode(e.inode);
        std::string cpath = (path == "/" ? "" : path) + "/" + e.name;
        WalkEntry w;
        w.path = cpath;
        w.kind = child.kind();
        w.size_bytes = child.size;
        w.disk_usage_bytes = uint64_t(child.blocks_512) * 512;
        w.inode = e.inode;
        w.mode = child.mode;
        w.links_count = child.links_count;
        visit(w);
        if (child.is_dir()) walk_dir(child, cpath, dir_stack, visit);
    }
    dir_stack.pop_back();
}

void FsVolume::walk_tree(const std::function<void(const WalkEntry&)>& visit) const {
    Inode root = read_inode(EXT2_ROOT_INODE);
    if (!root.is_dir()) fail(Errc::corrupt, "root inode is not a directory");
    WalkEntry w;
    w.path = "/";
    w.kind = FileKind::Dir;
    w.size_bytes = root.size;
    w.disk_usage_bytes = uint64_t(root.blocks_512) * 512;
    w.inode = EXT2_ROOT_INODE;
    w.mode = root.mode;
    w.links_count = root.links_count;
    visit(w);
    std::vector<uint32_t> stack;
    walk_dir(root, "/", stack, visit);
}

std::vector<WalkEntry> FsVolume::walk_tree() const {
    std::vector<WalkEntry> out;
    walk_tree([&](const WalkEntry& w) { out.push_back(w); });
    return out;
}

FsStats FsVolume::stats() const {
    FsStats st;
    const uint64_t bs = block_size();
    st.total_bytes = uint64_t(sb_.blocks_count) * bs;
    st.used_bytes = uint64_t(sb_.blocks_count - sb_.free_blocks_count) * bs;
    std::unordered_set<uint32_t> seen;
    walk_tree([&](const WalkEntry& w) {
        if (!seen.insert(w.inode).second) return; // hardlink: count the inode once
        switch (w.kind) {
        case FileKind::File:
            ++st.file_count;
            st.content_bytes += w.size_bytes;
            break;
        case FileKind::Dir: ++st.dir_count; break;
        case FileKind::Symlink: ++st.symlink_count; break;
        case FileKind::Other: ++st.other_count; break;
        }
    });
    return st;
}

} // namespace vmslim
