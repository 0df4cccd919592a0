#include <doctest.h>

#include "ext2_builder.hpp"
#include "vmslim/error.hpp"
#include "vmslim/instance.hpp"

#include <algorithm>
#include <cstring>

using namespace vmslim;
using testsupport::BuildResult;
using testsupport::Ext2Builder;

namespace {

FsVolume open_fs(const BuildResult& r) {
    auto src = std::make_shared<MemorySource>(r.image);
    return FsVolume::open(VolumeSlice(src, 0, r.image.size()));
}

BuildResult rich_tree() {
    Ext2Builder b({});
    b.add_dir("/bin");
    b.add_dir("/etc");
    b.add_file("/bin/bash", std::vector<uint8_t>(5000, 0x7F), 0755);
    b.add_file("/etc/fstab", {'f', 's', '\n'}, 0644);
    b.add_file("/etc/empty", {}, 0600);
    b.add_symlink("/bin/sh", "bash");
    b.add_fifo("/etc/pipe");
    return b.build();
}

const ManifestEntry* entry_of(const InstancePackage& p, const std::string& path) {
    for (const auto& e : p.manifest.entries)
        if (e.path == path)
            return &e;
    return nullptr;
}

// Blob bytes of one entry, cut out of the serialized package.
std::vector<uint8_t> blob_of(const InstancePackage& p, const ManifestEntry& e) {
    const uint64_t start = e.blob_offset - header_size(p.manifest);
    return {p.blobs.begin() + long(start), p.blobs.begin() + long(start + e.size)};
}

Errc unpack_errc(const std::vector<uint8_t>& bytes) {
    try {
        unpack(bytes);
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected unpack to throw");
    return Errc::io_failure;
}

} // namespace

TEST_CASE("an empty catalog packs to the 16-byte skeleton") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto p = extract(fs, make_catalog({}, "empty"));
    CHECK(p.manifest.entries.empty());
    CHECK(p.manifest.missing.empty());
    CHECK(p.blobs.empty());
    CHECK(header_size(p.manifest) == 16);
    CHECK(packed_size(p) == 16);

    auto bytes = pack_bytes(p);
    REQUIRE(bytes.size() == 16);
    CHECK(std::memcmp(bytes.data(), "VSIP", 4) == 0);
    CHECK(get_u16le(bytes.data() + 4) == VSIP_VERSION);
    CHECK(get_u16le(bytes.data() + 6) == 0); // flags
    CHECK(get_u32le(bytes.data() + 8) == 0); // entries
    CHECK(get_u32le(bytes.data() + 12) == 0); // missing

    auto back = unpack(bytes);
    CHECK(same_content(back, p));
}

TEST_CASE("extraction captures content, kinds and modes") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto c = make_catalog({"/bin/bash", "/bin/sh", "/etc/fstab", "/etc/empty", "/etc/pipe"}, "boot");
    auto p = extract(fs, c);

    // closure pulls in the directories
    std::vector<std::string> paths;
    for (const auto& e : p.manifest.entries)
        paths.push_back(e.path);
    CHECK(paths == std::vector<std::string>{"/", "/bin", "/bin/bash", "/bin/sh", "/etc",
                                            "/etc/empty", "/etc/fstab", "/etc/pipe"});
    CHECK(std::is_sorted(paths.begin(), paths.end()));
    CHECK(p.manifest.missing.empty());

    const auto* bash = entry_of(p, "/bin/bash");
    REQUIRE(bash);
    CHECK(bash->kind == FileKind::File);
    CHECK(bash->mode == 0755);
    CHECK(bash->size == 5000);
    CHECK(blob_of(p, *bash) == std::vector<uint8_t>(5000, 0x7F));
    CHECK(bash->hash == sha256(blob_of(p, *bash)));

    const auto* sh = entry_of(p, "/bin/sh");
    REQUIRE(sh);
    CHECK(sh->kind == FileKind::Symlink);
    CHECK(sh->size == 4);
    auto shblob = blob_of(p, *sh);
    CHECK(std::string(shblob.begin(), shblob.end()) == "bash");

    const auto* empty = entry_of(p, "/etc/empty");
    REQUIRE(empty);
    CHECK(empty->size == 0);
    CHECK(empty->hash == sha256(nullptr, 0));

    const auto* dir = entry_of(p, "/bin");
    REQUIRE(dir);
    CHECK(dir->kind == FileKind::Dir);
    CHECK(dir->size == 0);
    CHECK(dir->blob_offset == 0);
    CHECK(dir->hash == Sha256Digest{});

    const auto* pipe = entry_of(p, "/etc/pipe");
    REQUIRE(pipe);
    CHECK(pipe->kind == FileKind::Other);
    CHECK(pipe->blob_offset == 0);

    // blobs tile the blob section in entry order
    uint64_t cursor = header_size(p.manifest);
    for (const auto& e : p.manifest.entries) {
        if (!e.has_blob())
            continue;
        CHECK(e.blob_offset == cursor);
        cursor += e.size;
    }
    CHECK(cursor == packed_size(p));
}

TEST_CASE("missing paths are recorded, never fatal") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto c = make_catalog({"/bin/bash", "/ghost/file", "/etc/nope"}, "boot");
    auto p = extract(fs, c);

    CHECK(p.manifest.missing ==
          std::vector<std::string>{"/etc/nope", "/ghost", "/ghost/file"});
    CHECK(entry_of(p, "/bin/bash"));
    CHECK(!entry_of(p, "/ghost/file"));

    // the missing list survives a pack/unpack round trip
    auto back = unpack(pack_bytes(p));
    CHECK(back.manifest.missing == p.manifest.missing);
}

TEST_CASE("pack/unpack round-trips and label stays local") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto c = make_catalog({"/bin/bash", "/bin/sh", "/etc/fstab", "/missing"}, "boot");
    auto p = extract(fs, c);
    CHECK(p.manifest.label == "boot");

    auto bytes = pack_bytes(p);
    CHECK(bytes.size() == packed_size(p));

    auto back = unpack(bytes);
    CHECK(back.manifest.label.empty());
    CHECK(same_content(back, p));
    REQUIRE(back.manifest.entries.size() == p.manifest.entries.size());
    for (size_t i = 0; i < back.manifest.entries.size(); ++i) {
        CHECK(back.manifest.entries[i].path == p.manifest.entries[i].path);
        CHECK(back.manifest.entries[i].hash == p.manifest.entries[i].hash);
    }

    // pack is deterministic
    CHECK(pack_bytes(back) == bytes);
    // ByteSource overload behaves the same
    MemorySource src(bytes);
    CHECK(same_content(unpack(src), p));
}

TEST_CASE("serial, parallel and reference extraction are bit-identical") {
    testsupport::BuildOpts o;
    o.total_blocks = 6144;
    o.inodes_per_group = 128;
    Ext2Builder b(o);
    b.add_dir("/d");
    std::vector<std::string> paths;
    for (int i = 0; i < 60; ++i) {
        std::string p = "/d/f" + std::to_string(i);
        b.add_file(p, std::vector<uint8_t>(200 + i * 37, uint8_t(i)));
        paths.push_back(p);
    }
    auto r = b.build();
    auto fs = open_fs(r);
    auto c = make_catalog(paths, "boot");

    auto serial = pack_bytes(extract(fs, c, ExecMode::Serial));
    auto parallel = pack_bytes(extract(fs, c, ExecMode::Parallel));
    auto reference = pack_bytes(extract_reference(fs, c));
    CHECK(serial == parallel);
    CHECK(serial == reference);
    CHECK(same_content(unpack(serial), unpack(parallel)));
}

TEST_CASE("a flipped blob byte is caught by the entry hash") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto p = extract(fs, make_catalog({"/bin/bash", "/etc/fstab"}, "boot"));
    auto bytes = pack_bytes(p);

    // first blob byte belongs to the first blob-bearing entry: /bin/bash
    bytes[header_size(p.manifest)] ^= 0x01;
    try {
        unpack(bytes);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::hash_mismatch);
        CHECK(std::string(e.what()).find("/bin/bash") != std::string::npos);
    }
}

TEST_CASE("unpack rejects malformed containers") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto good = pack_bytes(extract(fs, make_catalog({"/bin/bash", "/etc/fstab"}, "b")));

    SUBCASE("wrong magic") {
        auto bad = good;
        bad[0] = 'X';
        CHECK(unpack_errc(bad) == Errc::bad_package_magic);
    }
    SUBCASE("unknown version") {
        auto bad = good;
        put_u16le(bad.data() + 4, 2);
        CHECK(unpack_errc(bad) == Errc::unsupported_version);
    }
    SUBCASE("nonzero flags") {
        auto bad = good;
        put_u16le(bad.data() + 6, 1);
        CHECK(unpack_errc(bad) == Errc::corrupt);
    }
    SUBCASE("truncations at every stage") {
        for (size_t cut : {4ul, 10ul, 20ul, good.size() / 2, good.size() - 1}) {
            auto bad = good;
            bad.resize(cut);
            CHECK(unpack_errc(bad) == Errc::truncated_package);
        }
    }
    SUBCASE("trailing garbage") {
        auto bad = good;
        bad.push_back(0);
        CHECK(unpack_errc(bad) == Errc::corrupt);
    }
}

TEST_CASE("unpack enforces manifest invariants") {
    auto dir_entry = [](std::string path) {
        ManifestEntry e;
        e.path = std::move(path);
        e.kind = FileKind::Dir;
        e.mode = 0755;
        return e;
    };

    SUBCASE("entries must be strictly sorted") {
        InstancePackage p;
        p.manifest.entries = {dir_entry("/b"), dir_entry("/a")};
        CHECK(unpack_errc(pack_bytes(p)) == Errc::corrupt);

        InstancePackage dup;
        dup.manifest.entries = {dir_entry("/a"), dir_entry("/a")};
        CHECK(unpack_errc(pack_bytes(dup)) == Errc::corrupt);
    }

    SUBCASE("missing list must be strictly sorted") {
        InstancePackage p;
        p.manifest.missing = {"/z", "/a"};
        CHECK(unpack_errc(pack_bytes(p)) == Errc::corrupt);
    }

    SUBCASE("unknown kinds are rejected") {
        InstancePackage p;
        ManifestEntry e = dir_entry("/a");
        e.kind = static_cast<FileKind>(4);
        p.manifest.entries = {e};
        CHECK(unpack_errc(pack_bytes(p)) == Errc::corrupt);
    }

    SUBCASE("dir/other entries carry no blob fields") {
        InstancePackage p;
        ManifestEntry e = dir_entry("/a");
        e.size = 1;
        p.manifest.entries = {e};
        p.blobs = {0xAA};
        CHECK(unpack_errc(pack_bytes(p)) == Errc::corrupt);
    }

    SUBCASE("blobs must tile the blob section exactly") {
        ManifestEntry f;
        f.path = "/f";
        f.kind = FileKind::File;
        f.mode = 0644;
        f.size = 3;
        f.hash = sha256("abc", 3);
        InstancePackage p;
        p.manifest.entries = {f};
        p.blobs = {'a', 'b', 'c'};
        p.manifest.entries[0].blob_offset = header_size(p.manifest); // correct
        CHECK(same_content(unpack(pack_bytes(p)), p));

        p.manifest.entries[0].blob_offset += 1; // gap
        auto bad = pack_bytes(p);
        // pack emitted the stale offset; restore blob bytes length mismatch aside
        CHECK(unpack_errc(bad) == Errc::corrupt);
    }
}

TEST_CASE("instance pair reports the overlap") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto boot = make_catalog({"/bin/bash", "/bin/sh", "/etc/fstab"}, "boot");
    auto app = make_catalog({"/bin/bash", "/etc/empty"}, "app");

    auto pair = instance_pair(fs, boot, app);
    CHECK(pair.boot.manifest.label == "boot");
    CHECK(pair.app.manifest.label == "app");

    // overlap: /bin/bash plus every directory both closures share
    CHECK(pair.overlap.paths == std::vector<std::string>{"/", "/bin", "/bin/bash", "/etc"});
    CHECK(pair.overlap.total_bytes == 5000); // only /bin/bash carries bytes

    // the overlap never exceeds either side
    CHECK(pair.overlap.paths.size() <= pair.boot.manifest.entries.size());
    CHECK(pair.overlap.paths.size() <= pair.app.manifest.entries.size());

    SUBCASE("identical catalogs overlap completely") {
        auto same = instance_pair(fs, boot, boot);
        CHECK(same.overlap.paths.size() == same.boot.manifest.entries.size());
    }
    SUBCASE("disjoint catalogs still share the root") {
        auto dj = instance_pair(fs, make_catalog({"/bin/bash"}, "boot"),
                                make_catalog({"/etc/fstab"}, "app"));
        CHECK(dj.overlap.paths == std::vector<std::string>{"/"});
        CHECK(dj.overlap.total_bytes == 0);
    }
}

TEST_CASE("package sizes follow the declared layout") {
    auto r = rich_tree();
    auto fs = open_fs(r);
    auto p = extract(fs, make_catalog({"/bin/bash", "/bin/sh", "/nope"}, "b"));

    uint64_t expect = 12; // magic + version + flags + entry_count
    for (const auto& e : p.manifest.entries)
        expect += 2 + e.path.size() + 1 + 4 + 8 + 8 + 32;
    expect += 4;
    for (const auto& m : p.manifest.missing)
        expect += 2 + m.size();
    CHECK(header_size(p.manifest) == expect);
    CHECK(packed_size(p) == expect + p.blobs.size());
    CHECK(pack_bytes(p).size() == packed_size(p));
}
