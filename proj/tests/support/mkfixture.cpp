// Fixture generator for the scripted pipeline tests.
//
//   mkfixture vdi <outdir> [seed]   writes fixture.vdi + fixture.raw
//   mkfixture e2e <outdir> [seed]   writes fixture.vdi (MBR + ext2 inside a
//                                   dynamic container), boot.list, app.list
//                                   and expected.txt with ground-truth numbers
//
// Every expected value comes from the builders' own bookkeeping, never from
// the library under test.

#include "ext2_builder.hpp"
#include "vdi_builder.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace testsupport;

namespace {

void write_file(const fs::path& p, const void* data, size_t n) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) {
        std::fprintf(stderr, "mkfixture: cannot write %s\n", p.string().c_str());
        std::exit(1);
    }
    f.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void write_file(const fs::path& p, const std::vector<uint8_t>& v) {
    write_file(p, v.data(), v.size());
}

void write_file(const fs::path& p, const std::string& s) {
    write_file(p, s.data(), s.size());
}

std::vector<uint8_t> random_bytes(std::mt19937& rng, size_t n) {
    std::vector<uint8_t> v(n);
    for (auto& b : v)
        b = static_cast<uint8_t>(rng());
    return v;
}

int make_vdi_fixture(const fs::path& dir, uint32_t seed) {
    std::mt19937 rng(seed);
    const uint32_t bs = 64 * 1024;
    const uint32_t blocks = 48 + seed % 32;

    std::vector<uint8_t> raw(uint64_t(bs) * blocks, 0);
    for (uint32_t b = 0; b < blocks; ++b) {
        switch (rng() % 3) {
        case 0: break; // zero block
        default: {
            auto bytes = random_bytes(rng, bs);
            std::copy(bytes.begin(), bytes.end(), raw.begin() + uint64_t(b) * bs);
            break;
        }
        }
    }

    VdiOpts o;
    o.block_size = bs;
    o.seed = seed + 1;
    o.zero_marker_ratio = 0.5;
    write_file(dir / "fixture.raw", raw);
    write_file(dir / "fixture.vdi", build_vdi(raw, o));
    std::printf("vdi fixture: %u blocks of %u bytes -> %s\n", blocks, bs, dir.string().c_str());
    return 0;
}

int make_e2e_fixture(const fs::path& dir, uint32_t seed) {
    std::mt19937 rng(seed);

    BuildOpts o;
    o.block_size = 1024;
    o.total_blocks = 6144; // 6 MiB filesystem
    o.inodes_per_group = 512;
    o.seed = seed;
    o.scatter = true;
    Ext2Builder b(o);

    std::vector<std::string> all_files;
    auto add_file = [&](const std::string& p, size_t n, uint16_t perm = 0644) {
        b.add_file(p, random_bytes(rng, n), perm);
        all_files.push_back(p);
    };

    for (const char* d : {"/bin", "/etc", "/etc/init.d", "/lib", "/usr", "/usr/share",
                          "/usr/share/data", "/var", "/var/log"})
        b.add_dir(d);

    for (int i = 0; i < 20; ++i)
        add_file("/bin/tool" + std::to_string(i), 400 + rng() % 4000, 0755);
    add_file("/bin/bash", 24 * 1024, 0755);
    b.add_hardlink("/bin/rbash", "/bin/bash");
    b.add_symlink("/bin/sh", "bash");
    for (int i = 0; i < 30; ++i)
        add_file("/etc/conf" + std::to_string(i), 80 + rng() % 900);
    add_file("/etc/motd", 137);
    for (int i = 0; i < 60; ++i)
        add_file("/lib/lib" + std::to_string(i) + ".so", 1000 + rng() % 9000, 0755);
    add_file("/lib/libbig.so", 40 * 1024, 0755); // well past the direct blocks
    b.add_symlink("/lib/libc.so", "libbig.so");
    for (int i = 0; i < 100; ++i)
        add_file("/usr/share/data/d" + std::to_string(i), 50 + rng() % 2500);
    for (int i = 0; i < 8; ++i)
        add_file("/var/log/log" + std::to_string(i), 300 + rng() % 1500);
    b.add_sparse_file("/var/log/lastlog", 120 * 1024,
                      {{64, random_bytes(rng, 500)}, {100 * 1024, random_bytes(rng, 2000)}});
    b.add_symlink("/etc/long-alias",
                  "/usr/share/data/a-rather-long-symlink-target-name-for-slow-path/../d0");
    b.add_fifo("/var/notify");

    auto r = b.build();

    // Pipeline catalog: 50 present paths. Symlink targets are listed
    // alongside the links so the expansion step adds only directories,
    // which carry no bytes.
    std::vector<std::string> boot = {
        "/bin/bash", "/bin/sh",   "/bin/rbash",      "/etc/motd",
        "/lib/libbig.so", "/lib/libc.so", "/var/log/lastlog", "/var/notify",
    };
    for (int i = 0; i < 12; ++i)
        boot.push_back("/bin/tool" + std::to_string(i));
    for (int i = 0; i < 10; ++i)
        boot.push_back("/etc/conf" + std::to_string(i));
    for (int i = 0; i < 12; ++i)
        boot.push_back("/lib/lib" + std::to_string(i) + ".so");
    for (int i = 0; i < 8; ++i)
        boot.push_back("/usr/share/data/d" + std::to_string(i));

    std::vector<std::string> app = {"/bin/bash", "/bin/sh", "/lib/libbig.so"};
    for (int i = 6; i < 18; ++i)
        app.push_back("/lib/lib" + std::to_string(i) + ".so");
    for (int i = 4; i < 28; ++i)
        app.push_back("/usr/share/data/d" + std::to_string(i));

    auto catalog_text = [](const std::vector<std::string>& paths, const char* label) {
        std::string out = "# ";
        out += label;
        out += " access catalog\n";
        for (const auto& p : paths) {
            out += p;
            out += '\n';
        }
        return out;
    };

    // Ground-truth numbers for the catalog, computed from the builder's
    // records alone: unique paths, their parent directories, byte sums of
    // file and symlink entries.
    auto expect_for = [&](const std::vector<std::string>& paths) {
        std::set<std::string> uniq(paths.begin(), paths.end());
        std::set<std::string> closed = uniq;
        for (const auto& p : uniq) {
            for (size_t slash = p.rfind('/'); slash != std::string::npos && slash > 0;
                 slash = p.rfind('/', slash - 1))
                closed.insert(p.substr(0, slash));
            closed.insert("/");
        }
        uint64_t bytes = 0;
        for (const auto& p : uniq) {
            const NodeTruth* t = r.find(p);
            if (!t) {
                std::fprintf(stderr, "mkfixture: catalog path %s missing from truth\n", p.c_str());
                std::exit(1);
            }
            if (t->kind == 0 || t->kind == 2)
                bytes += t->size;
        }
        return std::pair<uint64_t, uint64_t>(closed.size(), bytes);
    };
    auto [boot_entries, boot_bytes] = expect_for(boot);
    auto [app_entries, app_bytes] = expect_for(app);

    const uint32_t start_lba = 2048;
    auto disk = build_partitioned_disk(r.image, start_lba);

    VdiOpts vo;
    vo.seed = seed + 7;
    auto vdi = build_vdi(disk, vo);

    write_file(dir / "fixture.vdi", vdi);
    write_file(dir / "boot.list", catalog_text(boot, "boot"));
    write_file(dir / "app.list", catalog_text(app, "app"));

    char buf[1024];
    std::snprintf(buf, sizeof buf,
                  "disk_size=%llu\n"
                  "part_offset=%llu\n"
                  "fs_total_bytes=%llu\n"
                  "fs_used_bytes=%llu\n"
                  "fs_file_count=%llu\n"
                  "boot_entries=%llu\n"
                  "boot_blob_bytes=%llu\n"
                  "app_entries=%llu\n"
                  "app_blob_bytes=%llu\n"
                  "expected_ratio_pp=%.4f\n",
                  (unsigned long long)disk.size(), (unsigned long long)start_lba * 512,
                  (unsigned long long)r.total_bytes, (unsigned long long)r.used_bytes,
                  (unsigned long long)r.file_count, (unsigned long long)boot_entries,
                  (unsigned long long)boot_bytes, (unsigned long long)app_entries,
                  (unsigned long long)app_bytes,
                  100.0 * double(boot_bytes) / double(r.used_bytes));
    write_file(dir / "expected.txt", std::string(buf));

    std::printf("e2e fixture: %zu nodes, %llu used bytes -> %s\n", r.nodes.size(),
                (unsigned long long)r.used_bytes, dir.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr, "usage: mkfixture {vdi|e2e} <outdir> [seed]\n");
        return 1;
    }
    const std::string mode = argv[1];
    const fs::path dir = argv[2];
    const uint32_t seed = argc > 3 ? uint32_t(std::stoul(argv[3])) : 1;
    std::error_code ec;
    fs::create_directories(dir, ec);

    if (mode == "vdi") return make_vdi_fixture(dir, seed);
    if (mode == "e2e") return make_e2e_fixture(dir, seed);
    std::fprintf(stderr, "mkfixture: unknown mode '%s'\n", mode.c_str());
    return 1;
}
