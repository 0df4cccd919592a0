// Throughput comparison of the parallel kernels against their serial
// reference implementations: container flattening and catalog extraction
// (dominated by SHA-256 hashing).
//
// usage: vmslim_bench [container_mib] [file_count]

#include "ext2_builder.hpp"
#include "vdi_builder.hpp"
#include "vmslim/catalog.hpp"
#include "vmslim/ext2.hpp"
#include "vmslim/instance.hpp"
#include "vmslim/vdi.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace vmslim;

namespace {

double best_of(int runs, const std::function<void()>& fn) {
    double best = 1e100;
    for (int i = 0; i < runs; ++i) {
        auto t0 = std::chrono::steady_clock::now();
        fn();
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (s < best) best = s;
    }
    return best;
}

void report(const char* name, uint64_t bytes, double secs, double vs_serial = 0.0) {
    if (vs_serial > 0.0)
        std::printf("  %-10s %8.1f MB/s  (%.2fx vs serial)\n", name,
                    double(bytes) / 1e6 / secs, vs_serial / secs);
    else
        std::printf("  %-10s %8.1f MB/s\n", name, double(bytes) / 1e6 / secs);
}

} // namespace

int main(int argc, char** argv) {
    const uint64_t mib = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 96;
    const uint32_t files = argc > 2 ? uint32_t(std::strtoul(argv[2], nullptr, 10)) : 400;
    std::mt19937_64 rng(1);

    // --- container flattening -------------------------------------------
    const uint32_t block = 1u << 20;
    const uint32_t blocks = uint32_t(mib);
    std::vector<uint8_t> raw(uint64_t(blocks) * block);
    for (size_t i = 0; i < raw.size(); i += 8) {
        uint64_t v = rng();
        std::memcpy(raw.data() + i, &v, 8);
    }
    for (uint32_t b = 0; b < blocks; b += 5) // leave some holes in the map
        std::fill_n(raw.begin() + uint64_t(b) * block, block, uint8_t(0));

    testsupport::VdiOpts vo;
    vo.shuffle = true;
    vo.zero_marker_ratio = 1.0;
    auto vdi = testsupport::build_vdi(raw, vo);
    auto img = VdiImage::parse(std::make_shared<MemorySource>(std::move(vdi)));
    std::printf("container flatten: %llu MiB virtual, 1 MiB blocks\n",
                (unsigned long long)mib);

    MemorySink out_ref, out_serial, out_parallel;
    double t_ref = best_of(3, [&] { out_ref.data().clear(); to_raw_reference(img, out_ref); });
    double t_ser = best_of(3, [&] { out_serial.data().clear(); img.to_raw(out_serial, ExecMode::Serial); });
    double t_par = best_of(3, [&] { out_parallel.data().clear(); img.to_raw(out_parallel, ExecMode::Parallel); });
    if (out_ref.data() != raw || out_serial.data() != raw || out_parallel.data() != raw) {
        std::fprintf(stderr, "flatten output mismatch\n");
        return 1;
    }
    report("reference", raw.size(), t_ref);
    report("serial", raw.size(), t_ser);
    report("parallel", raw.size(), t_par, t_ser);

    // --- extraction + hashing ---------------------------------------------
    testsupport::BuildOpts bo;
    bo.block_size = 4096;
    bo.total_blocks = std::max<uint32_t>(8192, files * 16);
    bo.inodes_per_group = ((files + 64 + 31) / 32) * 32; // whole inode-table blocks
    testsupport::Ext2Builder b(bo);
    b.add_dir("/data");
    std::vector<std::string> paths;
    uint64_t content_bytes = 0;
    for (uint32_t i = 0; i < files; ++i) {
        std::string p = "/data/f" + std::to_string(i);
        std::vector<uint8_t> content(4096 + rng() % (60 * 1024));
        for (size_t k = 0; k < content.size(); k += 8) {
            uint64_t v = rng();
            std::memcpy(content.data() + k, &v, std::min<size_t>(8, content.size() - k));
        }
        content_bytes += content.size();
        b.add_file(p, std::move(content));
        paths.push_back(p);
    }
    auto r = b.build();
    auto src = std::make_shared<MemorySource>(std::move(r.image));
    FsVolume vol = FsVolume::open(VolumeSlice(src, 0, src->size()));
    Catalog cat = make_catalog(paths, "bench");
    std::printf("extract+hash: %u files, %.1f MiB content\n", files,
                double(content_bytes) / (1 << 20));

    std::vector<uint8_t> pkg_ref, pkg_ser, pkg_par;
    double e_ref = best_of(3, [&] { pkg_ref = pack_bytes(extract_reference(vol, cat)); });
    double e_ser = best_of(3, [&] { pkg_ser = pack_bytes(extract(vol, cat, ExecMode::Serial)); });
    double e_par = best_of(3, [&] { pkg_par = pack_bytes(extract(vol, cat, ExecMode::Parallel)); });
    if (pkg_ref != pkg_ser || pkg_ser != pkg_par) {
        std::fprintf(stderr, "extraction output mismatch\n");
        return 1;
    }
    report("reference", content_bytes, e_ref);
    report("serial", content_bytes, e_ser);
    report("parallel", content_bytes, e_par, e_ser);
    return 0;
}
