// vmslim: command-line front end for the image-minimization pipeline.
//
//   inspect <vdi>                        container header / block-map summary
//   to-raw <vdi> <out>                   flatten to a raw image
//   fs-stat <image> [--offset|--partition]  filesystem occupancy
//   catalog normalize <in> <out> [--scan]   canonicalize a path catalog
//   extract <image> --catalog F --label L --out P   build an instance package
//   verify <vsip>                        validate a package, all hashes
//   report occupancy|monitor|estimate    table arithmetic
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 package written but
// some catalog entries were missing.

#include "vmslim/catalog.hpp"
#include "vmslim/error.hpp"
#include "vmslim/ext2.hpp"
#include "vmslim/instance.hpp"
#include "vmslim/report.hpp"
#include "vmslim/sha256.hpp"
#include "vmslim/vdi.hpp"
#include "vmslim/volume.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

using namespace vmslim;

namespace {

constexpr int EXIT_USAGE = 1;
constexpr int EXIT_DATA = 2;
constexpr int EXIT_PARTIAL = 3;

bool looks_like_vdi(const ByteSource& src) {
    if (src.size() < 68) return false;
    uint8_t buf[4];
    src.read_at(64, buf, 4);
    return get_u32le(buf) == VDI_SIGNATURE;
}

// VDI containers are unwrapped transparently; anything else is used as a raw
// image.
std::shared_ptr<const ByteSource> open_image(const std::string& path) {
    std::shared_ptr<const ByteSource> src = open_source(path);
    if (looks_like_vdi(*src)) return make_virtual_source(VdiImage::parse(std::move(src)));
    return src;
}

VolumeSelector make_selector(const std::optional<uint64_t>& offset,
                             const std::optional<int>& partition) {
    if (offset) return VolumeSelector::at_offset(*offset);
    if (partition) return VolumeSelector::partition(*partition);
    return VolumeSelector::auto_detect();
}

std::vector<uint8_t> slurp(const std::string& path) {
    auto src = open_source(path);
    return read_bytes(*src, 0, size_t(src->size()));
}

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::io_failure, "cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
        if (line.empty() || line.back() == ',') cells.push_back("");
        rows.push_back(std::move(cells));
    }
    return rows;
}

double to_double(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(Errc::corrupt, "bad number '" + s + "' in " + what);
    }
}

uint64_t to_u64(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail(Errc::corrupt, "bad count '" + s + "' in " + what);
    }
}

int cmd_inspect(const std::string& path) {
    VdiImage img = VdiImage::parse(open_source(path));
    const VdiHeader& h = img.header();
    const VdiPreHeader& pre = img.pre_header();

    std::string info(pre.info_text.data(), strnlen(pre.info_text.data(), pre.info_text.size()));
    std::printf("info:             %s\n", info.c_str());
    std::printf("version:          %u.%u\n", pre.version_major, pre.version_minor);
    std::printf("type:             %s\n",
                h.image_type == VdiImageType::Dynamic ? "dynamic" : "fixed");
    std::printf("disk size:        %llu\n", (unsigned long long)h.disk_size);
    std::printf("block size:       %u\n", h.block_size);
    std::printf("blocks total:     %u\n", h.blocks_total);
    std::printf("blocks allocated: %u\n", h.blocks_allocated);

    uint64_t zero = 0, unalloc = 0;
    for (uint32_t e : img.block_map()) {
        if (e == VDI_BLOCK_ZERO) ++zero;
        if (e == VDI_BLOCK_UNALLOCATED) ++unalloc;
    }
    std::printf("blocks zero:      %llu\n", (unsigned long long)zero);
    std::printf("blocks unalloc:   %llu\n", (unsigned long long)unalloc);
    std::printf("map offset:       %u\n", h.blocks_offset);
    std::printf("data offset:      %u\n", h.data_offset);
    std::printf("allocated bytes:  %llu\n",
                (unsigned long long)(uint64_t(h.blocks_allocated) * h.block_size));
    return 0;
}

int cmd_to_raw(const std::string& in, const std::string& out) {
    VdiImage img = VdiImage::parse(open_source(in));
    FileSink sink(out);
    img.to_raw(sink);
    sink.commit();
    std::printf("wrote %llu bytes to %s\n", (unsigned long long)img.header().disk_size,
                out.c_str());
    return 0;
}

int cmd_fs_stat(const std::string& image, const std::optional<uint64_t>& offset,
                const std::optional<int>& partition) {
    VolumeSlice vol = open_volume(open_image(image), make_selector(offset, partition));
    FsVolume fs = FsVolume::open(std::move(vol));
    FsStats st = fs.stats();
    std::printf("block size:    %u\n", fs.block_size());
    std::printf("total bytes:   %llu\n", (unsigned long long)st.total_bytes);
    std::printf("used bytes:    %llu\n", (unsigned long long)st.used_bytes);
    std::printf("content bytes: %llu\n", (unsigned long long)st.content_bytes);
    std::printf("files:         %llu\n", (unsigned long long)st.file_count);
    std::printf("dirs:          %llu\n", (unsigned long long)st.dir_count);
    std::printf("symlinks:      %llu\n", (unsigned long long)st.symlink_count);
    std::printf("other:         %llu\n", (unsigned long long)st.other_count);
    return 0;
}

int cmd_catalog_normalize(const std::string& in, const std::string& out, bool scan) {
    Catalog c = parse_catalog(slurp(in), scan ? CatalogMode::TokenScan : CatalogMode::StrictList,
                              "custom", in);
    if (c.entries.empty()) std::fprintf(stderr, "warning: catalog is empty\n");
    std::string text = render_catalog(c);
    FileSink sink(out);
    sink.write(text.data(), text.size());
    sink.commit();
    std::printf("%zu entries -> %s\n", c.entries.size(), out.c_str());
    return 0;
}

int cmd_extract(const std::string& image, const std::string& catalog_path,
                const std::string& label, const std::string& out,
                const std::optional<uint64_t>& offset, const std::optional<int>& partition) {
    VolumeSlice vol = open_volume(open_image(image), make_selector(offset, partition));
    FsVolume fs = FsVolume::open(std::move(vol));
    Catalog c = parse_catalog(slurp(catalog_path), CatalogMode::StrictList, label, catalog_path);

    InstancePackage pkg = extract(fs, c);
    FileSink sink(out);
    pack(pkg, sink);
    sink.commit();

    std::printf("%zu entries, %llu blob bytes -> %s\n", pkg.manifest.entries.size(),
                (unsigned long long)pkg.blobs.size(), out.c_str());
    if (!pkg.manifest.missing.empty()) {
        std::fprintf(stderr, "%zu catalog path(s) missing from the filesystem:\n",
                     pkg.manifest.missing.size());
        for (const std::string& m : pkg.manifest.missing)
            std::fprintf(stderr, "  %s\n", m.c_str());
        return EXIT_PARTIAL;
    }
    return 0;
}

int cmd_verify(const std::string& path) {
    auto src = open_source(path);
    InstancePackage pkg = unpack(*src); // verifies structure and every hash
    uint64_t files = 0, dirs = 0, links = 0, other = 0;
    for (const ManifestEntry& e : pkg.manifest.entries) {
        switch (e.kind) {
        case FileKind::File: ++files; break;
        case FileKind::Dir: ++dirs; break;
        case FileKind::Symlink: ++links; break;
        case FileKind::Other: ++other; break;
        }
    }
    std::printf("%zu entries (%llu files, %llu dirs, %llu symlinks, %llu other), "
                "%zu missing, %llu blob bytes: all hashes OK\n",
                pkg.manifest.entries.size(), (unsigned long long)files, (unsigned long long)dirs,
                (unsigned long long)links, (unsigned long long)other, pkg.manifest.missing.size(),
                (unsigned long long)pkg.blobs.size());
    return 0;
}

// CSV columns: os_name,fs_used_gib,allocated_gib (header optional)
int cmd_report_occupancy(const std::string& input, const std::string& format) {
    std::vector<OccupancyInput> rows;
    for (const auto& cells : read_csv(input)) {
        if (cells.size() >= 2 && cells[1] == "fs_used_gib") continue; // header
        if (cells.size() != 3)
            fail(Errc::corrupt, "expected 3 columns (os_name,fs_used_gib,allocated_gib)");
        rows.push_back({cells[0], to_double(cells[1], "fs_used_gib"),
                        to_double(cells[2], "allocated_gib")});
    }
    OccupancyTable t = occupancy_table(rows);
    std::fputs((format == "csv" ? render_occupancy_csv(t) : render_occupancy_text(t)).c_str(),
               stdout);
    return 0;
}

// CSV columns: name,files,kib,fs_used_gib[,printed_pct]
int cmd_report_monitor(const std::string& input, const std::string& format) {
    std::vector<MonitorInput> rows;
    for (const auto& cells : read_csv(input)) {
        if (cells.size() >= 2 && cells[1] == "files") continue; // header
        if (cells.size() != 4 && cells.size() != 5)
            fail(Errc::corrupt,
                 "expected 4-5 columns (name,files,kib,fs_used_gib[,printed_pct])");
        MonitorInput in;
        in.name = cells[0];
        in.files = to_u64(cells[1], "files");
        in.kib = to_double(cells[2], "kib");
        in.fs_used_gib = to_double(cells[3], "fs_used_gib");
        if (cells.size() == 5 && !cells[4].empty())
            in.printed_pct = to_double(cells[4], "printed_pct");
        rows.push_back(std::move(in));
    }
    MonitorTable t = monitor_table(rows);
    std::fputs((format == "csv" ? render_monitor_csv(t) : render_monitor_text(t)).c_str(),
               stdout);
    for (const ConsistencyFlag& f : consistency_check(rows))
        std::fprintf(stderr, "inconsistent row '%s': printed %.2f%%, recomputed %.2f%%\n",
                     f.name.c_str(), f.printed_pct, f.recomputed_pct);
    return 0;
}

int cmd_report_estimate(double boot, double app, double base_gib,
                        const std::optional<double>& dedup, const std::string& format) {
    ReductionEstimate e =
        combined_estimate(boot, app, base_gib,
                          dedup ? std::optional<double>(*dedup) : std::nullopt);
    std::fputs((format == "csv" ? render_estimate_csv(e) : render_estimate_text(e)).c_str(),
               stdout);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"VM image minimization tools"};
    app.require_subcommand(1);

    // inspect
    std::string in_path, out_path;
    auto* inspect = app.add_subcommand("inspect", "Print container header and block-map summary");
    inspect->add_option("vdi", in_path, "VDI file")->required();

    // to-raw
    auto* toraw = app.add_subcommand("to-raw", "Flatten a VDI container to a raw image");
    toraw->add_option("vdi", in_path, "VDI file")->required();
    toraw->add_option("out", out_path, "output raw image")->required();

    // fs-stat
    std::optional<uint64_t> offset;
    std::optional<int> partition;
    auto* fsstat = app.add_subcommand("fs-stat", "Print filesystem occupancy statistics");
    fsstat->add_option("image", in_path, "VDI or raw image")->required();
    auto* off_opt = fsstat->add_option("--offset", offset, "volume offset in bytes");
    fsstat->add_option("--partition", partition, "MBR partition number (1-4)")
        ->check(CLI::Range(1, 4))
        ->excludes(off_opt);

    // catalog normalize
    std::string cat_in, cat_out;
    bool scan = false;
    auto* catalog = app.add_subcommand("catalog", "Catalog utilities");
    catalog->require_subcommand(1);
    auto* normalize = catalog->add_subcommand("normalize", "Canonicalize a catalog file");
    normalize->add_option("in", cat_in, "input catalog")->required();
    normalize->add_option("out", cat_out, "output catalog")->required();
    normalize->add_flag("--scan", scan, "scan free-form tracer output for absolute paths");

    // extract
    std::string catalog_path, label, vsip_out;
    auto* extract_cmd = app.add_subcommand("extract", "Extract catalogued files into a package");
    extract_cmd->add_option("image", in_path, "VDI or raw image")->required();
    extract_cmd->add_option("--catalog", catalog_path, "catalog file")->required();
    extract_cmd->add_option("--label", label, "package label")
        ->required()
        ->check(CLI::IsMember({"boot", "app"}));
    extract_cmd->add_option("--out", vsip_out, "output package path")->required();
    auto* eoff = extract_cmd->add_option("--offset", offset, "volume offset in bytes");
    extract_cmd->add_option("--partition", partition, "MBR partition number (1-4)")
        ->check(CLI::Range(1, 4))
        ->excludes(eoff);

    // verify
    auto* verify = app.add_subcommand("verify", "Validate a package and all content hashes");
    verify->add_option("vsip", in_path, "package file")->required();

    // report
    std::string report_input, format = "text";
    double boot_pct = 0, app_pct = 0, base_gib = 0;
    std::optional<double> dedup_pct;
    auto* report = app.add_subcommand("report", "Occupancy / monitoring / estimate tables");
    report->require_subcommand(1);
    auto* occ = report->add_subcommand("occupancy", "FS occupancy table");
    occ->add_option("--input", report_input, "CSV: os_name,fs_used_gib,allocated_gib")
        ->required();
    occ->add_option("--format", format, "text|csv")->check(CLI::IsMember({"text", "csv"}));
    auto* mon = report->add_subcommand("monitor", "catalog coverage table");
    mon->add_option("--input", report_input, "CSV: name,files,kib,fs_used_gib[,printed_pct]")
        ->required();
    mon->add_option("--format", format, "text|csv")->check(CLI::IsMember({"text", "csv"}));
    auto* est = report->add_subcommand("estimate", "combined reduction estimate");
    est->add_option("--boot", boot_pct, "boot catalog pct of FS")->required();
    est->add_option("--app", app_pct, "app catalog pct of FS")->required();
    est->add_option("--base-gib", base_gib, "base filesystem size in GiB")->required();
    est->add_option("--dedup-pct", dedup_pct, "union-based pct (removes overlap)");
    est->add_option("--format", format, "text|csv")->check(CLI::IsMember({"text", "csv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : EXIT_USAGE; // --help exits 0
    }

    try {
        if (inspect->parsed()) return cmd_inspect(in_path);
        if (toraw->parsed()) return cmd_to_raw(in_path, out_path);
        if (fsstat->parsed()) return cmd_fs_stat(in_path, offset, partition);
        if (normalize->parsed()) return cmd_catalog_normalize(cat_in, cat_out, scan);
        if (extract_cmd->parsed())
            return cmd_extract(in_path, catalog_path, label, vsip_out, offset, partition);
        if (verify->parsed()) return cmd_verify(in_path);
        if (occ->parsed()) return cmd_report_occupancy(report_input, format);
        if (mon->parsed()) return cmd_report_monitor(report_input, format);
        if (est->parsed()) return cmd_report_estimate(boot_pct, app_pct, base_gib, dedup_pct, format);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_DATA;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return EXIT_DATA;
    }
    return EXIT_USAGE;
}
