#pragma once

#include "vmslim/ext2.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vmslim {

// File-access catalogs: normalized lists of absolute guest paths produced by
// boot-time (readahead-style) or session-time (preload-style) profiling.
// Canonical file format: UTF-8, one path per line, LF endings, '#' comments.

enum class CatalogMode {
    StrictList, // one absolute path per line, comments and blanks skipped
    TokenScan,  // lenient: every whitespace-free token starting with '/'
};

struct Catalog {
    std::string label;      // "boot", "app", or a custom name
    std::string provenance; // source file name, empty if built in memory
    std::vector<std::string> entries; // sorted byte-wise, unique, absolute, '.'/'..'-free
};

struct CatalogStats {
    uint64_t file_count = 0; // catalog entries found on the filesystem
    uint64_t total_bytes = 0;
    uint64_t total_kib = 0; // ceil(total_bytes / 1024)
    double pct_of_fs = 0;   // 100 * total_kib * 1024 / fs used bytes, half-up 2dp
    std::vector<std::string> missing; // entries absent from the filesystem
};

// Collapses '.', '..' and duplicate slashes lexically; no filesystem access.
// "/usr/../lib//x" -> "/lib/x". Fails with NonAbsolutePath unless the input
// starts with '/'.
std::string normalize_path(std::string_view path);

Catalog parse_catalog(const std::vector<uint8_t>& text, CatalogMode mode,
                      std::string label, std::string provenance = "");
Catalog parse_catalog(std::string_view text, CatalogMode mode, std::string label,
                      std::string provenance = "");

Catalog make_catalog(std::vector<std::string> paths, std::string label,
                     std::string provenance = "");

Catalog merge_union(const Catalog& a, const Catalog& b);

// Adds, transitively, every parent directory of each entry and the target of
// every entry that resolves to a symlink (target interpreted relative to the
// symlink's directory). Unresolvable entries are kept as-is; they surface as
// `missing` in stats/extraction.
Catalog closure_expand(const Catalog& c, const FsVolume& fs);

CatalogStats catalog_stats(const Catalog& c, const FsVolume& fs);

// Serialized canonical form: provenance-free, one path per line.
std::string render_catalog(const Catalog& c);

} // namespace vmslim
