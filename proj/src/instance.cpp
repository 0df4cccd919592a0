#include "vmslim/instance.hpp"

#include "vmslim/error.hpp"

#include <algorithm>
#include <cstring>

namespace vmslim {

namespace {

constexpr size_t ENTRY_FIXED_BYTES = 2 + 1 + 4 + 8 + 8 + 32; // all but the path

struct Resolved {
    std::string path;
    Inode ino;
    bool found = false;
};

std::vector<Resolved> resolve_all(const FsVolume& fs, const std::vector<std::string>& paths) {
    std::vector<Resolved> out;
    out.reserve(paths.size());
    for (const std::string& p : paths) {
        Resolved r;
        r.path = p;
        try {
            r.ino = fs.resolve_path(p);
            r.found = true;
        } catch (const Error& e) {
            if (e.code() != Errc::not_found && e.code() != Errc::not_a_directory &&
                e.code() != Errc::symlink_loop)
                throw;
        }
        out.push_back(std::move(r));
    }
    return out;
}

// Lays out blob offsets and concatenates blobs once entries/blobs are known.
InstancePackage assemble(std::string label, std::vector<ManifestEntry> entries,
                         std::vector<std::vector<uint8_t>> blobs,
                         std::vector<std::string> missing) {
    InstancePackage p;
    p.manifest.label = std::move(label);
    p.manifest.entries = std::move(entries);
    p.manifest.missing = std::move(missing);
    uint64_t cursor = header_size(p.manifest);
    for (size_t i = 0; i < p.manifest.entries.size(); ++i) {
        ManifestEntry& e = p.manifest.entries[i];
        if (!e.has_blob()) continue;
        e.blob_offset = cursor;
        cursor += e.size;
        p.blobs.insert(p.blobs.end(), blobs[i].begin(), blobs[i].end());
    }
    return p;
}

InstancePackage extract_impl(const FsVolume& fs, const Catalog& c, ExecMode mode) {
    Catalog closed = closure_expand(c, fs);
    std::vector<Resolved> rs = resolve_all(fs, closed.entries);

    std::vector<std::string> missing;
    std::vector<const Resolved*> found;
    for (const Resolved& r : rs)
        (r.found ? (void)found.push_back(&r) : (void)missing.push_back(r.path));

    std::vector<ManifestEntry> entries(found.size());
    std::vector<std::vector<uint8_t>> blobs(found.size());

    // Per-entry reads and hashing are independent; order is restored by the
    // index, so the result does not depend on scheduling.
    detail::parallel_for(found.size(), use_parallel(mode), [&](size_t i) {
        const Resolved& r = *found[i];
        ManifestEntry e;
        e.path = r.path;
        e.kind = r.ino.kind();
        e.mode = r.ino.permissions();
        if (e.has_blob()) {
            blobs[i] = fs.read_file(r.ino);
            e.size = blobs[i].size();
            e.hash = sha256(blobs[i]);
        }
        entries[i] = std::move(e);
    });

    return assemble(c.label, std::move(entries), std::move(blobs), std::move(missing));
}

} // namespace

uint64_t header_size(const InstanceManifest& m) {
    uint64_t n = 12; // magic + version + flags + entry_count
    for (const ManifestEntry& e : m.entries) n += ENTRY_FIXED_BYTES + e.path.size();
    n += 4;
    for (const std::string& p : m.missing) n += 2 + p.size();
    return n;
}

uint64_t packed_size(const InstancePackage& p) {
    return header_size(p.manifest) + p.blobs.size();
}

InstancePackage extract(const FsVolume& fs, const Catalog& c, ExecMode mode) {
    return extract_impl(fs, c, mode);
}

InstancePackage extract_reference(const FsVolume& fs, const Catalog& c) {
    Catalog closed = closure_expand(c, fs);
    std::vector<ManifestEntry> entries;
    std::vector<std::vector<uint8_t>> blobs;
    std::vector<std::string> missing;
    for (const Resolved& r : resolve_all(fs, closed.entries)) {
        if (!r.found) {
            missing.push_back(r.path);
            continue;
        }
        ManifestEntry e;
        e.path = r.path;
        e.kind = r.ino.kind();
        e.mode = r.ino.permissions();
        std::vector<uint8_t> blob;
        if (e.has_blob()) {
            blob = fs.read_file(r.ino);
            e.size = blob.size();
            e.hash = sha256(blob);
        }
        entries.push_back(std::move(e));
        blobs.push_back(std::move(blob));
    }
    return assemble(c.label, std::move(entries), std::move(blobs), std::move(missing));
}

void pack(const InstancePackage& p, ByteSink& sink) {
    const InstanceManifest& m = p.manifest;
    std::vector<uint8_t> head;
    head.reserve(header_size(m));
    auto put16 = [&](uint16_t v) {
        uint8_t b[2];
        put_u16le(b, v);
        head.insert(head.end(), b, b + 2);
    };
    auto put32 = [&](uint32_t v) {
        uint8_t b[4];
        put_u32le(b, v);
        head.insert(head.end(), b, b + 4);
    };
    auto put64 = [&](uint64_t v) {
        uint8_t b[8];
        put_u64le(b, v);
        head.insert(head.end(), b, b + 8);
    };

    head.insert(head.end(), VSIP_MAGIC, VSIP_MAGIC + 4);
    put16(VSIP_VERSION);
    put16(0); // flags
    if (m.entries.size() > 0xFFFFFFFFull) fail(Errc::out_of_range, "too many entries");
    put32(uint32_t(m.entries.size()));
    for (const ManifestEntry& e : m.entries) {
        if (e.path.size() > 0xFFFF)
            fail(Errc::out_of_range, "path too long: " + e.path.substr(0, 80));
        put16(uint16_t(e.path.size()));
        head.insert(head.end(), e.path.begin(), e.path.end());
        head.push_back(uint8_t(e.kind));
        put32(e.mode);
        put64(e.size);
        put64(e.has_blob() ? e.blob_offset : 0);
        head.insert(head.end(), e.hash.begin(), e.hash.end());
    }
    if (m.missing.size() > 0xFFFFFFFFull) fail(Errc::out_of_range, "too many missing paths");
    put32(uint32_t(m.missing.size()));
    for (const std::string& s : m.missing) {
        if (s.size() > 0xFFFF) fail(Errc::out_of_range, "path too long: " + s.substr(0, 80));
        put16(uint16_t(s.size()));
        head.insert(head.end(), s.begin(), s.end());
    }

    sink.write(head.data(), head.size());
    if (!p.blobs.empty()) sink.write(p.blobs.data(), p.blobs.size());
}

std::vector<uint8_t> pack_bytes(const InstancePackage& p) {
    MemorySink sink;
    pack(p, sink);
    return std::move(sink.data());
}

InstancePackage unpack(const ByteSource& src) {
    const uint64_t len = src.size();
    uint64_t pos = 0;
    auto need = [&](uint64_t n, const char* what) {
        if (pos + n > len)
            fail(Errc::truncated_package, std::string("package ends inside ") + what);
    };
    auto get = [&](void* dst, uint64_t n) {
        src.read_at(pos, dst, size_t(n));
        pos += n;
    };

    need(12, "header");
    uint8_t head[12];
    get(head, 12);
    if (std::memcmp(head, VSIP_MAGIC, 4) != 0)
        fail(Errc::bad_package_magic, "expected magic \"VSIP\"");
    uint16_t version = get_u16le(head + 4);
    if (version != VSIP_VERSION)
        fail(Errc::unsupported_version, "package version " + std::to_string(version));
    uint16_t flags = get_u16le(head + 6);
    if (flags != 0) fail(Errc::corrupt, "nonzero package flags");
    uint32_t entry_count = get_u32le(head + 8);

    InstancePackage p;
    p.manifest.entries.reserve(std::min<uint64_t>(entry_count, 1u << 20));
    for (uint32_t i = 0; i < entry_count; ++i) {
        need(2, "entry path length");
        uint8_t b2[2];
        get(b2, 2);
        uint16_t plen = get_u16le(b2);
        need(plen + uint64_t(ENTRY_FIXED_BYTES - 2), "entry record");
        ManifestEntry e;
        e.path.resize(plen);
        if (plen) get(e.path.data(), plen);
        uint8_t fixed[1 + 4 + 8 + 8 + 32];
        get(fixed, sizeof fixed);
        if (fixed[0] > 3)
            fail(Errc::corrupt, "entry kind " + std::to_string(fixed[0]) + " at " + e.path);
        e.kind = FileKind(fixed[0]);
        e.mode = get_u32le(fixed + 1);
        e.size = get_u64le(fixed + 5);
        e.blob_offset = get_u64le(fixed + 13);
        std::memcpy(e.hash.data(), fixed + 21, 32);
        if (e.path.empty() || e.path[0] != '/')
            fail(Errc::corrupt, "entry path not absolute: '" + e.path + "'");
        if (!e.has_blob()) {
            Sha256Digest zero{};
            if (e.size != 0 || e.blob_offset != 0 || e.hash != zero)
                fail(Errc::corrupt, "blob fields set on non-blob entry " + e.path);
        }
        if (!p.manifest.entries.empty() && !(p.manifest.entries.back().path < e.path))
            fail(Errc::corrupt, "entries not sorted at " + e.path);
        p.manifest.entries.push_back(std::move(e));
    }

    need(4, "missing count");
    uint8_t b4[4];
    get(b4, 4);
    uint32_t missing_count = get_u32le(b4);
    p.manifest.missing.reserve(std::min<uint64_t>(missing_count, 1u << 20));
    for (uint32_t i = 0; i < missing_count; ++i) {
        need(2, "missing path length");
        uint8_t b2[2];
        get(b2, 2);
        uint16_t plen = get_u16le(b2);
        need(plen, "missing path");
        std::string s(plen, '\0');
        if (plen) get(s.data(), plen);
        if (!p.manifest.missing.empty() && !(p.manifest.missing.back() < s))
            fail(Errc::corrupt, "missing paths not sorted at " + s);
        p.manifest.missing.push_back(std::move(s));
    }

    // Blob section: offsets must tile it exactly, in entry order.
    uint64_t cursor = pos;
    for (const ManifestEntry& e : p.manifest.entries) {
        if (!e.has_blob()) continue;
        if (e.blob_offset != cursor)
            fail(Errc::corrupt, "blob offset mismatch at " + e.path);
        cursor += e.size;
    }
    if (cursor > len) fail(Errc::truncated_package, "package ends inside blob section");
    if (cursor < len) fail(Errc::corrupt, "trailing bytes after blob section");

    p.blobs = read_bytes(src, pos, size_t(len - pos));
    for (const ManifestEntry& e : p.manifest.entries) {
        if (!e.has_blob()) continue;
        const uint8_t* blob = p.blobs.data() + (e.blob_offset - pos);
        if (sha256(blob, size_t(e.size)) != e.hash)
            fail(Errc::hash_mismatch, e.path);
    }
    return p;
}

InstancePackage unpack(const std::vector<uint8_t>& bytes) {
    MemorySource src(bytes);
    return unpack(src);
}

bool same_content(const InstancePackage& a, const InstancePackage& b) {
    if (a.manifest.format_version != b.manifest.format_version) return false;
    if (a.manifest.missing != b.manifest.missing) return false;
    if (a.blobs != b.blobs) return false;
    if (a.manifest.entries.size() != b.manifest.entries.size()) return false;
    for (size_t i = 0; i < a.manifest.entries.size(); ++i) {
        const ManifestEntry& x = a.manifest.entries[i];
        const ManifestEntry& y = b.manifest.entries[i];
        if (x.path != y.path || x.kind != y.kind || x.mode != y.mode || x.size != y.size ||
            x.blob_offset != y.blob_offset || x.hash != y.hash)
            return false;
    }
    return true;
}

InstancePair instance_pair(const FsVolume& fs, const Catalog& boot, const Catalog& app,
                           ExecMode mode) {
    InstancePair pair;
    pair.boot = extract(fs, boot, mode);
    pair.app = extract(fs, app, mode);

    const auto& be = pair.boot.manifest.entries;
    const auto& ae = pair.app.manifest.entries;
    size_t i = 0, j = 0;
    while (i < be.size() && j < ae.size()) {
        if (be[i].path < ae[j].path) {
            ++i;
        } else if (ae[j].path < be[i].path) {
            ++j;
        } else {
            pair.overlap.paths.push_back(be[i].path);
            pair.overlap.total_bytes += be[i].size;
            ++i;
            ++j;
        }
    }
    return pair;
}

} // namespace vmslim
