#include "vmslim/catalog.hpp"

#include "vmslim/error.hpp"
#include "vmslim/round.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <set>

namespace vmslim {

namespace {

std::vector<std::string_view> split_components(std::string_view p) {
    std::vector<std::string_view> out;
    size_t i = 0;
    while (i <= p.size()) {
        size_t j = p.find('/', i);
        if (j == std::string_view::npos) j = p.size();
        if (j > i) out.push_back(p.substr(i, j - i));
        i = j + 1;
    }
    return out;
}

std::string join_components(const std::vector<std::string_view>& parts) {
    if (parts.empty()) return "/";
    std::string out;
    for (const auto& c : parts) {
        out += '/';
        out.append(c);
    }
    return out;
}

void sort_unique(std::vector<std::string>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Length of the UTF-8 sequence starting at p, or 0 if invalid.
size_t utf8_len(const uint8_t* p, size_t avail) {
    auto cont = [&](size_t k) { return k < avail && (p[k] & 0xC0) == 0x80; };
    uint8_t b = p[0];
    if (b < 0x80) return 1;
    if (b < 0xC2) return 0; // continuation byte or overlong C0/C1
    if (b < 0xE0) return cont(1) ? 2 : 0;
    if (b < 0xF0) {
        if (!cont(1) || !cont(2)) return 0;
        if (b == 0xE0 && p[1] < 0xA0) return 0; // overlong
        if (b == 0xED && p[1] > 0x9F) return 0; // surrogate
        return 3;
    }
    if (b < 0xF5) {
        if (!cont(1) || !cont(2) || !cont(3)) return 0;
        if (b == 0xF0 && p[1] < 0x90) return 0; // overlong
        if (b == 0xF4 && p[1] > 0x8F) return 0; // > U+10FFFF
        return 4;
    }
    return 0;
}

bool is_space_byte(uint8_t b) {
    return b == ' ' || b == '\t' || b == '\n' || b == '\r' || b == '\v' || b == '\f';
}

Catalog finish(std::vector<std::string> paths, std::string label, std::string provenance) {
    sort_unique(paths);
    Catalog c;
    c.label = std::move(label);
    c.provenance = std::move(provenance);
    c.entries = std::move(paths);
    return c;
}

} // namespace

std::string normalize_path(std::string_view path) {
    if (path.empty() || path[0] != '/')
        fail(Errc::non_absolute_path, "path must start with '/': '" + std::string(path) + "'");
    std::vector<std::string_view> parts;
    for (std::string_view c : split_components(path)) {
        if (c == ".") continue;
        if (c == "..") {
            if (!parts.empty()) parts.pop_back(); // "/.." stays at the root
            continue;
        }
        parts.push_back(c);
    }
    return join_components(parts);
}

Catalog parse_catalog(std::string_view text, CatalogMode mode, std::string label,
                      std::string provenance) {
    std::vector<uint8_t> bytes(text.begin(), text.end());
    return parse_catalog(bytes, mode, std::move(label), std::move(provenance));
}

Catalog parse_catalog(const std::vector<uint8_t>& text, CatalogMode mode, std::string label,
                      std::string provenance) {
    std::vector<std::string> paths;

    if (mode == CatalogMode::StrictList) {
        // strict input must decode as UTF-8
        for (size_t i = 0; i < text.size();) {
            size_t n = utf8_len(text.data() + i, text.size() - i);
            if (n == 0)
                fail(Errc::bad_encoding, "invalid UTF-8 at byte " + std::to_string(i));
            i += n;
        }
        size_t lineno = 0;
        size_t pos = 0;
        while (pos <= text.size()) {
            size_t eol = pos;
            while (eol < text.size() && text[eol] != '\n') ++eol;
            ++lineno;
            std::string_view line(reinterpret_cast<const char*>(text.data()) + pos, eol - pos);
            pos = eol + 1;
            if (pos > text.size() && line.empty()) break;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t'))
                line.remove_suffix(1);
            while (!line.empty() && (line.front() == ' ' || line.front() == '\t'))
                line.remove_prefix(1);
            if (line.empty() || line[0] == '#') continue;
            if (line[0] != '/')
                fail(Errc::non_absolute_path,
                     "line " + std::to_string(lineno) + ": '" + std::string(line) + "'");
            paths.push_back(normalize_path(line));
        }
    } else {
        // token_scan: maximal runs of valid UTF-8 non-whitespace; anything
        // that fails to decode acts as a separator
        std::string token;
        auto flush = [&]() {
            if (!token.empty() && token[0] == '/') paths.push_back(normalize_path(token));
            token.clear();
        };
        for (size_t i = 0; i < text.size();) {
            size_t n = utf8_len(text.data() + i, text.size() - i);
            if (n == 0 || (n == 1 && is_space_byte(text[i]))) {
                flush();
                i += 1;
                continue;
            }
            token.append(reinterpret_cast<const char*>(text.data()) + i, n);
            i += n;
        }
        flush();
    }

    return finish(std::move(paths), std::move(label), std::move(provenance));
}

Catalog make_catalog(std::vector<std::string> paths, std::string label, std::string provenance) {
    for (auto& p : paths) p = normalize_path(p);
    return finish(std::move(paths), std::move(label), std::move(provenance));
}

Catalog merge_union(const Catalog& a, const Catalog& b) {
    std::vector<std::string> merged;
    merged.reserve(a.entries.size() + b.entries.size());
    std::set_union(a.entries.begin(), a.entries.end(), b.entries.begin(), b.entries.end(),
                   std::back_inserter(merged));
    Catalog c;
    c.label = a.label == b.label ? a.label : a.label + "+" + b.label;
    c.provenance = a.provenance == b.provenance
                       ? a.provenance
                       : a.provenance + "+" + b.provenance;
    c.entries = std::move(merged);
    return c;
}

Catalog closure_expand(const Catalog& c, const FsVolume& fs) {
    std::set<std::string> acc(c.entries.begin(), c.entries.end());
    std::deque<std::string> work(c.entries.begin(), c.entries.end());
    auto add = [&](std::string p) {
        if (acc.insert(p).second) work.push_back(std::move(p));
    };

    while (!work.empty()) {
        std::string p = std::move(work.front());
        work.pop_front();

        for (size_t i = p.size(); i > 1;) {
            size_t slash = p.rfind('/', i - 1);
            if (slash == std::string::npos) break;
            add(slash == 0 ? "/" : p.substr(0, slash));
            i = slash;
        }

        try {
            Inode ino = fs.resolve_path(p);
            if (ino.is_symlink()) {
                std::string target = fs.read_symlink_target(ino);
                if (!target.empty()) {
                    std::string abs;
                    if (target[0] == '/') {
                        abs = normalize_path(target);
                    } else {
                        size_t slash = p.rfind('/');
                        std::string dir = slash == 0 ? "/" : p.substr(0, slash);
                        abs = normalize_path(dir + "/" + target);
                    }
                    add(std::move(abs));
                }
            }
        } catch (const Error&) {
            // entry not resolvable; stats/extract will report it missing
        }
    }

    Catalog out;
    out.label = c.label;
    out.provenance = c.provenance;
    out.entries.assign(acc.begin(), acc.end());
    return out;
}

CatalogStats catalog_stats(const Catalog& c, const FsVolume& fs) {
    CatalogStats st;
    for (const std::string& p : c.entries) {
        Inode ino;
        try {
            ino = fs.resolve_path(p);
        } catch (const Error& e) {
            if (e.code() == Errc::not_found || e.code() == Errc::not_a_directory ||
                e.code() == Errc::symlink_loop) {
                st.missing.push_back(p);
                continue;
            }
            throw;
        }
        ++st.file_count;
        if (ino.is_regular() || ino.is_symlink()) st.total_bytes += ino.size;
    }
    st.total_kib = (st.total_bytes + 1023) / 1024;
    uint64_t used = fs.stats().used_bytes;
    if (used > 0)
        st.pct_of_fs = round_half_up2(100.0 * (double(st.total_kib) * 1024.0) / double(used));
    return st;
}

std::string render_catalog(const Catalog& c) {
    std::string out;
    for (const std::string& p : c.entries) {
        out += p;
        out += '\n';
    }
    return out;
}

} // namespace vmslim
