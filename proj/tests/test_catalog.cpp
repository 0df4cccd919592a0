#include <doctest.h>

#include "ext2_builder.hpp"
#include "vmslim/catalog.hpp"
#include "vmslim/error.hpp"

#include <algorithm>
#include <random>
#include <set>

using namespace vmslim;
using testsupport::BuildResult;
using testsupport::Ext2Builder;

namespace {

FsVolume open_fs(const BuildResult& r) {
    auto src = std::make_shared<MemorySource>(r.image);
    return FsVolume::open(VolumeSlice(src, 0, r.image.size()));
}

// Independent normalizer: plain stack simulation over components.
std::string oracle_normalize(const std::string& p) {
    std::vector<std::string> stack;
    std::string comp;
    for (size_t i = 1; i <= p.size(); ++i) {
        if (i == p.size() || p[i] == '/') {
            if (comp == "..") {
                if (!stack.empty()) stack.pop_back();
            } else if (!comp.empty() && comp != ".") {
                stack.push_back(comp);
            }
            comp.clear();
        } else {
            comp += p[i];
        }
    }
    std::string out;
    for (const auto& c : stack)
        out += "/" + c;
    return out.empty() ? "/" : out;
}

std::string random_pathish(std::mt19937& rng) {
    static const char* comps[] = {"usr", "bin", "lib", "a", "bb", ".", "..", "x1", "étc"};
    std::string p = "/";
    const int n = 1 + rng() % 6;
    for (int i = 0; i < n; ++i) {
        p += comps[rng() % (sizeof comps / sizeof *comps)];
        if (i + 1 < n)
            p.append(1 + rng() % 2, '/'); // sometimes doubled separators
    }
    if (rng() % 4 == 0)
        p += "/";
    return p;
}

} // namespace

TEST_CASE("normalize_path collapses lexically") {
    CHECK(normalize_path("/usr/../lib//x") == "/lib/x");
    CHECK(normalize_path("/") == "/");
    CHECK(normalize_path("/..") == "/");
    CHECK(normalize_path("/../..") == "/");
    CHECK(normalize_path("/a/./b") == "/a/b");
    CHECK(normalize_path("/a/b/") == "/a/b");
    CHECK(normalize_path("/a/b/..") == "/a");
    CHECK(normalize_path("///x") == "/x");
    CHECK(normalize_path("/a/../../b") == "/b");

    CHECK_THROWS_AS(normalize_path("relative/path"), Error);
    CHECK_THROWS_AS(normalize_path(""), Error);
    try {
        normalize_path("x");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::non_absolute_path);
    }
}

TEST_CASE("normalize_path agrees with a stack-based reference") {
    std::mt19937 rng(881);
    for (int i = 0; i < 500; ++i) {
        std::string p = random_pathish(rng);
        std::string got = normalize_path(p);
        CHECK(got == oracle_normalize(p));
        CHECK(normalize_path(got) == got); // idempotent
        CHECK(got[0] == '/');
        // no '.' or '..' components survive
        CHECK(got.find("/./") == std::string::npos);
        CHECK(got.find("/../") == std::string::npos);
    }
}

TEST_CASE("strict list parsing") {
    auto c = parse_catalog("/bin/sh\n/bin/sh\n# note\n", CatalogMode::StrictList, "boot");
    CHECK(c.label == "boot");
    CHECK(c.entries == std::vector<std::string>{"/bin/sh"});

    SUBCASE("blank lines, CRLF and padding are tolerated") {
        auto d = parse_catalog("\n  /b/a \r\n\t/a\r\n\n# c\n/a/../c\n", CatalogMode::StrictList, "x");
        CHECK(d.entries == std::vector<std::string>{"/a", "/b/a", "/c"});
    }

    SUBCASE("a missing trailing newline still yields the last path") {
        auto d = parse_catalog("/one\n/two", CatalogMode::StrictList, "x");
        CHECK(d.entries == std::vector<std::string>{"/one", "/two"});
    }

    SUBCASE("non-absolute lines are errors that name the line") {
        try {
            parse_catalog("/ok\nbad/path\n", CatalogMode::StrictList, "x");
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::non_absolute_path);
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
    }

    SUBCASE("invalid UTF-8 is rejected with a byte offset") {
        std::vector<uint8_t> bad{'/', 'a', '\n', '/', 0xFF, 'b', '\n'};
        try {
            parse_catalog(bad, CatalogMode::StrictList, "x");
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::bad_encoding);
            CHECK(std::string(e.what()).find("byte 4") != std::string::npos);
        }
    }

    SUBCASE("multi-byte UTF-8 paths are fine") {
        auto d = parse_catalog("/usr/share/ñandú\n", CatalogMode::StrictList, "x");
        CHECK(d.entries == std::vector<std::string>{"/usr/share/ñandú"});
    }

    SUBCASE("empty input parses to an empty catalog") {
        auto d = parse_catalog("", CatalogMode::StrictList, "x");
        CHECK(d.entries.empty());
        auto e = parse_catalog("# only a comment\n\n", CatalogMode::StrictList, "x");
        CHECK(e.entries.empty());
    }
}

TEST_CASE("token scan parsing") {
    auto c = parse_catalog("exe: /usr/bin/app uses /lib/libc.so.6", CatalogMode::TokenScan, "app");
    CHECK(c.entries == std::vector<std::string>{"/lib/libc.so.6", "/usr/bin/app"});

    SUBCASE("non-path tokens are dropped, never an error") {
        auto d = parse_catalog("pid=17 name=app\nopen(/etc/fstab) -> 3\n", CatalogMode::TokenScan, "x");
        // "(/" prefixed token does not start with '/', so only clean tokens count
        CHECK(d.entries.empty());
        auto e = parse_catalog("17 /etc/fstab 3", CatalogMode::TokenScan, "x");
        CHECK(e.entries == std::vector<std::string>{"/etc/fstab"});
    }

    SUBCASE("invalid bytes split tokens") {
        std::vector<uint8_t> raw{'/', 'a', 0xC0, '/', 'b', ' ', 'z'};
        auto d = parse_catalog(raw, CatalogMode::TokenScan, "x");
        CHECK(d.entries == std::vector<std::string>{"/a", "/b"});
    }

    SUBCASE("normalization applies to tokens too") {
        auto d = parse_catalog("/x/../y //z", CatalogMode::TokenScan, "x");
        CHECK(d.entries == std::vector<std::string>{"/y", "/z"});
    }
}

TEST_CASE("parse output always satisfies the catalog invariants") {
    std::mt19937 rng(4242);
    for (int iter = 0; iter < 60; ++iter) {
        std::string text;
        const int lines = rng() % 12;
        for (int i = 0; i < lines; ++i) {
            text += random_pathish(rng);
            text += (rng() % 5 == 0) ? " " : "\n";
        }
        auto c = parse_catalog(text, CatalogMode::TokenScan, "t");
        CHECK(std::is_sorted(c.entries.begin(), c.entries.end()));
        CHECK(std::adjacent_find(c.entries.begin(), c.entries.end()) == c.entries.end());
        for (const auto& p : c.entries)
            CHECK(normalize_path(p) == p);

        // round-trip through the canonical rendering
        auto back = parse_catalog(render_catalog(c), CatalogMode::StrictList, c.label);
        CHECK(back.entries == c.entries);
    }
}

TEST_CASE("merge_union") {
    auto a = make_catalog({"/x"}, "boot");
    auto b = make_catalog({"/x"}, "app");
    auto u = merge_union(a, b);
    CHECK(u.entries == std::vector<std::string>{"/x"});
    CHECK(u.label == "boot+app");
    CHECK(merge_union(a, a).label == "boot");

    auto d1 = make_catalog({"/b", "/d"}, "x");
    auto d2 = make_catalog({"/a", "/c"}, "x");
    CHECK(merge_union(d1, d2).entries == std::vector<std::string>{"/a", "/b", "/c", "/d"});

    SUBCASE("matches a brute-force set union on random inputs") {
        std::mt19937 rng(77);
        for (int iter = 0; iter < 100; ++iter) {
            std::vector<std::string> pa, pb;
            for (int i = 0; i < int(rng() % 10); ++i)
                pa.push_back(oracle_normalize(random_pathish(rng)));
            for (int i = 0; i < int(rng() % 10); ++i)
                pb.push_back(oracle_normalize(random_pathish(rng)));
            auto ca = make_catalog(pa, "a");
            auto cb = make_catalog(pb, "b");
            auto got = merge_union(ca, cb);

            std::set<std::string> want(ca.entries.begin(), ca.entries.end());
            want.insert(cb.entries.begin(), cb.entries.end());
            CHECK(got.entries == std::vector<std::string>(want.begin(), want.end()));
            CHECK(got.entries.size() <= ca.entries.size() + cb.entries.size());
        }
    }
}

TEST_CASE("closure_expand adds parents and symlink targets") {
    Ext2Builder b({});
    b.add_dir("/usr");
    b.add_dir("/usr/bin");
    b.add_dir("/bin");
    b.add_file("/usr/bin/app", {1, 2, 3});
    b.add_file("/bin/bash", {4, 5});
    b.add_symlink("/bin/sh", "bash");
    b.add_symlink("/usr/bin/editor", "/bin/bash");
    auto r = b.build();
    auto fs = open_fs(r);

    SUBCASE("parent closure") {
        auto c = closure_expand(make_catalog({"/usr/bin/app"}, "t"), fs);
        CHECK(c.entries ==
              std::vector<std::string>{"/", "/usr", "/usr/bin", "/usr/bin/app"});
    }

    SUBCASE("relative symlink target joins the set") {
        auto c = closure_expand(make_catalog({"/bin/sh"}, "t"), fs);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/bin/bash") == 1);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/bin/sh") == 1);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/bin") == 1);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/") == 1);
    }

    SUBCASE("absolute symlink target joins the set with its parents") {
        auto c = closure_expand(make_catalog({"/usr/bin/editor"}, "t"), fs);
        for (const char* want : {"/", "/bin", "/bin/bash", "/usr", "/usr/bin", "/usr/bin/editor"})
            CHECK(std::count(c.entries.begin(), c.entries.end(), want) == 1);
    }

    SUBCASE("idempotence") {
        auto once = closure_expand(make_catalog({"/bin/sh", "/usr/bin/editor"}, "t"), fs);
        auto twice = closure_expand(once, fs);
        CHECK(once.entries == twice.entries);
    }

    SUBCASE("unresolvable entries are kept") {
        auto c = closure_expand(make_catalog({"/ghost/file"}, "t"), fs);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/ghost/file") == 1);
        CHECK(std::count(c.entries.begin(), c.entries.end(), "/ghost") == 1);
    }
}

TEST_CASE("catalog_stats sums found sizes and lists the missing") {
    Ext2Builder b({});
    b.add_dir("/d");
    b.add_file("/d/a", std::vector<uint8_t>(1500, 'a'));
    b.add_file("/d/b", std::vector<uint8_t>(2048, 'b'));
    b.add_symlink("/d/link", "a"); // size 1 byte (the target text)
    auto r = b.build();
    auto fs = open_fs(r);

    auto c = make_catalog({"/d/a", "/d/b", "/d/link", "/d", "/ghost"}, "t");
    auto st = catalog_stats(c, fs);

    CHECK(st.file_count == 4); // the directory counts as found, /ghost not
    CHECK(st.total_bytes == 1500 + 2048 + 1);
    CHECK(st.total_kib == (1500 + 2048 + 1 + 1023) / 1024);
    CHECK(st.missing == std::vector<std::string>{"/ghost"});

    // the percentage follows from the superblock ground truth
    const double expect =
        100.0 * (double(st.total_kib) * 1024.0) / double(r.used_bytes);
    CHECK(st.pct_of_fs == doctest::Approx(expect).epsilon(0.01));
    // ... and is rounded to two decimals
    CHECK(st.pct_of_fs * 100 == doctest::Approx(std::round(st.pct_of_fs * 100)));

    SUBCASE("directories contribute zero bytes") {
        auto only_dir = catalog_stats(make_catalog({"/d"}, "t"), fs);
        CHECK(only_dir.file_count == 1);
        CHECK(only_dir.total_bytes == 0);
        CHECK(only_dir.total_kib == 0);
        CHECK(only_dir.pct_of_fs == 0.0);
    }

    SUBCASE("union stats are subadditive") {
        auto ca = make_catalog({"/d/a", "/d/b"}, "a");
        auto cb = make_catalog({"/d/b", "/d/link"}, "b");
        auto su = catalog_stats(merge_union(ca, cb), fs);
        auto sa = catalog_stats(ca, fs);
        auto sb = catalog_stats(cb, fs);
        CHECK(su.total_bytes <= sa.total_bytes + sb.total_bytes);
        CHECK(su.total_bytes == 1500 + 2048 + 1); // dedupe removed /d/b once
    }
}
