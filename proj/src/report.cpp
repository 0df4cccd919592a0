#include "vmslim/report.hpp"

#include "vmslim/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace vmslim {

namespace {

std::string fmt2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

// Integral values print without decimals so 578 files stay "578".
std::string fmt_num(double v) {
    if (v == std::floor(v) && std::fabs(v) < 1e15) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.0f", v);
        return buf;
    }
    return fmt2(v);
}

void append_padded(std::string& out, const std::string& s, size_t width) {
    out += s;
    for (size_t i = s.size(); i < width; ++i) out += ' ';
}

double monitor_pct(double kib, double fs_used_gib) {
    return round_half_up2(100.0 * kib / (fs_used_gib * 1024.0 * 1024.0));
}

} // namespace

OccupancyTable occupancy_table(const std::vector<OccupancyInput>& rows) {
    OccupancyTable t;
    double pct_sum = 0, used_sum = 0;
    for (const OccupancyInput& in : rows) {
        if (!(in.allocated_gib > 0))
            fail(Errc::out_of_range, "allocated size must be positive for " + in.os_name);
        if (in.fs_used_gib < 0 || in.fs_used_gib > in.allocated_gib)
            fail(Errc::out_of_range, "fs_used outside [0, allocated] for " + in.os_name);
        OccupancyRow r;
        r.os_name = in.os_name;
        r.fs_used_gib = in.fs_used_gib;
        r.allocated_gib = in.allocated_gib;
        r.pct = round_half_up2(100.0 * in.fs_used_gib / in.allocated_gib);
        pct_sum += r.pct;
        used_sum += r.fs_used_gib;
        t.rows.push_back(std::move(r));
    }
    if (!rows.empty()) {
        t.mean_pct = round_half_up2(pct_sum / double(rows.size()));
        t.mean_fs_used_gib = round_half_up2(used_sum / double(rows.size()));
    }
    return t;
}

MonitorTable monitor_table(const std::vector<MonitorInput>& rows) {
    MonitorTable t;
    double pct_sum = 0;
    for (const MonitorInput& in : rows) {
        if (!(in.fs_used_gib > 0))
            fail(Errc::out_of_range, "fs_used must be positive for " + in.name);
        MonitorRow r;
        r.name = in.name;
        r.files = in.files;
        r.kib = in.kib;
        r.fs_used_gib = in.fs_used_gib;
        r.computed_pct = monitor_pct(in.kib, in.fs_used_gib);
        r.printed_pct = in.printed_pct;
        r.pct = in.printed_pct ? *in.printed_pct : r.computed_pct;
        pct_sum += r.pct;
        t.rows.push_back(std::move(r));
    }
    if (!rows.empty()) t.mean_pct = round_half_up2(pct_sum / double(rows.size()));
    return t;
}

std::vector<ConsistencyFlag> consistency_check(const std::vector<MonitorInput>& rows) {
    std::vector<ConsistencyFlag> flags;
    for (const MonitorInput& in : rows) {
        if (!in.printed_pct) continue;
        double recomputed = monitor_pct(in.kib, in.fs_used_gib);
        if (std::fabs(recomputed - *in.printed_pct) > 0.02) {
            ConsistencyFlag f;
            f.name = in.name;
            f.printed_pct = *in.printed_pct;
            f.recomputed_pct = recomputed;
            flags.push_back(std::move(f));
        }
    }
    return flags;
}

ReductionEstimate combined_estimate(double boot_pct, double app_pct, double base_fs_gib,
                                    std::optional<double> dedup_pct) {
    if (boot_pct < 0 || boot_pct > 100 || app_pct < 0 || app_pct > 100)
        fail(Errc::out_of_range, "percentages must lie in [0, 100]");
    if (base_fs_gib < 0) fail(Errc::out_of_range, "base size must be non-negative");
    ReductionEstimate e;
    e.boot_pct = boot_pct;
    e.app_pct = app_pct;
    e.combined_pct = round_half_up2(boot_pct + app_pct);
    e.base_fs_gib = base_fs_gib;
    e.estimated_mib = llround(e.combined_pct / 100.0 * base_fs_gib * 1024.0);
    if (dedup_pct) {
        if (*dedup_pct < 0 || *dedup_pct > e.combined_pct + 1e-9)
            fail(Errc::out_of_range, "deduplicated pct cannot exceed the additive pct");
        e.dedup_pct = round_half_up2(*dedup_pct);
    }
    return e;
}

TransferEstimate transfer_estimate(uint64_t image_bytes, uint64_t reduced_bytes,
                                   double bandwidth_bytes_per_s, uint32_t node_count) {
    if (!(bandwidth_bytes_per_s > 0)) fail(Errc::out_of_range, "bandwidth must be positive");
    if (node_count < 1) fail(Errc::out_of_range, "node count must be at least 1");
    if (reduced_bytes > image_bytes)
        fail(Errc::out_of_range, "reduced image larger than the original");
    TransferEstimate t;
    t.before_s = double(image_bytes) * node_count / bandwidth_bytes_per_s;
    t.after_s = double(reduced_bytes) * node_count / bandwidth_bytes_per_s;
    t.saving_pct = image_bytes == 0
                       ? 0.0
                       : round_half_up2(100.0 * (1.0 - double(reduced_bytes) / double(image_bytes)));
    return t;
}

std::string render_occupancy_text(const OccupancyTable& t) {
    size_t name_w = 4;
    for (const auto& r : t.rows) name_w = std::max(name_w, r.os_name.size());
    name_w += 2;
    std::string out;
    append_padded(out, "os", name_w);
    out += "fs_used_gib  allocated_gib  pct\n";
    for (const auto& r : t.rows) {
        append_padded(out, r.os_name, name_w);
        append_padded(out, fmt2(r.fs_used_gib), 13);
        append_padded(out, fmt2(r.allocated_gib), 15);
        out += fmt2(r.pct);
        out += '\n';
    }
    append_padded(out, "mean", name_w);
    append_padded(out, fmt2(t.mean_fs_used_gib), 13);
    append_padded(out, "", 15);
    out += fmt2(t.mean_pct);
    out += '\n';
    return out;
}

std::string render_occupancy_csv(const OccupancyTable& t) {
    std::string out = "os_name,fs_used_gib,allocated_gib,pct\n";
    for (const auto& r : t.rows)
        out += r.os_name + "," + fmt2(r.fs_used_gib) + "," + fmt2(r.allocated_gib) + "," +
               fmt2(r.pct) + "\n";
    out += "mean," + fmt2(t.mean_fs_used_gib) + ",," + fmt2(t.mean_pct) + "\n";
    return out;
}

std::string render_monitor_text(const MonitorTable& t) {
    size_t name_w = 4;
    for (const auto& r : t.rows) name_w = std::max(name_w, r.name.size());
    name_w += 2;
    std::string out;
    append_padded(out, "name", name_w);
    out += "files    kib         fs_used_gib  pct\n";
    for (const auto& r : t.rows) {
        append_padded(out, r.name, name_w);
        append_padded(out, std::to_string(r.files), 9);
        append_padded(out, fmt_num(r.kib), 12);
        append_padded(out, fmt2(r.fs_used_gib), 13);
        out += fmt2(r.pct);
        if (r.printed_pct && *r.printed_pct != r.computed_pct)
            out += " (recomputed " + fmt2(r.computed_pct) + ")";
        out += '\n';
    }
    append_padded(out, "mean", name_w);
    append_padded(out, "", 9);
    append_padded(out, "", 12);
    append_padded(out, "", 13);
    out += fmt2(t.mean_pct);
    out += '\n';
    return out;
}

std::string render_monitor_csv(const MonitorTable& t) {
    std::string out = "name,files,kib,fs_used_gib,pct,computed_pct\n";
    for (const auto& r : t.rows)
        out += r.name + "," + std::to_string(r.files) + "," + fmt_num(r.kib) + "," +
               fmt2(r.fs_used_gib) + "," + fmt2(r.pct) + "," + fmt2(r.computed_pct) + "\n";
    out += "mean,,,," + fmt2(t.mean_pct) + ",\n";
    return out;
}

std::string render_estimate_text(const ReductionEstimate& e) {
    std::string out;
    out += "boot pct      " + fmt2(e.boot_pct) + "\n";
    out += "app pct       " + fmt2(e.app_pct) + "\n";
    out += "combined pct  " + fmt2(e.combined_pct) + "\n";
    if (e.dedup_pct) out += "dedup pct     " + fmt2(*e.dedup_pct) + "\n";
    out += "base fs gib   " + fmt2(e.base_fs_gib) + "\n";
    out += "estimated mib " + std::to_string(e.estimated_mib) + "\n";
    return out;
}

std::string render_estimate_csv(const ReductionEstimate& e) {
    std::string out = "boot_pct,app_pct,combined_pct,dedup_pct,base_fs_gib,estimated_mib\n";
    out += fmt2(e.boot_pct) + "," + fmt2(e.app_pct) + "," + fmt2(e.combined_pct) + ",";
    if (e.dedup_pct) out += fmt2(*e.dedup_pct);
    out += "," + fmt2(e.base_fs_gib) + "," + std::to_string(e.estimated_mib) + "\n";
    return out;
}

std::string render_transfer_text(const TransferEstimate& t) {
    std::string out;
    out += "before_s   " + fmt2(t.before_s) + "\n";
    out += "after_s    " + fmt2(t.after_s) + "\n";
    out += "saving_pct " + fmt2(t.saving_pct) + "\n";
    return out;
}

} // namespace vmslim
