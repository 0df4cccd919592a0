#pragma once

#include "vmslim/round.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace vmslim {

// Occupancy, monitoring, and reduction-estimate arithmetic plus deterministic
// text/CSV rendering. Units are binary throughout: 1 KiB = 1024 B,
// 1 GiB = 1024^3 B. All percentages are rounded half-up to 2 decimals.

struct OccupancyInput {
    std::string os_name;
    double fs_used_gib = 0;
    double allocated_gib = 0;
};

struct OccupancyRow {
    std::string os_name;
    double fs_used_gib = 0;
    double allocated_gib = 0;
    double pct = 0; // 100 * fs_used / allocated
};

struct OccupancyTable {
    std::vector<OccupancyRow> rows;
    double mean_pct = 0;
    double mean_fs_used_gib = 0;
};

OccupancyTable occupancy_table(const std::vector<OccupancyInput>& rows);

struct MonitorInput {
    std::string name;
    uint64_t files = 0;
    double kib = 0;         // catalogued bytes, in KiB
    double fs_used_gib = 0; // filesystem used space
    // Percentage as printed in an external source, when reproducing one.
    // If present it becomes the row's effective pct; consistency_check
    // compares it against the recomputed value.
    std::optional<double> printed_pct;
};

struct MonitorRow {
    std::string name;
    uint64_t files = 0;
    double kib = 0;
    double fs_used_gib = 0;
    double computed_pct = 0; // 100 * kib / (fs_used_gib * 1024^2)
    std::optional<double> printed_pct;
    double pct = 0; // printed_pct if present, else computed_pct
};

struct MonitorTable {
    std::vector<MonitorRow> rows;
    double mean_pct = 0; // mean of effective pcts
};

MonitorTable monitor_table(const std::vector<MonitorInput>& rows);

struct ConsistencyFlag {
    std::string name;
    double printed_pct = 0;
    double recomputed_pct = 0;
};

// Flags rows whose printed pct differs from the recomputed one by more than
// 0.02 percentage points. Rows without a printed pct are never flagged.
std::vector<ConsistencyFlag> consistency_check(const std::vector<MonitorInput>& rows);

struct ReductionEstimate {
    double boot_pct = 0;
    double app_pct = 0;
    double combined_pct = 0; // boot + app (additive, ignores overlap)
    double base_fs_gib = 0;
    long long estimated_mib = 0; // round(combined/100 * base * 1024)
    // Union-based alternative that removes double counting; must not exceed
    // combined_pct.
    std::optional<double> dedup_pct;
};

ReductionEstimate combined_estimate(double boot_pct, double app_pct, double base_fs_gib,
                                    std::optional<double> dedup_pct = std::nullopt);

struct TransferEstimate {
    double before_s = 0;
    double after_s = 0;
    double saving_pct = 0; // 100 * (1 - reduced/original)
};

// Sequential-fanout model: one sender pushes the image to node_count nodes,
// time = bytes * node_count / bandwidth.
TransferEstimate transfer_estimate(uint64_t image_bytes, uint64_t reduced_bytes,
                                   double bandwidth_bytes_per_s, uint32_t node_count);

std::string render_occupancy_text(const OccupancyTable& t);
std::string render_occupancy_csv(const OccupancyTable& t);
std::string render_monitor_text(const MonitorTable& t);
std::string render_monitor_csv(const MonitorTable& t);
std::string render_estimate_text(const ReductionEstimate& e);
std::string render_estimate_csv(const ReductionEstimate& e);
std::string render_transfer_text(const TransferEstimate& t);

} // namespace vmslim
