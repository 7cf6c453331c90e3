#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "pipefail/csv.hpp"
#include "pipefail/panel.hpp"

namespace pipefail {

// Fixed file schemas. Inventory column order is also the emission order.
const std::vector<std::string>& inventory_columns();
const std::vector<std::string>& failures_columns();    // pipe_id, year
const std::vector<std::string>& operations_columns();  // pipe_id, year, kind, count

struct RowError {
    std::size_t row = 0;  // 0-based data row index within the source file
    std::string column;
    std::string reason;
};

// Accounting of everything that happened to the input rows. Parsing is total:
// accepted + dropped always equals the number of input rows per file.
struct ValidationReport {
    std::vector<RowError> row_errors;
    std::size_t inventory_rows_in = 0;
    std::size_t inventory_rows_accepted = 0;
    std::size_t inventory_rows_dropped = 0;
    std::size_t failure_rows_in = 0;
    std::size_t failure_rows_accepted = 0;
    std::size_t failure_rows_dropped = 0;
    std::size_t operation_rows_in = 0;
    std::size_t operation_rows_accepted = 0;
    std::size_t operation_rows_dropped = 0;
    std::size_t imputed_install_years = 0;
    std::size_t orphan_failures = 0;
    // Fraction of empty cells per inventory column, over all input rows.
    std::map<std::string, double> missing_rates;

    void merge(const ValidationReport& other);
    std::string summary() const;
};

// Parses and validates inventory rows. Missing categorical cells become
// "UNKNOWN"; missing install_year stays unset (see impute_install_year);
// missing original_length_m defaults to length_m. Rows violating a hard
// invariant (non-positive lengths/diameter, negative counts/ages/pressures,
// sidewalk or greenzone longer than the pipe, install_year after the snapshot,
// unparseable numerics) are dropped and recorded in the report. Throws
// DataError when a required column is absent.
std::vector<PipeSnapshot> parse_inventory(const RawTable& raw, ValidationReport& report);

// Per-(pipe, year, kind) aggregated operation counts.
struct OperationCounts {
    // key: pipe_id -> year -> {pipe, accessory, other}
    std::map<std::string, std::map<int, std::array<int, 3>>> by_pipe;
};

struct EventData {
    std::vector<FailureEvent> failures;
    OperationCounts operations;
};

// Parses failure and operation tables. Unknown operation kinds and unparseable
// cells reject that row only; everything else is processed.
EventData parse_events(const RawTable& raw_failures, const RawTable& raw_operations,
                       ValidationReport& report);

// Fills missing install years with the median install year of rows sharing
// (material, city), falling back to the global median when the group has no
// known values. Lower median convention; the filled value is clamped to the
// row's snapshot year so install_year <= snapshot_year keeps holding. Throws
// DataError when every install year is missing. Idempotent.
std::size_t impute_install_year(std::vector<PipeSnapshot>& snapshots);

// Copies per-year operation counts and lineage-aware failure counts onto the
// snapshots (fields not carried by the inventory file).
void attach_event_fields(std::vector<PipeSnapshot>& snapshots, const EventData& events);

struct PanelLoad {
    PanelBuild build;
    ValidationReport report;
};

// Full ingest pipeline: read the three CSVs, parse, impute, attach event
// fields, assemble the panel.
PanelLoad load_panel(const std::filesystem::path& inventory_csv,
                     const std::filesystem::path& failures_csv,
                     const std::filesystem::path& operations_csv);

// Convenience: expects inventory.csv / failures.csv / operations.csv in dir.
PanelLoad load_panel_dir(const std::filesystem::path& dir);

// Emitters; shared by the synthetic generator so round-trips are exact.
std::vector<std::string> inventory_row_cells(const PipeSnapshot& row);
void write_inventory_csv(const std::filesystem::path& path,
                         const std::vector<PipeSnapshot>& snapshots);
void write_failures_csv(const std::filesystem::path& path,
                        const std::vector<FailureEvent>& failures);
void write_operations_csv(const std::filesystem::path& path, const OperationCounts& operations);

}  // namespace pipefail
