#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "pipefail/csv.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/ingest.hpp"

using namespace pipefail;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// Minimal inventory row in file column order; callers override single cells.
std::vector<std::string> base_row(const std::string& id, const std::string& year) {
    return {id,   year, "FD",  "100", "10", "10", "1990", "2",  "5",    "1", "3", "BCN",
            "TR", "4",  "YES", "2",   "NO", "LOW", "NO",  "40", "1.2", "45", ""};
}

RawTable inventory_table(std::vector<std::vector<std::string>> rows) {
    RawTable table;
    table.header = inventory_columns();
    table.rows = std::move(rows);
    table.source_path = "inventory.csv";
    return table;
}

RawTable empty_table(const std::vector<std::string>& header, const std::string& name) {
    RawTable table;
    table.header = header;
    table.source_path = name;
    return table;
}

}  // namespace

TEST_CASE("inventory parser accepts clean rows and fills defaults") {
    auto row = base_row("P1", "2004");
    row[5] = "";   // original_length_m missing -> defaults to length_m
    row[2] = "";   // material missing -> UNKNOWN
    ValidationReport report;
    const auto snapshots = parse_inventory(inventory_table({row}), report);
    REQUIRE(snapshots.size() == 1);
    CHECK(snapshots[0].original_length_m == 10.0);
    CHECK(snapshots[0].material == "UNKNOWN");
    CHECK(snapshots[0].install_year.value() == 1990);
    CHECK(report.inventory_rows_accepted == 1);
    CHECK(report.inventory_rows_dropped == 0);
}

TEST_CASE("inventory parser drops rows violating hard invariants") {
    auto negative_length = base_row("P1", "2004");
    negative_length[4] = "-5";
    auto future_install = base_row("P2", "2004");
    future_install[6] = "2010";
    auto sidewalk_too_long = base_row("P3", "2004");
    sidewalk_too_long[13] = "99";
    auto bad_number = base_row("P4", "2004");
    bad_number[3] = "12mm";
    auto fine = base_row("P5", "2004");

    ValidationReport report;
    const auto snapshots = parse_inventory(
        inventory_table({negative_length, future_install, sidewalk_too_long, bad_number, fine}),
        report);
    REQUIRE(snapshots.size() == 1);
    CHECK(snapshots[0].pipe_id == "P5");
    CHECK(report.inventory_rows_in == 5);
    CHECK(report.inventory_rows_accepted == 1);
    CHECK(report.inventory_rows_dropped == 4);
    // One error per violated field, so a row may log more than one; every
    // dropped row must be accounted for and the clean row must not appear.
    std::set<std::size_t> error_rows;
    for (const auto& error : report.row_errors) error_rows.insert(error.row);
    CHECK(error_rows == std::set<std::size_t>({0, 1, 2, 3}));
    // Accounting is total.
    CHECK(report.inventory_rows_accepted + report.inventory_rows_dropped ==
          report.inventory_rows_in);
}

TEST_CASE("inventory parser requires the schema columns") {
    RawTable table;
    table.header = {"pipe_id", "snapshot_year"};
    table.source_path = "inventory.csv";
    ValidationReport report;
    CHECK_THROWS_AS(parse_inventory(table, report), DataError);
}

TEST_CASE("install year imputation uses material-city medians") {
    auto a = base_row("P1", "2004");
    auto b = base_row("P2", "2004");
    auto c = base_row("P3", "2004");
    auto d = base_row("P4", "2004");
    a[6] = "1960";
    b[6] = "1980";
    c[6] = "";  // same (FD, BCN) group -> lower median 1960
    d[6] = "";
    d[2] = "FG";
    d[11] = "HOS";  // empty group -> global median

    ValidationReport report;
    auto snapshots = parse_inventory(inventory_table({a, b, c, d}), report);
    REQUIRE(snapshots.size() == 4);
    const std::size_t imputed = impute_install_year(snapshots);
    CHECK(imputed == 2);
    CHECK(snapshots[2].install_year.value() == 1960);
    CHECK(snapshots[3].install_year.value() == 1960);  // global lower median

    // Idempotent: a second pass changes nothing.
    CHECK(impute_install_year(snapshots) == 0);
}

TEST_CASE("event parsing aggregates operations and flags bad rows") {
    RawTable failures = empty_table(failures_columns(), "failures.csv");
    failures.rows = {{"P1", "2005"}, {"P1", "2007"}, {"P2", "oops"}};

    RawTable operations = empty_table(operations_columns(), "operations.csv");
    operations.rows = {{"P1", "2005", "pipe", "2"},
                       {"P1", "2005", "pipe", "1"},
                       {"P1", "2005", "accessory", "4"},
                       {"P1", "2006", "other", "1"},
                       {"P9", "2005", "teleport", "1"}};

    ValidationReport report;
    const EventData events = parse_events(failures, operations, report);
    CHECK(report.failure_rows_accepted == 2);
    CHECK(report.failure_rows_dropped == 1);
    CHECK(report.operation_rows_accepted == 4);
    CHECK(report.operation_rows_dropped == 1);

    REQUIRE(events.failures.size() == 2);
    const auto& by_year = events.operations.by_pipe.at("P1");
    CHECK(by_year.at(2005)[0] == 3);  // pipe ops summed
    CHECK(by_year.at(2005)[1] == 4);
    CHECK(by_year.at(2005)[2] == 0);
    CHECK(by_year.at(2006)[2] == 1);
}

TEST_CASE("panel round trip through the emitters") {
    TempDir dir("pipefail_ingest_roundtrip");

    ValidationReport parse_report;
    auto a2004 = base_row("P1", "2004");
    auto a2005 = base_row("P1", "2005");
    auto b2004 = base_row("P2", "2004");
    b2004[22] = "P1";  // parent lineage
    auto snapshots = parse_inventory(inventory_table({a2004, a2005, b2004}), parse_report);
    REQUIRE(snapshots.size() == 3);

    RawTable failures = empty_table(failures_columns(), "failures.csv");
    failures.rows = {{"P1", "2005"}};
    RawTable operations = empty_table(operations_columns(), "operations.csv");
    operations.rows = {{"P1", "2005", "pipe", "2"}};
    const EventData events = parse_events(failures, operations, parse_report);
    attach_event_fields(snapshots, events);

    write_inventory_csv(dir.path / "inventory.csv", snapshots);
    write_failures_csv(dir.path / "failures.csv", events.failures);
    write_operations_csv(dir.path / "operations.csv", events.operations);

    const PanelLoad loaded = load_panel_dir(dir.path);
    CHECK(loaded.report.inventory_rows_accepted == 3);
    CHECK(loaded.report.failure_rows_accepted == 1);
    CHECK(loaded.report.operation_rows_accepted == 1);
    CHECK(loaded.build.panel.rows().size() == 3);
    CHECK(loaded.build.panel.failure_years("P1").size() == 1);
    CHECK(loaded.build.panel.parent_of("P2") == "P1");

    // Event fields landed on the matching snapshot rows.
    bool found = false;
    for (const PipeSnapshot& row : loaded.build.panel.rows()) {
        if (row.pipe_id == "P1" && row.snapshot_year == 2005) {
            CHECK(row.pipe_ops_year == 2);
            CHECK(row.failures_to_date == 1);
            found = true;
        }
    }
    CHECK(found);

    // Byte determinism: emitting the same data twice gives identical files.
    write_inventory_csv(dir.path / "inventory2.csv", snapshots);
    std::ifstream f1(dir.path / "inventory.csv", std::ios::binary);
    std::ifstream f2(dir.path / "inventory2.csv", std::ios::binary);
    const std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    const std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(s1 == s2);
}
