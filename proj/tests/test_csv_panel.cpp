#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pipefail/csv.hpp"
#include "pipefail/errors.hpp"
#include "pipefail/panel.hpp"

using namespace pipefail;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

PipeSnapshot snapshot(const std::string& id, int year, const std::string& parent = "") {
    PipeSnapshot row;
    row.pipe_id = id;
    row.snapshot_year = year;
    row.material = "FD";
    row.diameter_mm = 100.0;
    row.length_m = 10.0;
    row.original_length_m = 10.0;
    row.install_year = 1990;
    row.parent_id = parent;
    return row;
}

}  // namespace

TEST_CASE("csv write/read round trip with quoting") {
    const auto path = temp_file("pipefail_csv_roundtrip.csv");
    const std::vector<std::string> header = {"a", "b", "c"};
    const std::vector<std::vector<std::string>> rows = {
        {"plain", "with,comma", "with\"quote"},
        {"multi\nline", "", "utf8 ço"},
    };
    write_csv(path, header, rows);
    const RawTable table = read_csv(path);
    CHECK(table.header == header);
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0] == rows[0]);
    CHECK(table.rows[1] == rows[1]);
    CHECK(table.column("b") == 1);
    CHECK(table.column("missing") == -1);
    std::remove(path.string().c_str());
}

TEST_CASE("csv reader rejects ragged rows") {
    const auto path = temp_file("pipefail_csv_ragged.csv");
    std::ofstream out(path, std::ios::binary);
    out << "a,b\n1,2\n3\n";
    out.close();
    CHECK_THROWS_AS(read_csv(path), DataError);
    std::remove(path.string().c_str());
}

TEST_CASE("format_double emits shortest round-trip text") {
    CHECK(format_double(1.5) == "1.5");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(3.0) == "3");
    CHECK(format_double(-2.25) == "-2.25");
    CHECK(format_double(0.0) == "0");

    // Shortest form must parse back to the identical bits.
    for (double v : {0.1, 1.0 / 3.0, 12345.6789, -9.87e-12, 2.0e17}) {
        double back = 0.0;
        REQUIRE(parse_double(format_double(v), back));
        CHECK(back == v);
    }
}

TEST_CASE("strict numeric parses reject trailing garbage") {
    double d = 0.0;
    CHECK(parse_double("1.5", d));
    CHECK(d == 1.5);
    CHECK(parse_double("1e3", d));
    CHECK(d == 1000.0);
    CHECK_FALSE(parse_double("1.5x", d));
    CHECK_FALSE(parse_double("", d));
    CHECK_FALSE(parse_double("1.5 ", d));

    long long i = 0;
    CHECK(parse_int("42", i));
    CHECK(i == 42);
    CHECK(parse_int("-3", i));
    CHECK(i == -3);
    CHECK_FALSE(parse_int("4.2", i));
    CHECK_FALSE(parse_int("999999999999999999999", i));
}

TEST_CASE("panel orders rows and indexes failures") {
    std::vector<PipeSnapshot> rows = {snapshot("B", 2005, "A"), snapshot("A", 2005),
                                      snapshot("A", 2004), snapshot("B", 2004, "A"),
                                      snapshot("A", 2006), snapshot("B", 2006, "A")};
    std::vector<FailureEvent> failures = {{"B", 2005}, {"A", 2006}, {"C", 2004}};

    const PanelBuild build = build_panel(rows, failures);
    const PanelDataset& panel = build.panel;

    REQUIRE(build.orphan_failures.size() == 1);
    CHECK(build.orphan_failures[0].pipe_id == "C");

    CHECK(panel.min_year() == 2004);
    CHECK(panel.max_year() == 2006);
    CHECK(panel.years() == std::vector<int>{2004, 2005, 2006});
    CHECK(panel.rows_at_year(2004).size() == 2);
    CHECK(panel.rows_at_year(1999).empty());

    CHECK(panel.has_pipe("A"));
    CHECK_FALSE(panel.has_pipe("C"));
    REQUIRE(panel.failure_years("A").size() == 1);
    CHECK(panel.failure_years("A")[0] == 2006);
    CHECK(panel.first_failure_year("B").value() == 2005);
    CHECK_FALSE(panel.first_failure_year("Z").has_value());

    // Lineage-aware count: B's own 2005 failure plus parent A's 2006 one.
    CHECK(panel.parent_of("B") == "A");
    CHECK(panel.failure_count_through("B", 2004) == 0);
    CHECK(panel.failure_count_through("B", 2005) == 1);
    CHECK(panel.failure_count_through("B", 2006) == 2);

    // Rows sorted by (pipe_id, snapshot_year).
    CHECK(panel.rows()[0].pipe_id == "A");
    CHECK(panel.rows()[0].snapshot_year == 2004);
    CHECK(panel.rows()[3].pipe_id == "B");
}

TEST_CASE("panel rejects duplicate pipe-year keys") {
    std::vector<PipeSnapshot> rows = {snapshot("A", 2004), snapshot("A", 2004)};
    CHECK_THROWS_AS(build_panel(rows, {}), DataError);
}

TEST_CASE("labels mark failures in the half-open window") {
    std::vector<PipeSnapshot> rows = {snapshot("A", 2004), snapshot("B", 2004),
                                      snapshot("A", 2005), snapshot("B", 2005),
                                      snapshot("A", 2006), snapshot("B", 2006)};
    // A fails in 2006; B fails in 2004 (at the snapshot itself: excluded).
    std::vector<FailureEvent> failures = {{"A", 2006}, {"B", 2004}};
    const PanelDataset panel = build_panel(rows, failures).panel;

    const LabeledSlice k1 = label_failure_window(panel, 2004, 1);
    REQUIRE(k1.pipe_ids == std::vector<std::string>{"A", "B"});
    CHECK(k1.labels == std::vector<int>{0, 0});

    const LabeledSlice k2 = label_failure_window(panel, 2004, 2);
    CHECK(k2.labels == std::vector<int>{1, 0});

    CHECK_THROWS_AS(label_failure_window(panel, 2004, 3), InvalidArgument);
    CHECK_THROWS_AS(label_failure_window(panel, 1999, 1), InvalidArgument);
    CHECK_THROWS_AS(label_failure_window(panel, 2004, 0), InvalidArgument);
}

TEST_CASE("temporal split keeps a gap between train and test") {
    std::vector<PipeSnapshot> rows;
    for (int year = 2004; year <= 2010; ++year) rows.push_back(snapshot("A", year));
    const PanelDataset panel = build_panel(rows, {{"A", 2010}}).panel;

    const TemporalSplit split = temporal_split(panel, 2008, 2);
    CHECK(split.test.snapshot_year == 2008);
    CHECK(split.train_years == std::vector<int>{2004, 2005, 2006});

    const TemporalSplit wide = temporal_split(panel, 2008, 1, 3);
    CHECK(wide.train_years == std::vector<int>{2004, 2005});

    // gap below k would leak train label windows into the test year.
    CHECK_THROWS_AS(temporal_split(panel, 2008, 2, 1), InvalidArgument);
    // No train years left.
    CHECK_THROWS_AS(temporal_split(panel, 2005, 1, 4), InvalidArgument);
}
