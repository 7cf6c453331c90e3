#include "pipefail/ingest.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {

const std::vector<std::string> kInventoryColumns = {
    "pipe_id",        "snapshot_year",       "material",
    "diameter_mm",    "length_m",            "original_length_m",
    "install_year",   "num_connections",     "avg_connections_age",
    "num_elements",   "avg_elements_age",    "city",
    "network_type",   "sidewalk_length_m",   "ind_greenzone",
    "greenzone_length_m", "assimilable_to_transport", "level_of_traffic",
    "underground_gallery", "pressure",       "maxvsmin_pressure",
    "estres_pressure", "parent_id"};

const std::vector<std::string> kFailureColumns = {"pipe_id", "year"};
const std::vector<std::string> kOperationColumns = {"pipe_id", "year", "kind", "count"};

constexpr const char* kUnknownCategory = "UNKNOWN";

int op_kind_index(const std::string& kind) {
    if (kind == "pipe") return 0;
    if (kind == "accessory") return 1;
    if (kind == "other") return 2;
    return -1;
}

struct ColumnMap {
    std::unordered_map<std::string, int> index;

    int require(const std::string& name, const std::string& file) const {
        auto it = index.find(name);
        if (it == index.end()) {
            throw DataError(file + ": missing required column '" + name + "'");
        }
        return it->second;
    }

    int optional(const std::string& name) const {
        auto it = index.find(name);
        return it == index.end() ? -1 : it->second;
    }
};

ColumnMap map_columns(const RawTable& raw) {
    ColumnMap map;
    for (std::size_t i = 0; i < raw.header.size(); ++i) {
        map.index.emplace(raw.header[i], static_cast<int>(i));
    }
    return map;
}

// Lower median of a sorted vector.
int lower_median(std::vector<int>& values) {
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

}  // namespace

const std::vector<std::string>& inventory_columns() { return kInventoryColumns; }
const std::vector<std::string>& failures_columns() { return kFailureColumns; }
const std::vector<std::string>& operations_columns() { return kOperationColumns; }

void ValidationReport::merge(const ValidationReport& other) {
    row_errors.insert(row_errors.end(), other.row_errors.begin(), other.row_errors.end());
    inventory_rows_in += other.inventory_rows_in;
    inventory_rows_accepted += other.inventory_rows_accepted;
    inventory_rows_dropped += other.inventory_rows_dropped;
    failure_rows_in += other.failure_rows_in;
    failure_rows_accepted += other.failure_rows_accepted;
    failure_rows_dropped += other.failure_rows_dropped;
    operation_rows_in += other.operation_rows_in;
    operation_rows_accepted += other.operation_rows_accepted;
    operation_rows_dropped += other.operation_rows_dropped;
    imputed_install_years += other.imputed_install_years;
    orphan_failures += other.orphan_failures;
    for (const auto& [column, rate] : other.missing_rates) missing_rates[column] = rate;
}

std::string ValidationReport::summary() const {
    std::ostringstream out;
    out << "inventory " << inventory_rows_accepted << "/" << inventory_rows_in
        << " accepted, failures " << failure_rows_accepted << "/" << failure_rows_in
        << ", operations " << operation_rows_accepted << "/" << operation_rows_in
        << ", imputed install years " << imputed_install_years << ", orphan failures "
        << orphan_failures << ", row errors " << row_errors.size();
    return out.str();
}

std::vector<PipeSnapshot> parse_inventory(const RawTable& raw, ValidationReport& report) {
    const ColumnMap cols = map_columns(raw);
    for (const auto& name : kInventoryColumns) {
        if (name == "parent_id") continue;  // optional column
        cols.require(name, raw.source_path);
    }

    const int c_pipe = cols.optional("pipe_id");
    const int c_year = cols.optional("snapshot_year");
    const int c_material = cols.optional("material");
    const int c_diameter = cols.optional("diameter_mm");
    const int c_length = cols.optional("length_m");
    const int c_original = cols.optional("original_length_m");
    const int c_install = cols.optional("install_year");
    const int c_nconn = cols.optional("num_connections");
    const int c_connage = cols.optional("avg_connections_age");
    const int c_nelem = cols.optional("num_elements");
    const int c_elemage = cols.optional("avg_elements_age");
    const int c_city = cols.optional("city");
    const int c_network = cols.optional("network_type");
    const int c_sidewalk = cols.optional("sidewalk_length_m");
    const int c_indgreen = cols.optional("ind_greenzone");
    const int c_green = cols.optional("greenzone_length_m");
    const int c_assim = cols.optional("assimilable_to_transport");
    const int c_traffic = cols.optional("level_of_traffic");
    const int c_gallery = cols.optional("underground_gallery");
    const int c_pressure = cols.optional("pressure");
    const int c_maxvsmin = cols.optional("maxvsmin_pressure");
    const int c_estres = cols.optional("estres_pressure");
    const int c_parent = cols.optional("parent_id");

    report.inventory_rows_in += raw.rows.size();
    std::map<std::string, std::size_t> missing_counts;
    for (const auto& name : kInventoryColumns) missing_counts[name] = 0;

    std::vector<PipeSnapshot> snapshots;
    snapshots.reserve(raw.rows.size());
    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
        const auto& cells = raw.rows[r];
        for (const auto& name : kInventoryColumns) {
            const int idx = cols.optional(name);
            if (idx >= 0 && cells[idx].empty()) ++missing_counts[name];
        }

        PipeSnapshot row;
        bool ok = true;
        auto fail = [&](const std::string& column, const std::string& reason) {
            report.row_errors.push_back({r, column, reason});
            ok = false;
        };
        auto get_string = [&](int idx) -> const std::string& { return cells[idx]; };
        auto get_category = [&](int idx) -> std::string {
            return cells[idx].empty() ? kUnknownCategory : cells[idx];
        };
        auto get_double = [&](int idx, const char* column, double& out) {
            if (!parse_double(cells[idx], out)) fail(column, "unparseable numeric: '" + cells[idx] + "'");
        };
        auto get_count = [&](int idx, const char* column, int& out) {
            long long v = 0;
            if (!parse_int(cells[idx], v) || v < 0) {
                fail(column, "expected nonnegative integer: '" + cells[idx] + "'");
            } else {
                out = static_cast<int>(v);
            }
        };

        row.pipe_id = get_string(c_pipe);
        if (row.pipe_id.empty()) fail("pipe_id", "empty");
        long long year = 0;
        if (!parse_int(cells[c_year], year)) {
            fail("snapshot_year", "unparseable year: '" + cells[c_year] + "'");
        } else {
            row.snapshot_year = static_cast<int>(year);
        }
        row.material = get_category(c_material);
        get_double(c_diameter, "diameter_mm", row.diameter_mm);
        get_double(c_length, "length_m", row.length_m);
        if (cells[c_original].empty()) {
            row.original_length_m = row.length_m;  // default: no recorded split history
        } else {
            get_double(c_original, "original_length_m", row.original_length_m);
        }
        if (!cells[c_install].empty()) {
            long long install = 0;
            if (!parse_int(cells[c_install], install)) {
                fail("install_year", "unparseable year: '" + cells[c_install] + "'");
            } else {
                row.install_year = static_cast<int>(install);
            }
        }
        get_count(c_nconn, "num_connections", row.num_connections);
        get_double(c_connage, "avg_connections_age", row.avg_connections_age);
        get_count(c_nelem, "num_elements", row.num_elements);
        get_double(c_elemage, "avg_elements_age", row.avg_elements_age);
        row.city = get_category(c_city);
        row.network_type = get_category(c_network);
        get_double(c_sidewalk, "sidewalk_length_m", row.sidewalk_length_m);
        row.ind_greenzone = get_category(c_indgreen);
        get_double(c_green, "greenzone_length_m", row.greenzone_length_m);
        row.assimilable_to_transport = get_category(c_assim);
        row.level_of_traffic = get_category(c_traffic);
        row.underground_gallery = get_category(c_gallery);
        get_double(c_pressure, "pressure", row.pressure);
        get_double(c_maxvsmin, "maxvsmin_pressure", row.maxvsmin_pressure);
        get_double(c_estres, "estres_pressure", row.estres_pressure);
        if (c_parent >= 0) row.parent_id = cells[c_parent];

        if (ok) {
            // Hard invariants; violations drop the row.
            if (!(row.length_m > 0)) fail("length_m", "must be > 0");
            if (!(row.diameter_mm > 0)) fail("diameter_mm", "must be > 0");
            if (!(row.original_length_m > 0)) fail("original_length_m", "must be > 0");
            if (row.sidewalk_length_m < 0 || row.sidewalk_length_m > row.length_m) {
                fail("sidewalk_length_m", "must be in [0, length_m]");
            }
            if (row.greenzone_length_m < 0 || row.greenzone_length_m > row.length_m) {
                fail("greenzone_length_m", "must be in [0, length_m]");
            }
            if (row.avg_connections_age < 0) fail("avg_connections_age", "must be >= 0");
            if (row.avg_elements_age < 0) fail("avg_elements_age", "must be >= 0");
            if (row.pressure < 0) fail("pressure", "must be >= 0");
            if (row.maxvsmin_pressure < 0) fail("maxvsmin_pressure", "must be >= 0");
            if (row.estres_pressure < 0) fail("estres_pressure", "must be >= 0");
            if (row.install_year && *row.install_year > row.snapshot_year) {
                fail("install_year", "after snapshot_year");
            }
        }
        if (ok) {
            snapshots.push_back(std::move(row));
            ++report.inventory_rows_accepted;
        } else {
            ++report.inventory_rows_dropped;
        }
    }

    if (report.inventory_rows_in > 0) {
        for (const auto& [column, count] : missing_counts) {
            report.missing_rates[column] =
                static_cast<double>(count) / static_cast<double>(report.inventory_rows_in);
        }
    }
    return snapshots;
}

EventData parse_events(const RawTable& raw_failures, const RawTable& raw_operations,
                       ValidationReport& report) {
    EventData out;

    {
        const ColumnMap cols = map_columns(raw_failures);
        const int c_pipe = cols.require("pipe_id", raw_failures.source_path);
        const int c_year = cols.require("year", raw_failures.source_path);
        report.failure_rows_in += raw_failures.rows.size();
        for (std::size_t r = 0; r < raw_failures.rows.size(); ++r) {
            const auto& cells = raw_failures.rows[r];
            long long year = 0;
            if (cells[c_pipe].empty()) {
                report.row_errors.push_back({r, "pipe_id", "empty"});
                ++report.failure_rows_dropped;
                continue;
            }
            if (!parse_int(cells[c_year], year)) {
                report.row_errors.push_back({r, "year", "unparseable year: '" + cells[c_year] + "'"});
                ++report.failure_rows_dropped;
                continue;
            }
            out.failures.push_back({cells[c_pipe], static_cast<int>(year)});
            ++report.failure_rows_accepted;
        }
    }

    {
        const ColumnMap cols = map_columns(raw_operations);
        const int c_pipe = cols.require("pipe_id", raw_operations.source_path);
        const int c_year = cols.require("year", raw_operations.source_path);
        const int c_kind = cols.require("kind", raw_operations.source_path);
        const int c_count = cols.require("count", raw_operations.source_path);
        report.operation_rows_in += raw_operations.rows.size();
        for (std::size_t r = 0; r < raw_operations.rows.size(); ++r) {
            const auto& cells = raw_operations.rows[r];
            const int kind = op_kind_index(cells[c_kind]);
            long long year = 0;
            long long count = 0;
            if (cells[c_pipe].empty()) {
                report.row_errors.push_back({r, "pipe_id", "empty"});
            } else if (!parse_int(cells[c_year], year)) {
                report.row_errors.push_back({r, "year", "unparseable year: '" + cells[c_year] + "'"});
            } else if (kind < 0) {
                report.row_errors.push_back({r, "kind", "unknown kind: '" + cells[c_kind] + "'"});
            } else if (!parse_int(cells[c_count], count) || count < 0) {
                report.row_errors.push_back(
                    {r, "count", "expected nonnegative integer: '" + cells[c_count] + "'"});
            } else {
                auto& slot = out.operations.by_pipe[cells[c_pipe]][static_cast<int>(year)];
                slot[kind] += static_cast<int>(count);
                ++report.operation_rows_accepted;
                continue;
            }
            ++report.operation_rows_dropped;
        }
    }
    return out;
}

std::size_t impute_install_year(std::vector<PipeSnapshot>& snapshots) {
    std::map<std::pair<std::string, std::string>, std::vector<int>> groups;
    std::vector<int> all_years;
    for (const auto& row : snapshots) {
        if (row.install_year) {
            groups[{row.material, row.city}].push_back(*row.install_year);
            all_years.push_back(*row.install_year);
        }
    }
    std::size_t missing = 0;
    for (const auto& row : snapshots) {
        if (!row.install_year) ++missing;
    }
    if (missing == 0) return 0;
    if (all_years.empty()) throw DataError("cannot impute install_year: all values missing");

    const int global_median = lower_median(all_years);
    std::map<std::pair<std::string, std::string>, int> medians;
    for (auto& [key, values] : groups) medians[key] = lower_median(values);

    std::size_t imputed = 0;
    for (auto& row : snapshots) {
        if (row.install_year) continue;
        auto it = medians.find({row.material, row.city});
        int fill = it == medians.end() ? global_median : it->second;
        row.install_year = std::min(fill, row.snapshot_year);
        ++imputed;
    }
    return imputed;
}

void attach_event_fields(std::vector<PipeSnapshot>& snapshots, const EventData& events) {
    // Failure counts use lineage-aware lookups; build a light index first.
    std::unordered_map<std::string, std::vector<int>> failure_years;
    for (const auto& event : events.failures) failure_years[event.pipe_id].push_back(event.year);
    for (auto& [id, years] : failure_years) std::sort(years.begin(), years.end());
    std::unordered_map<std::string, std::string> parents;
    for (const auto& row : snapshots) {
        if (!row.parent_id.empty()) parents[row.pipe_id] = row.parent_id;
    }
    auto count_through = [&](const std::string& pipe_id, int year) {
        int count = 0;
        std::string current = pipe_id;
        for (int depth = 0; depth < 64 && !current.empty(); ++depth) {
            auto it = failure_years.find(current);
            if (it != failure_years.end()) {
                count += static_cast<int>(std::upper_bound(it->second.begin(), it->second.end(),
                                                           year) -
                                          it->second.begin());
            }
            auto p = parents.find(current);
            if (p == parents.end()) break;
            current = p->second;
        }
        return count;
    };

    for (auto& row : snapshots) {
        row.failures_to_date = count_through(row.pipe_id, row.snapshot_year);
        row.pipe_ops_year = 0;
        row.accessory_ops_year = 0;
        row.other_ops_year = 0;
        auto pipe_it = events.operations.by_pipe.find(row.pipe_id);
        if (pipe_it == events.operations.by_pipe.end()) continue;
        auto year_it = pipe_it->second.find(row.snapshot_year);
        if (year_it == pipe_it->second.end()) continue;
        row.pipe_ops_year = year_it->second[0];
        row.accessory_ops_year = year_it->second[1];
        row.other_ops_year = year_it->second[2];
    }
}

PanelLoad load_panel(const std::filesystem::path& inventory_csv,
                     const std::filesystem::path& failures_csv,
                     const std::filesystem::path& operations_csv) {
    PanelLoad out;
    RawTable inventory = read_csv(inventory_csv);
    RawTable failures = read_csv(failures_csv);
    RawTable operations = read_csv(operations_csv);

    auto snapshots = parse_inventory(inventory, out.report);
    EventData events = parse_events(failures, operations, out.report);
    out.report.imputed_install_years = impute_install_year(snapshots);
    attach_event_fields(snapshots, events);
    out.build = build_panel(std::move(snapshots), std::move(events.failures));
    out.report.orphan_failures = out.build.orphan_failures.size();
    return out;
}

PanelLoad load_panel_dir(const std::filesystem::path& dir) {
    return load_panel(dir / "inventory.csv", dir / "failures.csv", dir / "operations.csv");
}

std::vector<std::string> inventory_row_cells(const PipeSnapshot& row) {
    std::vector<std::string> cells;
    cells.reserve(kInventoryColumns.size());
    cells.push_back(row.pipe_id);
    cells.push_back(std::to_string(row.snapshot_year));
    cells.push_back(row.material);
    cells.push_back(format_double(row.diameter_mm));
    cells.push_back(format_double(row.length_m));
    cells.push_back(format_double(row.original_length_m));
    cells.push_back(row.install_year ? std::to_string(*row.install_year) : std::string());
    cells.push_back(std::to_string(row.num_connections));
    cells.push_back(format_double(row.avg_connections_age));
    cells.push_back(std::to_string(row.num_elements));
    cells.push_back(format_double(row.avg_elements_age));
    cells.push_back(row.city);
    cells.push_back(row.network_type);
    cells.push_back(format_double(row.sidewalk_length_m));
    cells.push_back(row.ind_greenzone);
    cells.push_back(format_double(row.greenzone_length_m));
    cells.push_back(row.assimilable_to_transport);
    cells.push_back(row.level_of_traffic);
    cells.push_back(row.underground_gallery);
    cells.push_back(format_double(row.pressure));
    cells.push_back(format_double(row.maxvsmin_pressure));
    cells.push_back(format_double(row.estres_pressure));
    cells.push_back(row.parent_id);
    return cells;
}

void write_inventory_csv(const std::filesystem::path& path,
                         const std::vector<PipeSnapshot>& snapshots) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(snapshots.size());
    for (const auto& row : snapshots) rows.push_back(inventory_row_cells(row));
    write_csv(path, kInventoryColumns, rows);
}

void write_failures_csv(const std::filesystem::path& path,
                        const std::vector<FailureEvent>& failures) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(failures.size());
    for (const auto& event : failures) {
        rows.push_back({event.pipe_id, std::to_string(event.year)});
    }
    write_csv(path, kFailureColumns, rows);
}

void write_operations_csv(const std::filesystem::path& path, const OperationCounts& operations) {
    static const char* kKinds[3] = {"pipe", "accessory", "other"};
    std::vector<std::vector<std::string>> rows;
    for (const auto& [pipe_id, by_year] : operations.by_pipe) {
        for (const auto& [year, counts] : by_year) {
            for (int k = 0; k < 3; ++k) {
                if (counts[k] > 0) {
                    rows.push_back({pipe_id, std::to_string(year), kKinds[k],
                                    std::to_string(counts[k])});
                }
            }
        }
    }
    write_csv(path, kOperationColumns, rows);
}

}  // namespace pipefail
