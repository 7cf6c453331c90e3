#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace pipefail {

// One pipe observed in one snapshot year. Numeric units are stored as ingested
// (mm for diameter, m for lengths).
struct PipeSnapshot {
    std::string pipe_id;
    int snapshot_year = 0;

    std::string material;
    double diameter_mm = 0.0;
    double length_m = 0.0;
    double original_length_m = 0.0;
    std::optional<int> install_year;

    int num_connections = 0;
    double avg_connections_age = 0.0;
    int num_elements = 0;
    double avg_elements_age = 0.0;

    std::string city;
    std::string network_type;
    double sidewalk_length_m = 0.0;
    std::string ind_greenzone;
    double greenzone_length_m = 0.0;
    std::string assimilable_to_transport;
    std::string level_of_traffic;
    std::string underground_gallery;

    double pressure = 0.0;
    double maxvsmin_pressure = 0.0;
    double estres_pressure = 0.0;

    // Filled from the failure/operation tables during panel assembly; these
    // columns are not part of the inventory file.
    int failures_to_date = 0;
    int pipe_ops_year = 0;
    int accessory_ops_year = 0;
    int other_ops_year = 0;

    // Empty when the pipe has no recorded predecessor.
    std::string parent_id;
};

struct FailureEvent {
    std::string pipe_id;
    int year = 0;
};

// Immutable panel of snapshots plus the failure log. Rows are sorted by
// (pipe_id, snapshot_year); failures by (pipe_id, year).
class PanelDataset {
  public:
    PanelDataset() = default;

    const std::vector<PipeSnapshot>& rows() const { return rows_; }
    const std::vector<FailureEvent>& failures() const { return failures_; }

    int min_year() const { return min_year_; }
    int max_year() const { return max_year_; }
    const std::vector<int>& years() const { return years_; }

    // Row indices for one snapshot year, ordered by pipe_id. Empty when the
    // year is not present.
    std::span<const std::size_t> rows_at_year(int year) const;

    bool has_pipe(const std::string& pipe_id) const;

    // Sorted failure years for one pipe id (exact id match, no lineage).
    std::span<const int> failure_years(const std::string& pipe_id) const;

    // First failure year for the pipe id, if any.
    std::optional<int> first_failure_year(const std::string& pipe_id) const;

    // Recorded predecessor id, empty if none.
    const std::string& parent_of(const std::string& pipe_id) const;

    // Failures at years <= year, following parent lineage (self + ancestors).
    // Lineage walks are cycle-safe.
    int failure_count_through(const std::string& pipe_id, int year) const;

    friend struct PanelBuilder;

  private:
    std::vector<PipeSnapshot> rows_;
    std::vector<FailureEvent> failures_;
    int min_year_ = 0;
    int max_year_ = 0;
    std::vector<int> years_;
    std::map<int, std::vector<std::size_t>> year_index_;
    std::unordered_map<std::string, std::vector<int>> failure_index_;
    std::unordered_map<std::string, std::string> parent_index_;
};

struct PanelBuild {
    PanelDataset panel;
    // Failure events whose pipe_id never appears in a snapshot; excluded from
    // the panel but reported rather than silently dropped.
    std::vector<FailureEvent> orphan_failures;
};

// Assembles a validated panel. Throws DataError on duplicate (pipe_id,
// snapshot_year) pairs, listing the offending keys.
PanelBuild build_panel(std::vector<PipeSnapshot> snapshots, std::vector<FailureEvent> failures);

// Binary labels for every pipe present at snapshot_year: 1 iff the pipe has a
// failure event in the half-open window (snapshot_year, snapshot_year + k].
struct LabeledSlice {
    int snapshot_year = 0;
    int horizon_k = 0;
    std::vector<std::string> pipe_ids;  // ordered by pipe_id, aligned with labels
    std::vector<int> labels;
};

// Throws InvalidArgument when the year is absent from the panel or the window
// (snapshot_year, snapshot_year + k] extends past the last observed year.
LabeledSlice label_failure_window(const PanelDataset& panel, int snapshot_year, int k);

struct TemporalSplit {
    std::vector<int> train_years;  // ascending, all <= test_snapshot_year - gap
    LabeledSlice test;
};

// Gap-aware temporal split: train on snapshot years <= test_snapshot_year -
// gap, evaluate on the test year's window. gap < 0 means "use k". Requires
// gap >= k (otherwise train label windows leak past the test snapshot) and a
// non-empty train range.
TemporalSplit temporal_split(const PanelDataset& panel, int test_snapshot_year, int k,
                             int gap = -1);

}  // namespace pipefail
