#include "pipefail/panel.hpp"

#include <algorithm>
#include <unordered_set>

#include "pipefail/errors.hpp"

namespace pipefail {

namespace {
const std::string kEmpty;
}

std::span<const std::size_t> PanelDataset::rows_at_year(int year) const {
    auto it = year_index_.find(year);
    if (it == year_index_.end()) return {};
    return {it->second.data(), it->second.size()};
}

bool PanelDataset::has_pipe(const std::string& pipe_id) const {
    auto probe = std::lower_bound(rows_.begin(), rows_.end(), pipe_id,
                                  [](const PipeSnapshot& row, const std::string& id) {
                                      return row.pipe_id < id;
                                  });
    return probe != rows_.end() && probe->pipe_id == pipe_id;
}

std::span<const int> PanelDataset::failure_years(const std::string& pipe_id) const {
    auto it = failure_index_.find(pipe_id);
    if (it == failure_index_.end()) return {};
    return {it->second.data(), it->second.size()};
}

std::optional<int> PanelDataset::first_failure_year(const std::string& pipe_id) const {
    auto years = failure_years(pipe_id);
    if (years.empty()) return std::nullopt;
    return years.front();
}

const std::string& PanelDataset::parent_of(const std::string& pipe_id) const {
    auto it = parent_index_.find(pipe_id);
    if (it == parent_index_.end()) return kEmpty;
    return it->second;
}

int PanelDataset::failure_count_through(const std::string& pipe_id, int year) const {
    int count = 0;
    std::unordered_set<const std::string*> seen;
    const std::string* current = &pipe_id;
    while (!current->empty()) {
        auto years = failure_years(*current);
        count += static_cast<int>(
            std::upper_bound(years.begin(), years.end(), year) - years.begin());
        auto it = parent_index_.find(*current);
        if (it == parent_index_.end()) break;
        if (!seen.insert(&it->second).second) break;  // defensive: lineage cycle
        current = &it->second;
        if (seen.size() > 64) break;
    }
    return count;
}

struct PanelBuilder {
    static PanelBuild run(std::vector<PipeSnapshot> snapshots, std::vector<FailureEvent> failures) {
        PanelBuild out;
        PanelDataset& panel = out.panel;
        std::sort(snapshots.begin(), snapshots.end(),
                  [](const PipeSnapshot& a, const PipeSnapshot& b) {
                      if (a.pipe_id != b.pipe_id) return a.pipe_id < b.pipe_id;
                      return a.snapshot_year < b.snapshot_year;
                  });
        std::string duplicates;
        for (std::size_t i = 1; i < snapshots.size(); ++i) {
            if (snapshots[i].pipe_id == snapshots[i - 1].pipe_id &&
                snapshots[i].snapshot_year == snapshots[i - 1].snapshot_year) {
                if (!duplicates.empty()) duplicates += ", ";
                duplicates += "(" + snapshots[i].pipe_id + ", " +
                              std::to_string(snapshots[i].snapshot_year) + ")";
            }
        }
        if (!duplicates.empty()) {
            throw DataError("duplicate (pipe_id, snapshot_year) keys: " + duplicates);
        }
        if (snapshots.empty()) throw DataError("panel has no snapshots");

        panel.rows_ = std::move(snapshots);
        for (std::size_t i = 0; i < panel.rows_.size(); ++i) {
            const auto& row = panel.rows_[i];
            panel.year_index_[row.snapshot_year].push_back(i);
            if (!row.parent_id.empty()) panel.parent_index_[row.pipe_id] = row.parent_id;
        }
        panel.min_year_ = panel.year_index_.begin()->first;
        panel.max_year_ = panel.year_index_.rbegin()->first;
        for (const auto& [year, rows] : panel.year_index_) panel.years_.push_back(year);

        std::sort(failures.begin(), failures.end(),
                  [](const FailureEvent& a, const FailureEvent& b) {
                      if (a.pipe_id != b.pipe_id) return a.pipe_id < b.pipe_id;
                      return a.year < b.year;
                  });
        for (auto& event : failures) {
            if (!panel.has_pipe(event.pipe_id)) {
                out.orphan_failures.push_back(std::move(event));
                continue;
            }
            panel.failure_index_[event.pipe_id].push_back(event.year);
            panel.failures_.push_back(std::move(event));
        }
        return out;
    }
};

PanelBuild build_panel(std::vector<PipeSnapshot> snapshots, std::vector<FailureEvent> failures) {
    return PanelBuilder::run(std::move(snapshots), std::move(failures));
}

LabeledSlice label_failure_window(const PanelDataset& panel, int snapshot_year, int k) {
    if (k < 1) throw InvalidArgument("horizon k must be >= 1, got " + std::to_string(k));
    auto rows = panel.rows_at_year(snapshot_year);
    if (rows.empty()) {
        throw InvalidArgument("snapshot year " + std::to_string(snapshot_year) +
                              " not present in panel");
    }
    if (snapshot_year + k > panel.max_year()) {
        throw InvalidArgument("label window (" + std::to_string(snapshot_year) + ", " +
                              std::to_string(snapshot_year + k) +
                              "] extends past the last panel year " +
                              std::to_string(panel.max_year()));
    }
    LabeledSlice slice;
    slice.snapshot_year = snapshot_year;
    slice.horizon_k = k;
    slice.pipe_ids.reserve(rows.size());
    slice.labels.reserve(rows.size());
    for (std::size_t idx : rows) {
        const auto& row = panel.rows()[idx];
        auto years = panel.failure_years(row.pipe_id);
        const bool hit = std::upper_bound(years.begin(), years.end(), snapshot_year) !=
                         std::upper_bound(years.begin(), years.end(), snapshot_year + k);
        slice.pipe_ids.push_back(row.pipe_id);
        slice.labels.push_back(hit ? 1 : 0);
    }
    return slice;
}

TemporalSplit temporal_split(const PanelDataset& panel, int test_snapshot_year, int k, int gap) {
    if (gap < 0) gap = k;
    if (gap < k) {
        throw InvalidArgument("gap " + std::to_string(gap) + " must be >= horizon k " +
                              std::to_string(k) + " to keep train windows clear of the test year");
    }
    TemporalSplit split;
    split.test = label_failure_window(panel, test_snapshot_year, k);
    const int last_train_year = test_snapshot_year - gap;
    for (int year : panel.years()) {
        if (year <= last_train_year) split.train_years.push_back(year);
    }
    if (split.train_years.empty()) {
        throw InvalidArgument("infeasible split: no snapshot years at or before " +
                              std::to_string(last_train_year));
    }
    return split;
}

}  // namespace pipefail
