#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "volrec/rng.hpp"

namespace volrec {

using Volume = std::int64_t;

// Inclusive value range [lo, hi], 1-based.
struct RangeId {
    int lo = 1;
    int hi = 1;

    int span() const { return hi - lo + 1; }

    friend bool operator==(const RangeId& a, const RangeId& b) {
        return a.lo == b.lo && a.hi == b.hi;
    }
    // Lexicographic on (lo, hi).
    friend bool operator<(const RangeId& a, const RangeId& b) {
        return a.lo != b.lo ? a.lo < b.lo : a.hi < b.hi;
    }
};

// Canonical range ordering: span ascending, then lo ascending. Singleton
// ranges (i,i) come first, the full range (1,N) last. All tables, query
// distributions and the ILS basis use this order.
inline std::vector<RangeId> canonical_ranges(int n_values) {
    if (n_values < 1) throw std::invalid_argument("canonical_ranges: N must be >= 1");
    std::vector<RangeId> out;
    out.reserve(static_cast<std::size_t>(n_values) * (n_values + 1) / 2);
    for (int span = 1; span <= n_values; ++span)
        for (int lo = 1; lo + span - 1 <= n_values; ++lo)
            out.push_back(RangeId{lo, lo + span - 1});
    return out;
}

inline std::size_t range_count(int n_values) {
    return static_cast<std::size_t>(n_values) * (n_values + 1) / 2;
}

// Index of a range in canonical order.
inline std::size_t range_index(int n_values, RangeId r) {
    if (r.lo < 1 || r.hi > n_values || r.lo > r.hi)
        throw std::invalid_argument("range_index: range out of bounds");
    std::size_t idx = 0;
    for (int span = 1; span < r.span(); ++span)
        idx += static_cast<std::size_t>(n_values - span + 1);
    return idx + static_cast<std::size_t>(r.lo - 1);
}

// Dense column: counts[i] records take value i+1; every value occupied.
class Database {
public:
    explicit Database(std::vector<Volume> counts) : counts_(std::move(counts)) {
        if (counts_.empty()) throw std::invalid_argument("Database: empty counts");
        for (Volume c : counts_)
            if (c < 1) throw std::invalid_argument("Database: every count must be >= 1 (dense)");
    }

    const std::vector<Volume>& counts() const { return counts_; }
    int value_range_size() const { return static_cast<int>(counts_.size()); }
    Volume record_count() const {
        return std::accumulate(counts_.begin(), counts_.end(), Volume{0});
    }

    friend bool operator==(const Database& a, const Database& b) {
        return a.counts_ == b.counts_;
    }

private:
    std::vector<Volume> counts_;
};

inline Database reverse(const Database& db) {
    std::vector<Volume> c(db.counts().rbegin(), db.counts().rend());
    return Database(std::move(c));
}

// All N(N+1)/2 range volumes of a database, canonical order.
class ExactVolumeTable {
public:
    explicit ExactVolumeTable(const Database& db)
        : n_values_(db.value_range_size()), prefix_(static_cast<std::size_t>(n_values_) + 1, 0) {
        for (int i = 1; i <= n_values_; ++i)
            prefix_[static_cast<std::size_t>(i)] =
                prefix_[static_cast<std::size_t>(i - 1)] + db.counts()[static_cast<std::size_t>(i - 1)];
    }

    int value_range_size() const { return n_values_; }

    Volume volume(RangeId r) const {
        if (r.lo < 1 || r.hi > n_values_ || r.lo > r.hi)
            throw std::invalid_argument("ExactVolumeTable: range out of bounds");
        return prefix_[static_cast<std::size_t>(r.hi)] - prefix_[static_cast<std::size_t>(r.lo - 1)];
    }

    // Values in canonical range order.
    std::vector<Volume> values() const {
        std::vector<Volume> out;
        out.reserve(range_count(n_values_));
        for (const RangeId& r : canonical_ranges(n_values_)) out.push_back(volume(r));
        return out;
    }

    std::vector<Volume> volume_multiset() const {
        std::vector<Volume> v = values();
        std::sort(v.begin(), v.end());
        return v;
    }

    std::vector<Volume> distinct_volumes() const {
        std::vector<Volume> v = volume_multiset();
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return v;
    }

    // Elementary volumes vol(1,1..i), i = 1..N.
    std::vector<Volume> elementary_volumes() const {
        return std::vector<Volume>(prefix_.begin() + 1, prefix_.end());
    }

private:
    int n_values_;
    std::vector<Volume> prefix_;
};

inline ExactVolumeTable exact_volumes(const Database& db) { return ExactVolumeTable(db); }

enum class DbKind { UniformLike, Gaussian };

struct DbSpec {
    DbKind kind = DbKind::UniformLike;
    double mean = 0.0;    // gaussian only
    double stddev = 0.0;  // gaussian only
    Volume records = 0;
    int n_values = 0;
};

// Sample a column of `records` values over [1, N] and densify. Gaussian
// sampling discretizes by rounding and clamps to [1, N]. If a value ends up
// empty, single records are moved from the fullest bucket (ties: lowest
// value) to the lowest empty value until dense; record count is preserved.
inline Database generate_database(const DbSpec& spec, std::uint64_t seed) {
    const int n_values = spec.n_values;
    const Volume records = spec.records;
    if (n_values < 1) throw std::invalid_argument("generate_database: N must be >= 1");
    if (records < n_values)
        throw std::invalid_argument("generate_database: need at least N records for a dense column");
    if (spec.kind == DbKind::Gaussian && spec.stddev <= 0.0)
        throw std::invalid_argument("generate_database: stddev must be positive");

    Rng rng(seed);
    std::vector<Volume> counts(static_cast<std::size_t>(n_values), 0);
    for (Volume r = 0; r < records; ++r) {
        int value = 0;
        if (spec.kind == DbKind::UniformLike) {
            value = static_cast<int>(rng.uniform_int(1, n_values));
        } else {
            const double s = rng.gaussian(spec.mean, spec.stddev);
            long v = std::lround(s);
            if (v < 1) v = 1;
            if (v > n_values) v = n_values;
            value = static_cast<int>(v);
        }
        ++counts[static_cast<std::size_t>(value - 1)];
    }

    for (;;) {
        auto empty_it = std::find(counts.begin(), counts.end(), Volume{0});
        if (empty_it == counts.end()) break;
        auto largest_it = std::max_element(counts.begin(), counts.end());
        --*largest_it;
        ++*empty_it;
    }
    return Database(std::move(counts));
}

enum class QueryPattern { Uniform, Adjacent2x, AdjacentAndSkip2x, CloseVolume2x };

// Normalized distribution over the canonical ranges.
class QueryDistribution {
public:
    QueryDistribution(int n_values, std::vector<double> weights)
        : n_values_(n_values), weights_(std::move(weights)) {
        if (weights_.size() != range_count(n_values_))
            throw std::invalid_argument("QueryDistribution: weight count mismatch");
        normalize();
    }

    int value_range_size() const { return n_values_; }
    const std::vector<double>& weights() const { return weights_; }

    double weight(RangeId r) const { return weights_[range_index(n_values_, r)]; }

    // Zero out the weights of the given ranges and renormalize.
    void exclude(const std::vector<RangeId>& ranges) {
        for (const RangeId& r : ranges) weights_[range_index(n_values_, r)] = 0.0;
        normalize();
    }

    RangeId sample(Rng& rng) const {
        const double u = rng.next_double();
        double acc = 0.0;
        const std::vector<RangeId> ranges = canonical_ranges(n_values_);
        for (std::size_t i = 0; i < weights_.size(); ++i) {
            acc += weights_[i];
            if (u < acc) return ranges[i];
        }
        return ranges.back();
    }

private:
    void normalize() {
        double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
        if (total <= 0.0) throw std::invalid_argument("QueryDistribution: all weights zero");
        for (double& w : weights_) w /= total;
    }

    int n_values_;
    std::vector<double> weights_;
};

// close_volume_pairing_budget: two ranges are a "close volume" pair when
// their true volumes differ by at most 2x this relative tolerance; consecutive
// entries of the volume-sorted range list are paired greedily and the
// lexicographically smaller RangeId of each pair gets double weight.
inline QueryDistribution make_query_distribution(QueryPattern pattern, int n_values,
                                                 const Database* db = nullptr,
                                                 double close_volume_pairing_budget = 0.002) {
    const std::vector<RangeId> ranges = canonical_ranges(n_values);
    std::vector<double> w(ranges.size(), 1.0);
    switch (pattern) {
        case QueryPattern::Uniform:
            break;
        case QueryPattern::Adjacent2x:
            for (std::size_t i = 0; i < ranges.size(); ++i)
                if (ranges[i].span() == 2) w[i] = 2.0;
            break;
        case QueryPattern::AdjacentAndSkip2x:
            for (std::size_t i = 0; i < ranges.size(); ++i)
                if (ranges[i].span() == 2 || ranges[i].span() == 3) w[i] = 2.0;
            break;
        case QueryPattern::CloseVolume2x: {
            if (db == nullptr)
                throw std::invalid_argument("make_query_distribution: close-volume pattern needs a database");
            const ExactVolumeTable table(*db);
            std::vector<std::pair<Volume, RangeId>> by_volume;
            by_volume.reserve(ranges.size());
            for (const RangeId& r : ranges) by_volume.emplace_back(table.volume(r), r);
            std::sort(by_volume.begin(), by_volume.end(),
                      [](const auto& a, const auto& b) {
                          return a.first != b.first ? a.first < b.first : a.second < b.second;
                      });
            for (std::size_t i = 0; i + 1 < by_volume.size();) {
                const double lo = static_cast<double>(by_volume[i].first);
                const double hi = static_cast<double>(by_volume[i + 1].first);
                if (lo > 0.0 && (hi - lo) / lo <= 2.0 * close_volume_pairing_budget) {
                    const RangeId smaller = std::min(by_volume[i].second, by_volume[i + 1].second);
                    w[range_index(n_values, smaller)] *= 2.0;
                    i += 2;
                } else {
                    ++i;
                }
            }
            break;
        }
    }
    return QueryDistribution(n_values, std::move(w));
}

// --- CSV interfaces ---

inline std::string database_to_csv(const Database& db) {
    std::ostringstream out;
    out << "value,count\n";
    for (int i = 0; i < db.value_range_size(); ++i)
        out << (i + 1) << ',' << db.counts()[static_cast<std::size_t>(i)] << '\n';
    return out.str();
}

inline Database database_from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("database csv: empty input");
    if (line != "value,count" && line != "value,count\r")
        throw std::runtime_error("database csv: expected header 'value,count'");
    std::vector<Volume> counts;
    int expected_value = 1;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("database csv: malformed row '" + line + "'");
        const int value = std::stoi(line.substr(0, comma));
        const Volume count = std::stoll(line.substr(comma + 1));
        if (value != expected_value)
            throw std::runtime_error("database csv: rows must cover values 1..N in order");
        counts.push_back(count);
        ++expected_value;
    }
    if (counts.empty()) throw std::runtime_error("database csv: no rows");
    return Database(std::move(counts));
}

// Raw single-column ingestion: one record value per line (optional "value"
// header). The column must be dense over 1..max(value).
inline Database ingest_raw_column(std::istream& in) {
    std::map<int, Volume> histogram;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && (line == "value" || line == "values")) {
            first = false;
            continue;
        }
        first = false;
        int value = 0;
        try {
            std::size_t pos = 0;
            value = std::stoi(line, &pos);
            if (pos != line.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw std::runtime_error("raw column: non-integer row '" + line + "'");
        }
        if (value < 1) throw std::runtime_error("raw column: values must be >= 1");
        ++histogram[value];
    }
    if (histogram.empty()) throw std::runtime_error("raw column: no values");
    const int n_values = histogram.rbegin()->first;
    std::vector<Volume> counts(static_cast<std::size_t>(n_values), 0);
    for (const auto& [value, count] : histogram) counts[static_cast<std::size_t>(value - 1)] = count;
    for (int i = 0; i < n_values; ++i)
        if (counts[static_cast<std::size_t>(i)] == 0)
            throw std::runtime_error("raw column: not dense, value " + std::to_string(i + 1) +
                                     " has no records");
    return Database(std::move(counts));
}

} // namespace volrec
