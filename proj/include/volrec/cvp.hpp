#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "volrec/model.hpp"

namespace volrec {

// Range-indicator system A x ~ target. A is the N' x N 0/1 matrix whose row
// for range (i,j) has ones in columns i..j (canonical row order, so the first
// N rows are the identity). A is implicit: it is fully determined by N. T is
// the appendix's augmentation constant for the full-rank basis A'; the solver
// works on A directly, which equals the T-augmented problem restricted to
// zero augmentation coordinates.
struct CvpInstance {
    int n_values = 0;
    std::vector<Volume> target;  // length N(N+1)/2, canonical order
    Volume t_constant = 0;

    std::size_t row_count() const { return range_count(n_values); }

    // Row of A for the k-th canonical range, as (lo, hi) column span.
    RangeId row_range(std::size_t k) const { return canonical_ranges(n_values)[k]; }
};

// For each range (i,j): compute elementary[j] - elementary[i-1], then snap to
// the nearest observed volume (ties: the smaller volume).
inline std::vector<Volume> snap_candidate_volumes(const std::vector<Volume>& elementary,
                                                  const std::vector<Volume>& observed) {
    if (elementary.empty()) throw std::invalid_argument("snap_candidate_volumes: empty elementary list");
    if (observed.empty()) throw std::invalid_argument("snap_candidate_volumes: empty observed set");
    for (std::size_t i = 1; i < elementary.size(); ++i)
        if (elementary[i] <= elementary[i - 1])
            throw std::invalid_argument("snap_candidate_volumes: elementary volumes must be strictly increasing");

    std::vector<Volume> sorted = observed;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    auto snap = [&](Volume v) {
        auto it = std::lower_bound(sorted.begin(), sorted.end(), v);
        if (it == sorted.end()) return sorted.back();
        if (it == sorted.begin()) return sorted.front();
        const Volume above = *it;
        const Volume below = *(it - 1);
        return (v - below <= above - v) ? below : above;  // tie -> smaller
    };

    const int n_values = static_cast<int>(elementary.size());
    std::vector<Volume> out;
    out.reserve(range_count(n_values));
    for (const RangeId& r : canonical_ranges(n_values)) {
        const Volume computed =
            elementary[static_cast<std::size_t>(r.hi - 1)] -
            (r.lo >= 2 ? elementary[static_cast<std::size_t>(r.lo - 2)] : 0);
        out.push_back(snap(computed));
    }
    return out;
}

inline CvpInstance build_cvp_instance(int n_values, const std::vector<Volume>& candidates,
                                      Volume t_constant = -1) {
    if (n_values < 1) throw std::invalid_argument("build_cvp_instance: N must be >= 1");
    if (candidates.size() != range_count(n_values))
        throw std::invalid_argument("build_cvp_instance: candidate vector length mismatch");
    CvpInstance inst;
    inst.n_values = n_values;
    inst.target = candidates;
    inst.t_constant =
        t_constant > 0 ? t_constant
                       : 100 * *std::max_element(candidates.begin(), candidates.end());
    return inst;
}

struct RefinedSolution {
    std::vector<Volume> x;
    double residual_l2 = 0.0;
    Volume residual_linf = 0;
    std::int64_t residual_l2_squared = 0;
};

namespace detail {

// Exact squared residual of A x - target, using prefix sums for the rows.
inline std::int64_t exact_cost(const CvpInstance& inst, const std::vector<Volume>& x) {
    std::vector<Volume> prefix(x.size() + 1, 0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
    std::int64_t cost = 0;
    std::size_t k = 0;
    for (const RangeId& r : canonical_ranges(inst.n_values)) {
        const Volume row = prefix[static_cast<std::size_t>(r.hi)] -
                           prefix[static_cast<std::size_t>(r.lo - 1)];
        const Volume e = row - inst.target[k++];
        cost += e * e;
    }
    return cost;
}

inline Volume linf_residual(const CvpInstance& inst, const std::vector<Volume>& x) {
    std::vector<Volume> prefix(x.size() + 1, 0);
    for (std::size_t i = 0; i < x.size(); ++i) prefix[i + 1] = prefix[i] + x[i];
    Volume worst = 0;
    std::size_t k = 0;
    for (const RangeId& r : canonical_ranges(inst.n_values)) {
        const Volume row = prefix[static_cast<std::size_t>(r.hi)] -
                           prefix[static_cast<std::size_t>(r.lo - 1)];
        const Volume e = row - inst.target[k++];
        worst = std::max(worst, e < 0 ? -e : e);
    }
    return worst;
}

// Thin QR of the dense A (N' x N) via modified Gram-Schmidt. Returns R (NxN,
// row-major) and q_t_target = Q^T target.
struct QrData {
    std::vector<double> r;  // N x N
    std::vector<double> qt_target;
};

inline QrData qr_decompose(const CvpInstance& inst) {
    const int n = inst.n_values;
    const std::size_t rows = inst.row_count();
    std::vector<std::vector<double>> a(static_cast<std::size_t>(n),
                                       std::vector<double>(rows, 0.0));  // columns
    {
        std::size_t k = 0;
        for (const RangeId& r : canonical_ranges(n)) {
            for (int c = r.lo; c <= r.hi; ++c) a[static_cast<std::size_t>(c - 1)][k] = 1.0;
            ++k;
        }
    }
    QrData qr;
    qr.r.assign(static_cast<std::size_t>(n) * n, 0.0);
    qr.qt_target.assign(static_cast<std::size_t>(n), 0.0);
    std::vector<std::vector<double>> q = a;
    for (int j = 0; j < n; ++j) {
        auto& qj = q[static_cast<std::size_t>(j)];
        for (int i = 0; i < j; ++i) {
            const auto& qi = q[static_cast<std::size_t>(i)];
            double dot = 0.0;
            for (std::size_t k = 0; k < rows; ++k) dot += qi[k] * qj[k];
            qr.r[static_cast<std::size_t>(i) * n + j] = dot;
            for (std::size_t k = 0; k < rows; ++k) qj[k] -= dot * qi[k];
        }
        double norm = 0.0;
        for (std::size_t k = 0; k < rows; ++k) norm += qj[k] * qj[k];
        norm = std::sqrt(norm);
        if (norm < 1e-12) throw std::runtime_error("solve_cvp: basis not full rank");
        qr.r[static_cast<std::size_t>(j) * n + j] = norm;
        for (std::size_t k = 0; k < rows; ++k) qj[k] /= norm;
        double dot = 0.0;
        for (std::size_t k = 0; k < rows; ++k)
            dot += qj[k] * static_cast<double>(inst.target[k]);
        qr.qt_target[static_cast<std::size_t>(j)] = dot;
    }
    return qr;
}

} // namespace detail

// Real-valued least-squares solution of A x ~ target (back-substitution on R).
inline std::vector<double> least_squares_real(const CvpInstance& inst) {
    const int n = inst.n_values;
    const detail::QrData qr = detail::qr_decompose(inst);
    std::vector<double> x(static_cast<std::size_t>(n), 0.0);
    for (int i = n - 1; i >= 0; --i) {
        double s = qr.qt_target[static_cast<std::size_t>(i)];
        for (int j = i + 1; j < n; ++j)
            s -= qr.r[static_cast<std::size_t>(i) * n + j] * x[static_cast<std::size_t>(j)];
        x[static_cast<std::size_t>(i)] = s / qr.r[static_cast<std::size_t>(i) * n + i];
    }
    return x;
}

// Branch-and-bound integer least squares (sphere decoding with
// Schnorr-Euchner enumeration), constrained to x_i >= 1. Minimizes
// ||A x - target||_2; equal-cost points resolve to the lexicographically
// smallest x. The search radius starts at the warm start's cost and is
// doubled up to four times if no point is found.
inline RefinedSolution solve_cvp(const CvpInstance& inst,
                                 std::optional<std::vector<Volume>> warm_start = std::nullopt) {
    const int n = inst.n_values;
    if (n < 1) throw std::invalid_argument("solve_cvp: invalid instance");

    const detail::QrData qr = detail::qr_decompose(inst);
    const std::vector<double> real_ls = least_squares_real(inst);

    std::vector<Volume> start(static_cast<std::size_t>(n), 1);
    for (int i = 0; i < n; ++i)
        start[static_cast<std::size_t>(i)] =
            std::max<Volume>(1, std::llround(real_ls[static_cast<std::size_t>(i)]));
    if (warm_start) {
        if (static_cast<int>(warm_start->size()) != n)
            throw std::invalid_argument("solve_cvp: warm start length mismatch");
        for (Volume v : *warm_start)
            if (v < 1) throw std::invalid_argument("solve_cvp: warm start must be dense (>= 1)");
        if (detail::exact_cost(inst, *warm_start) < detail::exact_cost(inst, start))
            start = *warm_start;
    }

    std::int64_t best_cost = detail::exact_cost(inst, start);
    std::vector<Volume> best_x = start;

    // ||A x - t||^2 = ||R x - Q^T t||^2 + constant; enumerate on the reduced
    // triangular system with the constant folded out of the radius. The
    // constant is only a search bound; acceptance always recomputes the exact
    // integer cost, so the 1.5 cushion merely prevents over-pruning.
    const double reduced_const = [&] {
        double t2 = 0.0;
        for (Volume v : inst.target) t2 += static_cast<double>(v) * static_cast<double>(v);
        double q2 = 0.0;
        for (double v : qr.qt_target) q2 += v * v;
        return t2 - q2;
    }();

    bool found = false;
    auto run_search = [&](double radius) {
        // Per-level two-cursor zig-zag: values >= 1 in order of distance from
        // the real center; each side closes once it leaves the radius.
        struct Level {
            double center = 0.0;
            Volume down = 0, up = 0;
            bool down_open = false, up_open = false;
        };
        std::vector<Level> levels(static_cast<std::size_t>(n));
        std::vector<double> partial(static_cast<std::size_t>(n) + 1, 0.0);
        std::vector<Volume> x(static_cast<std::size_t>(n), 1);

        const auto enter_level = [&](int level) {
            double s = qr.qt_target[static_cast<std::size_t>(level)];
            for (int j = level + 1; j < n; ++j)
                s -= qr.r[static_cast<std::size_t>(level) * n + j] *
                     static_cast<double>(x[static_cast<std::size_t>(j)]);
            const double center = s / qr.r[static_cast<std::size_t>(level) * n + level];
            Level& st = levels[static_cast<std::size_t>(level)];
            st.center = center;
            const Volume base = std::llround(std::floor(center));
            st.down = base;
            st.up = base + 1;
            if (st.down < 1) {
                st.up = 1;
                st.down_open = false;
            } else {
                st.down_open = true;
            }
            st.up_open = true;
        };

        // Next untried value on this level, closest-to-center first
        // (ties: lower value). Returns nothing when both sides are closed.
        const auto next_value = [&](int level) -> std::optional<Volume> {
            Level& st = levels[static_cast<std::size_t>(level)];
            if (!st.down_open && !st.up_open) return std::nullopt;
            bool take_down;
            if (!st.down_open) {
                take_down = false;
            } else if (!st.up_open) {
                take_down = true;
            } else {
                take_down = st.center - static_cast<double>(st.down) <=
                            static_cast<double>(st.up) - st.center;
            }
            if (take_down) {
                const Volume v = st.down;
                --st.down;
                if (st.down < 1) st.down_open = false;
                return v;
            }
            const Volume v = st.up;
            ++st.up;
            return v;
        };

        const auto close_side = [&](int level, Volume value) {
            Level& st = levels[static_cast<std::size_t>(level)];
            if (static_cast<double>(value) <= st.center) {
                st.down_open = false;
            } else {
                st.up_open = false;
            }
        };

        int level = n - 1;
        enter_level(level);
        while (level < n) {
            const auto value = next_value(level);
            if (!value) {
                ++level;  // backtrack
                continue;
            }
            const double rii = qr.r[static_cast<std::size_t>(level) * n + level];
            const double term =
                rii * (static_cast<double>(*value) - levels[static_cast<std::size_t>(level)].center);
            const double d = partial[static_cast<std::size_t>(level) + 1] + term * term;
            if (d > radius) {
                close_side(level, *value);
                continue;
            }
            x[static_cast<std::size_t>(level)] = *value;
            partial[static_cast<std::size_t>(level)] = d;
            if (level == 0) {
                const std::int64_t cost = detail::exact_cost(inst, x);
                if (cost < best_cost || (cost == best_cost && x < best_x)) {
                    best_cost = cost;
                    best_x = x;
                    radius = std::min(radius, static_cast<double>(best_cost) - reduced_const + 1.5);
                }
                found = true;
                continue;
            }
            --level;
            enter_level(level);
        }
    };

    // The dense warm start is itself a lattice point, so the initial radius
    // always encloses a solution; the doubling fallback guards float slop.
    double radius = static_cast<double>(best_cost) - reduced_const + 1.5;
    run_search(radius);
    for (int attempt = 0; attempt < 4 && !found; ++attempt) {
        radius *= 2.0;
        run_search(radius);
    }

    RefinedSolution out;
    out.x = best_x;
    out.residual_l2_squared = best_cost;
    out.residual_l2 = std::sqrt(static_cast<double>(best_cost));
    out.residual_linf = detail::linf_residual(inst, best_x);
    return out;
}

// Full error-reduction step: prefix volumes of the guess, snap every derived
// range volume to the nearest observation, then solve the ILS system.
// The guess itself seeds the search, so the refined residual never exceeds
// the guess's residual against the snapped targets.
inline RefinedSolution refine(const Database& db_guess, const std::vector<Volume>& observed) {
    const ExactVolumeTable table(db_guess);
    const std::vector<Volume> snapped = snap_candidate_volumes(table.elementary_volumes(), observed);
    CvpInstance inst = build_cvp_instance(db_guess.value_range_size(), snapped);
    return solve_cvp(inst, db_guess.counts());
}

} // namespace volrec
