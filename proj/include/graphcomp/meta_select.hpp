#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "graphcomp/grid.hpp"

namespace graphcomp {

/// Inclusive timestamp range [start, end].
struct TimeRange {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t length() const { return end - start + 1; }
    bool operator==(const TimeRange&) const = default;
};

/// Contiguous, sorted groups covering one window of the time axis.
struct MetaPlan {
    std::vector<TimeRange> groups;
    std::size_t r_max_used = 0;

    bool operator==(const MetaPlan&) const = default;
};

enum class SignalMode : std::uint8_t {
    reference0 = 0,
    consecutive = 1,
};

inline SignalMode parse_signal_mode(const std::string& s) {
    if (s == "reference0") return SignalMode::reference0;
    if (s == "consecutive") return SignalMode::consecutive;
    throw Error(ErrorKind::config, "signal mode must be reference0 or consecutive");
}

struct TemporalSignal {
    std::vector<double> values;
    std::vector<double> prefix;  // prefix[k] = sum of values[0..k)

    TemporalSignal() = default;
    explicit TemporalSignal(std::vector<double> s) : values(std::move(s)), prefix(values.size() + 1, 0.0) {
        for (std::size_t k = 0; k < values.size(); ++k) prefix[k + 1] = prefix[k] + values[k];
    }

    std::size_t size() const { return values.size(); }
};

/// Mean absolute difference between two equally shaped fields.
template <std::floating_point S>
double mabsd(std::span<const S> a, std::span<const S> b) {
    require(a.size() == b.size() && !a.empty(), ErrorKind::dimension, "mabsd needs equally shaped fields");
    double acc = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
    return acc / static_cast<double>(a.size());
}

template <std::floating_point S>
double mabsd(const Field2D<S>& a, const Field2D<S>& b) {
    require(a.rows == b.rows && a.cols == b.cols, ErrorKind::dimension, "mabsd needs equally shaped fields");
    return mabsd<S>(std::span<const S>(a.values), std::span<const S>(b.values));
}

/// Per-timestamp scalar over timestamps [window.start, window.end].
template <std::floating_point S>
TemporalSignal build_signal(const TemporalGrid<S>& grid, SignalMode mode, TimeRange window) {
    require(window.start <= window.end && window.end < grid.timestamps(), ErrorKind::dimension,
            "window outside the grid");
    std::vector<double> s(window.length(), 0.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        const std::size_t ref = mode == SignalMode::reference0 ? window.start : window.start + k - 1;
        s[k] = mabsd(grid.frame(window.start + k), grid.frame(ref));
    }
    return TemporalSignal(std::move(s));
}

template <std::floating_point S>
TemporalSignal build_signal(const TemporalGrid<S>& grid, SignalMode mode) {
    return build_signal(grid, mode, TimeRange{0, grid.timestamps() - 1});
}

/// Sum of absolute deviations of s[lo..hi] from its prefix-sum mean.
inline double segment_cost(const TemporalSignal& sig, std::size_t lo, std::size_t hi) {
    const double mean = (sig.prefix[hi + 1] - sig.prefix[lo]) / static_cast<double>(hi - lo + 1);
    double cost = 0;
    for (std::size_t k = lo; k <= hi; ++k) cost += std::abs(sig.values[k] - mean);
    return cost;
}

inline double plan_cost(const TemporalSignal& sig, const MetaPlan& plan) {
    double total = 0;
    for (const auto& g : plan.groups) total += segment_cost(sig, g.start, g.end);
    return total;
}

/// Optimal partition into at most r_max contiguous groups.
///
/// cost[r][j] is the best cost of covering [0, j] with exactly r groups. Ties
/// prefer fewer groups, then the earliest last boundary. Segment costs are
/// tabulated once (O(T^3/6) additions) so the recurrence itself is O(r_max T^2).
inline MetaPlan select_meta(const TemporalSignal& sig, std::size_t r_max) {
    require(r_max >= 1, ErrorKind::config, "r_max must be >= 1");
    const std::size_t t_count = sig.size();
    require(t_count >= 1, ErrorKind::dimension, "empty temporal signal");
    const std::size_t groups_cap = std::min(r_max, t_count);

    std::vector<double> err(t_count * t_count, 0.0);
    for (std::size_t lo = 0; lo < t_count; ++lo)
        for (std::size_t hi = lo; hi < t_count; ++hi) err[lo * t_count + hi] = segment_cost(sig, lo, hi);

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> cost(groups_cap + 1, std::vector<double>(t_count, inf));
    std::vector<std::vector<std::size_t>> start(groups_cap + 1, std::vector<std::size_t>(t_count, 0));
    for (std::size_t j = 0; j < t_count; ++j) cost[1][j] = err[j];
    for (std::size_t r = 2; r <= groups_cap; ++r) {
        for (std::size_t j = r - 1; j < t_count; ++j) {
            double best = inf;
            std::size_t arg = 0;
            for (std::size_t m = r - 2; m < j; ++m) {
                const double c = cost[r - 1][m] + err[(m + 1) * t_count + j];
                if (c < best) {
                    best = c;
                    arg = m + 1;
                }
            }
            cost[r][j] = best;
            start[r][j] = arg;
        }
    }

    std::size_t best_r = 1;
    for (std::size_t r = 2; r <= groups_cap; ++r)
        if (cost[r][t_count - 1] < cost[best_r][t_count - 1]) best_r = r;

    MetaPlan plan;
    plan.r_max_used = r_max;
    std::size_t current = t_count - 1;
    for (std::size_t r = best_r; r >= 1; --r) {
        const std::size_t s = start[r][current];
        plan.groups.push_back({s, current});
        if (r == 1) break;
        current = s - 1;
    }
    std::reverse(plan.groups.begin(), plan.groups.end());
    return plan;
}

/// Per-pixel mean of the group's timestamps.
template <std::floating_point S>
Field2D<S> virtual_timestamp(const TemporalGrid<S>& grid, TimeRange group) {
    require(group.start <= group.end && group.end < grid.timestamps(), ErrorKind::dimension,
            "group outside the grid");
    const std::size_t plane = grid.dims().plane();
    std::vector<double> acc(plane, 0.0);
    for (std::size_t t = group.start; t <= group.end; ++t) {
        auto f = grid.frame(t);
        for (std::size_t i = 0; i < plane; ++i) acc[i] += static_cast<double>(f[i]);
    }
    std::vector<S> out(plane);
    const double len = static_cast<double>(group.length());
    for (std::size_t i = 0; i < plane; ++i) out[i] = static_cast<S>(acc[i] / len);
    return Field2D<S>(grid.rows(), grid.cols(), std::move(out));
}

/// Splits [0, T) into consecutive windows of at most `window` timestamps.
inline std::vector<TimeRange> plan_windows(std::size_t timestamps, std::size_t window) {
    require(window >= 1, ErrorKind::config, "window must be >= 1");
    std::vector<TimeRange> out;
    for (std::size_t s = 0; s < timestamps; s += window) out.push_back({s, std::min(s + window, timestamps) - 1});
    return out;
}

}  // namespace graphcomp
