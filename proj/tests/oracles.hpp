#pragma once

// Brute-force reference implementations shared by the unit tests and the
// acceptance suite. Written without the library's graph and ranking code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <vector>

namespace oracle {

inline std::vector<int> digits(std::uint64_t id, int cells) {
    std::vector<int> d(cells);
    for (int i = 0; i < cells; ++i) {
        d[i] = static_cast<int>(id % 5);
        id /= 5;
    }
    return d;
}

inline std::uint64_t pack(const std::vector<int>& d) {
    std::uint64_t id = 0;
    for (int i = static_cast<int>(d.size()) - 1; i >= 0; --i) id = id * 5 + static_cast<std::uint64_t>(d[i]);
    return id;
}

inline bool viable(std::uint64_t id, int rows, int cols) {
    const auto v = digits(id, rows * cols);
    int active = 0, filled = 0;
    for (int x : v) {
        active += (x == 3 || x == 4);
        filled += (x != 0);
    }
    if (active < 3 || filled == 0) return false;
    // Connectivity by repeated label relaxation.
    const int n = rows * cols;
    std::vector<int> label(n);
    for (int i = 0; i < n; ++i) label[i] = v[i] ? i : -1;
    for (bool changed = true; changed;) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            if (label[i] < 0) continue;
            const int r = i / cols, c = i % cols;
            const int nb[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
            for (auto& q : nb) {
                if (q[0] < 0 || q[0] >= rows || q[1] < 0 || q[1] >= cols) continue;
                const int j = q[0] * cols + q[1];
                if (label[j] >= 0 && label[j] < label[i]) {
                    label[i] = label[j];
                    changed = true;
                }
            }
        }
    }
    int root = -1;
    for (int i = 0; i < n; ++i) {
        if (label[i] < 0) continue;
        if (root < 0) root = label[i];
        if (label[i] != root) return false;
    }
    return true;
}

// Viable space of a small grid with an explicit adjacency list.
struct Graph {
    int rows = 2, cols = 2;
    std::vector<std::uint64_t> ids;
    std::map<std::uint64_t, int> index;
    std::vector<std::vector<int>> adj;

    Graph(int r, int c) : rows(r), cols(c) {
        std::uint64_t total = 1;
        for (int i = 0; i < r * c; ++i) total *= 5;
        for (std::uint64_t id = 0; id < total; ++id)
            if (viable(id, r, c)) {
                index[id] = static_cast<int>(ids.size());
                ids.push_back(id);
            }
        adj.resize(ids.size());
        for (std::size_t a = 0; a < ids.size(); ++a)
            for (std::size_t b = 0; b < ids.size(); ++b) {
                const auto da = digits(ids[a], r * c), db = digits(ids[b], r * c);
                int diff = 0;
                for (int k = 0; k < r * c; ++k) diff += da[k] != db[k];
                if (diff == 1) adj[a].push_back(static_cast<int>(b));
            }
    }

    std::size_t size() const { return ids.size(); }
};

inline std::vector<std::uint64_t> local_maxima(const Graph& g, const std::vector<double>& f) {
    std::vector<std::uint64_t> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        bool is_max = true;
        for (int j : g.adj[i])
            if (f[j] > f[i]) is_max = false;
        if (is_max) out.push_back(g.ids[i]);
    }
    return out;
}

// Steepest ascent; ties among best neighbors go to the lowest id.
inline std::pair<std::uint64_t, int> climb(const Graph& g, const std::vector<double>& f, int start) {
    int cur = start, steps = 0;
    for (;;) {
        int best = -1;
        for (int j : g.adj[cur]) {
            if (!(f[j] > f[cur])) continue;
            if (best < 0 || f[j] > f[best] || (f[j] == f[best] && g.ids[j] < g.ids[best])) best = j;
        }
        if (best < 0) return {g.ids[cur], steps};
        cur = best;
        ++steps;
    }
}

inline std::vector<int> bfs(const Graph& g, int source) {
    std::vector<int> d(g.size(), -1);
    std::deque<int> q{source};
    d[source] = 0;
    while (!q.empty()) {
        const int u = q.front();
        q.pop_front();
        for (int v : g.adj[u])
            if (d[v] < 0) {
                d[v] = d[u] + 1;
                q.push_back(v);
            }
    }
    return d;
}

// Minimum over per-source BFS runs.
inline std::vector<int> distance_to_set(const Graph& g, const std::vector<std::uint64_t>& targets) {
    std::vector<int> best(g.size(), -1);
    for (auto t : targets) {
        const auto d = bfs(g, g.index.at(t));
        for (std::size_t i = 0; i < g.size(); ++i)
            if (d[i] >= 0 && (best[i] < 0 || d[i] < best[i])) best[i] = d[i];
    }
    return best;
}

// Ranks by counting smaller and equal entries.
inline std::vector<double> ranks(const std::vector<double>& x) {
    std::vector<double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double less = 0, equal = 0;
        for (double y : x) {
            less += y < x[i];
            equal += y == x[i];
        }
        r[i] = less + (equal + 1) / 2.0;
    }
    return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i] / n;
        my += y[i] / n;
    }
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

// U of the first sample by direct pair counting.
inline double u_pairs(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
        for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    return u;
}

// Exact two-sided p on tie-free data by enumerating every split of the
// pooled ranks (small samples only).
inline double exact_p(const std::vector<double>& a, const std::vector<double>& b) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    const double u = u_pairs(a, b);
    const double mean = n * m / 2.0;
    const double dev = std::abs(u - mean);
    // counts[k][s]: subsets of size k of {0..N-1} with rank-sum s.
    const int N = n + m;
    const int maxs = N * (N + 1) / 2;
    std::vector<std::vector<double>> cnt(n + 1, std::vector<double>(maxs + 1, 0.0));
    cnt[0][0] = 1;
    for (int r = 1; r <= N; ++r)
        for (int k = std::min(n, r); k >= 1; --k)
            for (int s = maxs; s >= r; --s) cnt[k][s] += cnt[k - 1][s - r];
    double total = 0, extreme = 0;
    for (int s = 0; s <= maxs; ++s) {
        if (cnt[n][s] == 0) continue;
        const double us = s - n * (n + 1) / 2.0;
        total += cnt[n][s];
        if (std::abs(us - mean) >= dev - 1e-9) extreme += cnt[n][s];
    }
    return std::min(1.0, extreme / total);
}

}  // namespace oracle
