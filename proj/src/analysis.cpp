#include "voxlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include "voxlab/errors.hpp"

namespace voxlab {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<double> average_ranks(std::span<const double> xs) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    std::vector<double> ranks(xs.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("correlation inputs differ in length");
    if (xs.size() < 2) throw DomainError("correlation needs at least 2 samples");
    const double n = static_cast<double>(xs.size());
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = xs[i] - mx;
        const double dy = ys[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("spearman inputs differ in length");
    if (xs.size() < 2) throw DomainError("spearman needs at least 2 samples");
    const auto rx = average_ranks(xs);
    const auto ry = average_ranks(ys);
    return pearson(rx, ry);
}

RankingCurve ranking_correlation(const std::vector<std::vector<double>>& traces, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("fraction must lie in (0, 1]");
    if (traces.empty()) throw DomainError("no traces");
    const std::size_t len = traces.front().size();
    if (len == 0) throw DomainError("empty trace");
    for (const auto& t : traces)
        if (t.size() != len) throw DomainError("traces differ in length");

    std::vector<std::size_t> order(traces.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return traces[a].back() > traces[b].back(); });
    const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(traces.size()) - 1e-9));
    if (keep < 2) throw DomainError("top fraction keeps fewer than 2 morphologies");
    order.resize(keep);
    std::sort(order.begin(), order.end());

    RankingCurve curve;
    curve.fraction = fraction;
    curve.members = keep;
    std::vector<double> final_values, values;
    for (const auto m : order) final_values.push_back(traces[m].back());
    for (std::size_t g = 0; g < len; ++g) {
        values.clear();
        for (const auto m : order) values.push_back(traces[m][g]);
        curve.rho.push_back(spearman(values, final_values));
    }
    return curve;
}

namespace {

// P(U = u) under H0 for sample sizes n, m without ties.
std::vector<double> exact_u_distribution(std::size_t n, std::size_t m) {
    // c[i][j][u]: orderings of i and j observations with U = u.
    std::vector<std::vector<std::vector<double>>> c(n + 1, std::vector<std::vector<double>>(m + 1));
    for (std::size_t i = 0; i <= n; ++i)
        for (std::size_t j = 0; j <= m; ++j) {
            auto& cur = c[i][j];
            cur.assign(i * j + 1, 0.0);
            if (i == 0 || j == 0) {
                cur[0] = 1.0;
                continue;
            }
            // Largest observation from the first sample: it beats all j.
            const auto& a = c[i - 1][j];
            for (std::size_t u = 0; u < a.size(); ++u) cur[u + j] += a[u];
            const auto& b = c[i][j - 1];
            for (std::size_t u = 0; u < b.size(); ++u) cur[u] += b[u];
        }
    auto dist = c[n][m];
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    for (auto& d : dist) d /= total;
    return dist;
}

}  // namespace

MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("Mann-Whitney U needs two non-empty samples");
    for (const double v : a)
        if (!std::isfinite(v)) throw DomainError("Mann-Whitney U input is not finite");
    for (const double v : b)
        if (!std::isfinite(v)) throw DomainError("Mann-Whitney U input is not finite");
    const std::size_t n = a.size(), m = b.size();
    std::vector<double> all(a.begin(), a.end());
    all.insert(all.end(), b.begin(), b.end());
    const auto ranks = average_ranks(all);
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) rank_sum += ranks[i];
    const double nd = static_cast<double>(n), md = static_cast<double>(m);
    MannWhitneyResult r;
    r.u = rank_sum - nd * (nd + 1.0) / 2.0;
    r.u_other = nd * md - r.u;

    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    double tie_term = 0.0;
    bool ties = false;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        if (t > 1) ties = true;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    const double big_n = nd + md;
    const double mu = nd * md / 2.0;
    const double var = nd * md / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    r.z = var > 0.0 ? (r.u - mu) / std::sqrt(var) : 0.0;

    if (!ties && n * m <= 400) {
        r.exact = true;
        const auto dist = exact_u_distribution(n, m);
        // U is an integer without ties.
        const auto u = static_cast<std::size_t>(std::llround(r.u));
        double lower = 0.0, upper = 0.0;
        for (std::size_t k = 0; k < dist.size(); ++k) {
            if (k <= u) lower += dist[k];
            if (k >= u) upper += dist[k];
        }
        r.p = std::min(1.0, 2.0 * std::min(lower, upper));
        return r;
    }
    if (!(var > 0.0)) {
        r.p = 1.0;
        return r;
    }
    const double zc = std::max(0.0, std::abs(r.u - mu) - 0.5) / std::sqrt(var);
    r.p = std::min(1.0, std::erfc(zc / std::sqrt(2.0)));
    return r;
}

ChampionDiagnostics champion_diagnostics(const std::string& run_id, const EventLog& log, const LandscapeView& view,
                                         double threshold) {
    const EvolutionEvent* best = nullptr;
    for (const auto& e : log.events) {
        if (e.kind != EventKind::OffspringCreated && e.kind != EventKind::Injected) continue;
        if (!best || e.observed_fitness > best->observed_fitness) best = &e;
    }
    if (!best) throw DomainError("run " + run_id + " has no evaluated individuals");
    if (!view.space().viable(best->morphology_id))
        throw DomainError("champion morphology " + std::to_string(best->morphology_id.value) + " is not in the landscape");
    ChampionDiagnostics d;
    d.run_id = run_id;
    d.individual_id = best->individual_id;
    d.generation = best->generation;
    d.champion = best->morphology_id;
    d.observed_fitness = best->observed_fitness;
    d.true_fitness = view.fitness(best->morphology_id);
    const auto basin = hill_climb_basin(best->morphology_id, view);
    d.basin_peak = basin.peak;
    d.basin_distance = basin.steps;
    d.is_local_max = basin.steps == 0;
    d.near_optimal = d.true_fitness >= threshold;
    return d;
}

std::vector<MutationEffectRow> mutation_effects(const EventLog& log, const TrueFitness& true_fitness) {
    const bool elites = log.algorithm() == "map_elites";
    std::vector<std::set<std::uint64_t>> survivors;
    if (elites) {
        for (const auto& archive : replay_map_elites(log)) {
            auto& s = survivors.emplace_back();
            for (const auto& [n, m] : archive) s.insert(m.id);
        }
    } else {
        for (const auto& pop : replay_afpo(log)) {
            auto& s = survivors.emplace_back();
            for (const auto& m : pop) s.insert(m.id);
        }
    }

    struct Created {
        double observed;
        MorphologyId morphology;
    };
    std::unordered_map<std::uint64_t, Created> created;
    std::unordered_map<MorphologyId, double> truth;
    auto true_of = [&](MorphologyId id) {
        auto it = truth.find(id);
        if (it != truth.end()) return it->second;
        const double v = true_fitness(id);
        truth.emplace(id, v);
        return v;
    };

    std::vector<MutationEffectRow> rows(survivors.size());
    std::vector<std::vector<std::pair<std::uint64_t, double>>> body(survivors.size());
    std::vector<double> sum_obs(rows.size(), 0.0), sum_true(rows.size(), 0.0);
    for (const auto& e : log.events) {
        const auto g = static_cast<std::size_t>(e.generation);
        if (e.kind == EventKind::Injected || e.kind == EventKind::OffspringCreated)
            created[e.individual_id] = {e.observed_fitness, e.morphology_id};
        if (e.kind != EventKind::OffspringCreated || e.mutation_kind != MutationKind::Body) continue;
        if (!e.parent_id) throw DomainError("body-mutation offspring without parent linkage");
        auto p = created.find(*e.parent_id);
        if (p == created.end())
            throw DomainError("parent " + std::to_string(*e.parent_id) + " of individual " +
                              std::to_string(e.individual_id) + " does not appear in the log");
        const double child_true = true_of(e.morphology_id);
        sum_obs[g] += e.observed_fitness - p->second.observed;
        sum_true[g] += child_true - true_of(p->second.morphology);
        ++rows[g].body_offspring;
        body[g].emplace_back(e.individual_id, child_true);
    }

    for (std::size_t g = 0; g < rows.size(); ++g) {
        auto& r = rows[g];
        r.generation = static_cast<int>(g);
        if (r.body_offspring) {
            r.mean_observed_delta = sum_obs[g] / static_cast<double>(r.body_offspring);
            r.mean_true_delta = sum_true[g] / static_cast<double>(r.body_offspring);
        }
        if (!survivors[g].empty()) {
            double lo = std::numeric_limits<double>::infinity();
            for (const auto id : survivors[g]) lo = std::min(lo, true_of(created.at(id).morphology));
            r.competition = lo;
        }
        for (const auto& [id, t] : body[g]) {
            if (!r.competition || !(t > *r.competition)) continue;
            ++r.eligible;
            if (survivors[g].contains(id)) ++r.eligible_survived;
        }
        if (r.eligible) r.survival_rate = static_cast<double>(r.eligible_survived) / static_cast<double>(r.eligible);
    }
    return rows;
}

GroupBy parse_group_by(const std::string& text) {
    if (text == "none") return GroupBy::None;
    if (text == "active_count") return GroupBy::ActiveCount;
    if (text == "active_fraction") return GroupBy::ActiveFraction;
    throw DomainError("unknown grouping '" + text + "'");
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw DomainError("quantile of an empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

GroupStats group_stats(std::string name, std::vector<double> values) {
    if (values.empty()) throw DomainError("statistics of an empty group");
    std::sort(values.begin(), values.end());
    GroupStats s;
    s.group = std::move(name);
    s.count = values.size();
    double sum = 0.0;
    for (const double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    s.median = quantile_sorted(values, 0.5);
    s.q1 = quantile_sorted(values, 0.25);
    s.q3 = quantile_sorted(values, 0.75);
    s.min = values.front();
    s.max = values.back();
    return s;
}

std::vector<GroupStats> distribution_report(const Landscape& landscape, GroupBy group_by, int fraction_bins) {
    if (fraction_bins < 1) throw DomainError("fraction_bins must be >= 1");
    std::map<int, std::vector<double>> groups;
    for (const auto& [id, r] : landscape.records()) {
        const auto g = decode(id, landscape.grid());
        int key = 0;
        if (group_by == GroupBy::ActiveCount) key = g.active_count();
        if (group_by == GroupBy::ActiveFraction) {
            const double frac = static_cast<double>(g.active_count()) / static_cast<double>(g.filled_count());
            key = std::clamp(static_cast<int>(std::ceil(frac * fraction_bins - 1e-12)) - 1, 0, fraction_bins - 1);
        }
        groups[key].push_back(r.best_fitness);
    }
    std::vector<GroupStats> out;
    for (auto& [key, values] : groups) {
        std::string name = "all";
        if (group_by == GroupBy::ActiveCount) name = std::to_string(key);
        if (group_by == GroupBy::ActiveFraction) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "(%.4g,%.4g]", static_cast<double>(key) / fraction_bins,
                          static_cast<double>(key + 1) / fraction_bins);
            name = buf;
        }
        out.push_back(group_stats(name, std::move(values)));
    }
    return out;
}

Histogram make_histogram(std::span<const double> values, int bins, std::optional<double> lo, std::optional<double> hi) {
    if (bins < 1) throw DomainError("histogram needs at least one bin");
    if (values.empty() && (!lo || !hi)) throw DomainError("histogram range of an empty sample");
    const double a = lo ? *lo : *std::min_element(values.begin(), values.end());
    double b = hi ? *hi : *std::max_element(values.begin(), values.end());
    if (b < a) throw DomainError("histogram range is inverted");
    if (b == a) b = a + 1.0;
    Histogram h;
    for (int i = 0; i <= bins; ++i) h.edges.push_back(a + (b - a) * i / bins);
    h.edges.back() = b;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (const double v : values) {
        if (v < a || v > b) continue;
        auto k = static_cast<int>((v - a) / (b - a) * bins);
        k = std::clamp(k, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(k)];
    }
    return h;
}

namespace {

void write_meta(std::ostream& out, const Meta& meta) {
    for (const auto& [k, v] : meta) out << "# " << k << '=' << v << '\n';
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

}  // namespace

void write_group_stats_csv(std::ostream& out, const std::vector<GroupStats>& groups, const Meta& meta) {
    write_meta(out, meta);
    out << "group,count,mean,median,q1,q3,min,max\n";
    for (const auto& g : groups)
        out << g.group << ',' << g.count << ',' << format_double(g.mean) << ',' << format_double(g.median) << ','
            << format_double(g.q1) << ',' << format_double(g.q3) << ',' << format_double(g.min) << ','
            << format_double(g.max) << '\n';
}

void write_histogram_csv(std::ostream& out, const Histogram& h, const Meta& meta) {
    write_meta(out, meta);
    out << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
}

void write_ranking_csv(std::ostream& out, const std::vector<RankingCurve>& curves, const Meta& meta) {
    write_meta(out, meta);
    out << "fraction,members,generation,spearman\n";
    for (const auto& c : curves)
        for (std::size_t g = 0; g < c.rho.size(); ++g)
            out << format_double(c.fraction) << ',' << c.members << ',' << g << ',' << opt(c.rho[g]) << '\n';
}

void write_champions_csv(std::ostream& out, const std::vector<ChampionDiagnostics>& rows, const Meta& meta) {
    write_meta(out, meta);
    out << "run_id,individual_id,generation,morphology_id,observed_fitness,true_fitness,is_local_max,basin_peak,"
           "basin_distance,near_optimal\n";
    for (const auto& d : rows)
        out << d.run_id << ',' << d.individual_id << ',' << d.generation << ',' << d.champion.value << ','
            << format_double(d.observed_fitness) << ',' << format_double(d.true_fitness) << ','
            << (d.is_local_max ? 1 : 0) << ',' << d.basin_peak.value << ',' << d.basin_distance << ','
            << (d.near_optimal ? 1 : 0) << '\n';
}

void write_mutation_effects_csv(std::ostream& out, const std::string& run_id,
                                const std::vector<MutationEffectRow>& rows, const Meta& meta) {
    write_meta(out, meta);
    out << "run_id,generation,body_offspring,mean_observed_delta,mean_true_delta,competition,eligible,"
           "eligible_survived,survival_rate\n";
    for (const auto& r : rows)
        out << run_id << ',' << r.generation << ',' << r.body_offspring << ',' << opt(r.mean_observed_delta) << ','
            << opt(r.mean_true_delta) << ',' << opt(r.competition) << ',' << r.eligible << ','
            << r.eligible_survived << ',' << opt(r.survival_rate) << '\n';
}

void write_ruggedness_csv(std::ostream& out, const RuggednessStats& s, const Meta& meta) {
    write_meta(out, meta);
    out << "statistic,value\n";
    out << "mean_distance_to_local_max," << format_double(s.mean_to_local_max) << '\n';
    out << "mean_distance_to_global_max," << format_double(s.mean_to_global_max) << '\n';
    out << "mean_distance_to_near_optimal_local_max," << format_double(s.mean_to_near_optimal_local_max) << '\n';
    out << "local_max_count," << s.local_max_count << '\n';
    out << "near_optimal_local_max_count," << s.near_optimal_local_max_count << '\n';
    out << "morphologies," << s.morphologies << '\n';
    out << "unreachable," << s.unreachable << '\n';
    out << "threshold," << format_double(s.threshold) << '\n';
    out << "global_max_id," << s.global_max.value << '\n';
}

void write_stats_test_csv(std::ostream& out, const std::string& label_a, const std::string& label_b,
                          std::span<const double> a, std::span<const double> b, const MannWhitneyResult& r,
                          const Meta& meta) {
    write_meta(out, meta);
    out << "sample_a,sample_b,n_a,n_b,u_a,u_b,z,p,exact\n";
    out << label_a << ',' << label_b << ',' << a.size() << ',' << b.size() << ',' << format_double(r.u) << ','
        << format_double(r.u_other) << ',' << format_double(r.z) << ',' << format_double(r.p) << ','
        << (r.exact ? 1 : 0) << '\n';
}

}  // namespace voxlab
