#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "voxlab/event_log.hpp"
#include "voxlab/landscape.hpp"

namespace voxlab {

// Average ranks (1-based); tied values share the mean of their rank span.
std::vector<double> average_ranks(std::span<const double> xs);

// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson correlation of average ranks. Throws DomainError on unequal
// lengths or fewer than 2 samples; nullopt for zero rank variance.
std::optional<double> spearman(std::span<const double> xs, std::span<const double> ys);

struct RankingCurve {
    double fraction = 1.0;
    std::size_t members = 0;
    // rho per generation; nullopt where a generation has tied-out ranks.
    std::vector<std::optional<double>> rho;
};

// traces[m][g]: best-so-far fitness of morphology m after generation g.
// Keeps the top ceil(fraction * M) morphologies by final fitness (ties by
// index) and correlates every generation with the final one.
RankingCurve ranking_correlation(const std::vector<std::vector<double>>& traces, double fraction);

struct MannWhitneyResult {
    // U of the first sample: pairs (a_i > b_j) plus half the ties.
    double u = 0.0;
    double u_other = 0.0;
    double z = 0.0;
    double p = 1.0;
    bool exact = false;
};

// Two-sided. Exact null distribution when n*m <= 400 and there are no ties,
// otherwise the normal approximation with tie and continuity corrections.
MannWhitneyResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

struct ChampionDiagnostics {
    std::string run_id;
    std::uint64_t individual_id = 0;
    int generation = 0;
    MorphologyId champion;
    double observed_fitness = 0.0;
    double true_fitness = 0.0;
    bool is_local_max = false;
    MorphologyId basin_peak;
    int basin_distance = 0;
    bool near_optimal = false;
};

// Run champion = first individual with the highest observed fitness among
// the log's offspring_created and injected rows.
ChampionDiagnostics champion_diagnostics(const std::string& run_id, const EventLog& log, const LandscapeView& view,
                                         double threshold);

struct MutationEffectRow {
    int generation = 0;
    std::size_t body_offspring = 0;
    std::optional<double> mean_observed_delta;
    std::optional<double> mean_true_delta;
    // Lowest landscape fitness among the generation's survivors.
    std::optional<double> competition;
    // Body offspring whose landscape fitness exceeds the competition, and
    // how many of them survived.
    std::size_t eligible = 0;
    std::size_t eligible_survived = 0;
    std::optional<double> survival_rate;

    friend bool operator==(const MutationEffectRow&, const MutationEffectRow&) = default;
};

using TrueFitness = std::function<double(MorphologyId)>;

// One row per generation of the log. Survivors are the population (AFPO)
// or archive (MAP-Elites) after the generation, as rebuilt by replay.
std::vector<MutationEffectRow> mutation_effects(const EventLog& log, const TrueFitness& true_fitness);

enum class GroupBy { None, ActiveCount, ActiveFraction };

GroupBy parse_group_by(const std::string& text);

struct GroupStats {
    std::string group;
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Linear-interpolation quantile of sorted values.
double quantile_sorted(std::span<const double> sorted, double p);
GroupStats group_stats(std::string name, std::vector<double> values);

// ActiveFraction groups active/filled voxels into `fraction_bins` equal
// (lo, hi] bins over (0, 1]; empty bins are omitted.
std::vector<GroupStats> distribution_report(const Landscape& landscape, GroupBy group_by, int fraction_bins = 5);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

// `bins` equal-width bins over [lo, hi]; the last bin is closed.
Histogram make_histogram(std::span<const double> values, int bins, std::optional<double> lo = std::nullopt,
                         std::optional<double> hi = std::nullopt);

// CSV writers: '#' metadata rows, then a header row.
using Meta = std::vector<std::pair<std::string, std::string>>;

void write_group_stats_csv(std::ostream& out, const std::vector<GroupStats>& groups, const Meta& meta);
void write_histogram_csv(std::ostream& out, const Histogram& h, const Meta& meta);
void write_ranking_csv(std::ostream& out, const std::vector<RankingCurve>& curves, const Meta& meta);
void write_champions_csv(std::ostream& out, const std::vector<ChampionDiagnostics>& rows, const Meta& meta);
void write_mutation_effects_csv(std::ostream& out, const std::string& run_id,
                                const std::vector<MutationEffectRow>& rows, const Meta& meta);
void write_ruggedness_csv(std::ostream& out, const RuggednessStats& stats, const Meta& meta);
void write_stats_test_csv(std::ostream& out, const std::string& label_a, const std::string& label_b,
                          std::span<const double> a, std::span<const double> b, const MannWhitneyResult& r,
                          const Meta& meta);

std::string format_double(double v);

}  // namespace voxlab
