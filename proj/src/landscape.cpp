#include "voxlab/landscape.hpp"

#include <cmath>
#include <limits>

#include "voxlab/errors.hpp"

namespace voxlab {

const char* to_string(RecordSource source) noexcept {
    return source == RecordSource::Mapping ? "mapping" : "coopt_update";
}

const LandscapeRecord* Landscape::find(MorphologyId id) const {
    auto it = records_.find(id);
    return it == records_.end() ? nullptr : &it->second;
}

std::optional<double> Landscape::fitness(MorphologyId id) const {
    if (const auto* r = find(id)) return r->best_fitness;
    return std::nullopt;
}

void Landscape::put(LandscapeRecord record) {
    if (record.id.value >= grid_.id_count())
        throw DomainError("morphology id " + std::to_string(record.id.value) + " outside the " + to_string(grid_) +
                          " space");
    if (!std::isfinite(record.best_fitness)) throw DomainError("landscape fitness must be finite");
    const MorphologyId id = record.id;
    records_.insert_or_assign(id, std::move(record));
}

bool Landscape::offer(LandscapeRecord record) {
    auto it = records_.find(record.id);
    if (it != records_.end() && !(record.best_fitness > it->second.best_fitness)) return false;
    put(std::move(record));
    return true;
}

bool Landscape::complete(const MorphologySpace& space) const {
    if (!(space.shape() == grid_)) return false;
    for (const auto id : space.viable_ids())
        if (!records_.contains(id)) return false;
    return true;
}

std::size_t merge_update(Landscape& landscape, const Landscape& discoveries) {
    if (!(landscape.grid() == discoveries.grid()))
        throw ConfigMismatch("cannot merge a " + to_string(discoveries.grid()) + " landscape into a " +
                             to_string(landscape.grid()) + " one");
    if (landscape.task_hash() != discoveries.task_hash())
        throw ConfigMismatch("task configuration hashes differ; fitness values are not comparable");
    std::size_t improved = 0;
    for (const auto& [id, record] : discoveries.records()) {
        const bool existed = landscape.find(id) != nullptr;
        if (landscape.offer(record) && existed) ++improved;
    }
    return improved;
}

LandscapeView::LandscapeView(const MorphologySpace& space, const Landscape& landscape) : space_(&space) {
    if (!(space.shape() == landscape.grid())) throw DomainError("landscape grid does not match the space");
    fitness_.assign(space.id_count(), std::numeric_limits<double>::quiet_NaN());
    std::size_t missing = 0;
    for (const auto id : space.viable_ids()) {
        if (const auto f = landscape.fitness(id))
            fitness_[id.value] = *f;
        else
            ++missing;
    }
    if (missing > 0)
        throw DomainError("landscape is incomplete: " + std::to_string(missing) + " of " +
                          std::to_string(space.viable_count()) + " viable morphologies have no record");
    scan();
}

LandscapeView::LandscapeView(const MorphologySpace& space, std::vector<double> fitness_by_id)
    : space_(&space), fitness_(std::move(fitness_by_id)) {
    if (fitness_.size() != space.id_count()) throw DomainError("dense fitness must cover the whole id space");
    for (const auto id : space.viable_ids())
        if (!std::isfinite(fitness_[id.value])) throw DomainError("landscape fitness must be finite");
    scan();
}

void LandscapeView::scan() {
    const auto& ids = space_->viable_ids();
    if (ids.empty()) throw DomainError("space has no viable morphologies");
    max_id_ = min_id_ = ids.front();
    for (const auto id : ids) {
        if (fitness(id) > fitness(max_id_)) max_id_ = id;
        if (fitness(id) < fitness(min_id_)) min_id_ = id;
    }
}

bool is_local_max(const LandscapeView& view, MorphologyId id) {
    const double f = view.fitness(id);
    bool top = true;
    view.space().for_each_neighbor(id, [&](MorphologyId n) {
        if (view.fitness(n) > f) top = false;
    });
    return top;
}

std::vector<MorphologyId> local_maxima(const LandscapeView& view) {
    std::vector<MorphologyId> out;
    for (const auto id : view.space().viable_ids())
        if (is_local_max(view, id)) out.push_back(id);
    return out;
}

BasinResult hill_climb_basin(MorphologyId start, const LandscapeView& view) {
    if (!view.space().viable(start)) throw DomainError("hill climb from a non-viable morphology");
    BasinResult r{start, 0};
    for (;;) {
        const double here = view.fitness(r.peak);
        std::optional<MorphologyId> best;
        double best_f = here;
        view.space().for_each_neighbor(r.peak, [&](MorphologyId n) {
            const double f = view.fitness(n);
            if (f > best_f || (best && f == best_f && n < *best)) {
                best = n;
                best_f = f;
            }
        });
        if (!best) return r;
        r.peak = *best;
        ++r.steps;
    }
}

double near_optimal_threshold(double global_max, double global_min, double fraction) {
    if (!(global_max >= global_min)) throw DomainError("global max below global min");
    if (fraction <= 0.0) return global_max;
    if (fraction >= 1.0) return global_min;
    return (global_max - global_min) * (1.0 - fraction) + global_min;
}

double near_optimal_threshold(const LandscapeView& view, NearOptimalityConfig config) {
    return near_optimal_threshold(view.max_fitness(), view.min_fitness(), config.fraction);
}

std::vector<MorphologyId> near_optimal_set(const LandscapeView& view, NearOptimalityConfig config) {
    const double t = near_optimal_threshold(view, config);
    std::vector<MorphologyId> out;
    for (const auto id : view.space().viable_ids())
        if (view.fitness(id) >= t) out.push_back(id);
    return out;
}

std::vector<std::int32_t> distance_to_set(const MorphologySpace& space, const std::vector<MorphologyId>& targets,
                                          DistanceMetric metric) {
    if (metric == DistanceMetric::Graph) return space.bfs_distances(targets);
    std::vector<std::int32_t> dist(space.id_count(), -1);
    std::vector<MorphologyGenome> genomes;
    genomes.reserve(targets.size());
    for (const auto t : targets) genomes.push_back(decode(t, space.shape()));
    for (const auto id : space.viable_ids()) {
        if (genomes.empty()) break;
        const auto g = decode(id, space.shape());
        int best = std::numeric_limits<int>::max();
        for (const auto& t : genomes) best = std::min(best, hamming_distance(g, t));
        dist[id.value] = best;
    }
    return dist;
}

RuggednessStats ruggedness_stats(const LandscapeView& view, NearOptimalityConfig config, DistanceMetric metric) {
    const MorphologySpace& space = view.space();
    RuggednessStats s;
    const auto maxima = local_maxima(view);
    s.threshold = near_optimal_threshold(view, config);
    s.global_max = view.global_max();
    std::vector<MorphologyId> good;
    for (const auto id : maxima)
        if (view.fitness(id) >= s.threshold) good.push_back(id);
    s.local_max_count = maxima.size();
    s.near_optimal_local_max_count = good.size();
    s.morphologies = space.viable_count();

    const auto d_local = distance_to_set(space, maxima, metric);
    const auto d_global = distance_to_set(space, {s.global_max}, metric);
    const auto d_good = distance_to_set(space, good, metric);
    double a = 0.0, b = 0.0, c = 0.0;
    std::size_t na = 0, nb = 0, nc = 0;
    for (const auto id : space.viable_ids()) {
        const auto i = id.value;
        if (d_local[i] >= 0) { a += d_local[i]; ++na; }
        if (d_global[i] >= 0) { b += d_global[i]; ++nb; }
        if (d_good[i] >= 0) { c += d_good[i]; ++nc; }
        if (d_local[i] < 0 || d_global[i] < 0 || d_good[i] < 0) ++s.unreachable;
    }
    s.mean_to_local_max = na ? a / static_cast<double>(na) : 0.0;
    s.mean_to_global_max = nb ? b / static_cast<double>(nb) : 0.0;
    s.mean_to_near_optimal_local_max = nc ? c / static_cast<double>(nc) : 0.0;
    return s;
}

}  // namespace voxlab
