#include "voxlab/evolution.hpp"

#include <algorithm>
#include <iterator>
#include <set>

#include "voxlab/errors.hpp"
#include "voxlab/parallel.hpp"

namespace voxlab {

const char* to_string(MutationKind kind) noexcept {
    switch (kind) {
        case MutationKind::Body: return "body";
        case MutationKind::Brain: return "brain";
        case MutationKind::None: return "none";
    }
    return "none";
}

const char* to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::OffspringCreated: return "offspring_created";
        case EventKind::Survived: return "survived";
        case EventKind::Eliminated: return "eliminated";
        case EventKind::NicheReplaced: return "niche_replaced";
        case EventKind::Injected: return "injected";
    }
    return "?";
}

MutationKind parse_mutation_kind(const std::string& text) {
    if (text == "body") return MutationKind::Body;
    if (text == "brain") return MutationKind::Brain;
    if (text == "none") return MutationKind::None;
    throw DomainError("unknown mutation kind '" + text + "'");
}

EventKind parse_event_kind(const std::string& text) {
    for (auto k : {EventKind::OffspringCreated, EventKind::Survived, EventKind::Eliminated, EventKind::NicheReplaced,
                   EventKind::Injected})
        if (text == to_string(k)) return k;
    throw DomainError("unknown event kind '" + text + "'");
}

Niche niche_of(const MorphologyGenome& genome) noexcept {
    return {genome.active_count(), genome.passive_count()};
}

std::vector<Niche> feasible_niches(GridShape grid) {
    std::set<Niche> seen;
    for (const auto id : enumerate_viable(grid)) seen.insert(niche_of(decode(id, grid)));
    return {seen.begin(), seen.end()};
}

EvolutionEvent make_event(int generation, EventKind kind, const Individual& ind, MutationKind mutation,
                          std::optional<std::uint64_t> parent_id, std::optional<std::uint64_t> parent_lineage) {
    EvolutionEvent e;
    e.generation = generation;
    e.kind = kind;
    e.individual_id = ind.id;
    e.parent_id = parent_id;
    e.parent_lineage = parent_lineage;
    e.lineage_id = ind.lineage_id;
    e.age = ind.age;
    e.mutation_kind = mutation;
    e.morphology_id = encode(ind.morphology);
    e.observed_fitness = ind.fitness.value_or(0.0);
    return e;
}

// ---------------------------------------------------------------------------
// Evaluators

PhysicsEvaluator::PhysicsEvaluator(TaskConfig task, std::size_t cache_capacity)
    : task_(std::move(task)), capacity_(std::max<std::size_t>(cache_capacity, 1)) {
    task_.validate();
}

std::shared_ptr<const RobotBody> PhysicsEvaluator::start_pose(const MorphologyGenome& genome) const {
    const MorphologyId key = encode(genome);
    {
        const std::lock_guard lock(mu_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    std::shared_ptr<const RobotBody> body;
    try {
        body = std::make_shared<const RobotBody>(settled_robot(genome, task_));
    } catch (const SimulationFault&) {
        return nullptr;
    }
    const std::lock_guard lock(mu_);
    if (cache_.size() >= capacity_) cache_.clear();
    cache_.emplace(key, body);
    return body;
}

double PhysicsEvaluator::evaluate(const Individual& individual) const {
    {
        const std::lock_guard lock(mu_);
        ++evaluations_;
    }
    auto start = start_pose(individual.morphology);
    if (!start) return voxlab::evaluate(individual.morphology, individual.controller, task_).fitness;
    return voxlab::evaluate(*start, individual.controller, task_).fitness;
}

std::uint64_t PhysicsEvaluator::evaluations() const noexcept {
    const std::lock_guard lock(mu_);
    return evaluations_;
}

double OracleEvaluator::evaluate(const Individual& individual) const {
    const MorphologyId id = encode(individual.morphology);
    const auto value = lookup_(id);
    if (!value)
        throw DomainError("fitness oracle has no entry for morphology " + std::to_string(id.value) + " (" +
                          individual.morphology.to_string() + ")");
    return *value;
}

void evaluate_all(std::span<Individual> individuals, const FitnessEvaluator& evaluator, int workers) {
    parallel_for(individuals.size(), workers, [&](std::size_t i) {
        if (!individuals[i].fitness) individuals[i].fitness = evaluator.evaluate(individuals[i]);
    });
}

// ---------------------------------------------------------------------------
// Pareto selection

namespace {

bool dominates(const Individual& a, const Individual& b) {
    const double fa = *a.fitness;
    const double fb = *b.fitness;
    return a.age <= b.age && fa >= fb && (a.age < b.age || fa > fb);
}

}  // namespace

std::vector<int> pareto_ranks(std::span<const Individual> pool) {
    for (const auto& ind : pool)
        if (!ind.fitness) throw DomainError("pareto ranking requires evaluated individuals");
    const std::size_t n = pool.size();
    std::vector<int> rank(n, -1);
    std::size_t assigned = 0;
    for (int front = 0; assigned < n; ++front) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (rank[i] >= 0) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j)
                if (j != i && rank[j] < 0 && dominates(pool[j], pool[i])) dominated = true;
            if (!dominated) members.push_back(i);
        }
        for (const auto i : members) rank[i] = front;
        assigned += members.size();
    }
    return rank;
}

std::vector<std::size_t> afpo_select(std::span<const Individual> pool, std::size_t keep) {
    const auto rank = pareto_ranks(pool);
    std::vector<std::size_t> order(pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = pool[a];
        const auto& y = pool[b];
        if (rank[a] != rank[b]) return rank[a] < rank[b];
        if (*x.fitness != *y.fitness) return *x.fitness > *y.fitness;
        if (x.age != y.age) return x.age < y.age;
        if (x.lineage_id != y.lineage_id) return x.lineage_id < y.lineage_id;
        return x.id < y.id;
    });
    order.resize(std::min(keep, order.size()));
    std::sort(order.begin(), order.end());
    return order;
}

// ---------------------------------------------------------------------------
// AFPO

Afpo::Afpo(AfpoMode mode, EvolutionConfig config, const FitnessEvaluator& evaluator)
    : mode_(mode), config_(std::move(config)), evaluator_(&evaluator) {
    if (config_.pop_size < 1) throw DomainError("pop_size must be >= 1");
    if (mode_ == AfpoMode::ControllerOnly && !config_.fixed_morphology)
        throw DomainError("controller-only AFPO needs a fixed morphology");
    if (mode_ == AfpoMode::MorphologyOnly && evaluator.uses_physics())
        throw DomainError("morphology-only AFPO must use a fitness oracle");
    if (config_.fixed_morphology && !is_viable(*config_.fixed_morphology))
        throw DomainError("fixed morphology is not viable");
}

double Afpo::p_body() const noexcept {
    switch (mode_) {
        case AfpoMode::ControllerOnly: return 0.0;
        case AfpoMode::MorphologyOnly: return 1.0;
        case AfpoMode::BrainBody: break;
    }
    return config_.p_body;
}

Individual Afpo::random_individual(Rng& rng, IdCounters& ids) const {
    Individual ind;
    ind.id = ids.next_individual++;
    ind.lineage_id = ids.next_lineage++;
    ind.age = 0;
    ind.morphology = mode_ == AfpoMode::ControllerOnly ? *config_.fixed_morphology
                                                       : random_viable_morphology(config_.grid, rng);
    // Morphology-only runs never look at the controller.
    if (mode_ != AfpoMode::MorphologyOnly)
        ind.controller = random_controller(NetworkShape::for_grid(config_.grid), rng, config_.init_stddev);
    return ind;
}

GenerationResult Afpo::initialize(Rng& rng, IdCounters& ids, std::vector<Individual>& population) const {
    population.clear();
    for (int i = 0; i < config_.pop_size; ++i) population.push_back(random_individual(rng, ids));
    evaluate_all(population, *evaluator_, config_.workers);

    GenerationResult out;
    for (const auto& ind : population) out.events.push_back(make_event(0, EventKind::Injected, ind, MutationKind::None));
    for (const auto& ind : population) out.events.push_back(make_event(0, EventKind::Survived, ind, MutationKind::None));
    out.evaluated = population;
    return out;
}

GenerationResult Afpo::generation(int index, Rng& rng, IdCounters& ids, std::vector<Individual>& population) const {
    for (const auto& ind : population)
        if (!ind.fitness) throw DomainError("AFPO generation requires an evaluated population");

    const double pb = p_body();
    std::bernoulli_distribution body_coin(pb);
    const std::size_t parents = population.size();

    std::vector<Individual> pool = population;
    std::vector<MutationKind> kinds;
    std::vector<std::uint64_t> parent_ids;
    for (std::size_t p = 0; p < parents; ++p) {
        const Individual& parent = population[p];
        Individual child;
        child.id = ids.next_individual++;
        child.lineage_id = parent.lineage_id;
        child.age = parent.age;
        const bool body = pb >= 1.0 ? true : pb <= 0.0 ? false : body_coin(rng);
        if (body) {
            child.morphology = mutate_morphology(parent.morphology, rng);
            child.controller = parent.controller;
        } else {
            child.morphology = parent.morphology;
            child.controller = mutate_controller(parent.controller, config_.sigma, rng);
        }
        kinds.push_back(body ? MutationKind::Body : MutationKind::Brain);
        parent_ids.push_back(parent.id);
        pool.push_back(std::move(child));
    }
    pool.push_back(random_individual(rng, ids));

    evaluate_all(std::span<Individual>(pool).subspan(parents), *evaluator_, config_.workers);

    // Everything already alive ages by one generation; the newcomer stays 0.
    for (std::size_t i = 0; i + 1 < pool.size(); ++i) ++pool[i].age;

    GenerationResult out;
    for (std::size_t k = 0; k < parents; ++k) {
        const auto& child = pool[parents + k];
        out.events.push_back(make_event(index, EventKind::OffspringCreated, child, kinds[k], parent_ids[k], child.lineage_id));
    }
    out.events.push_back(make_event(index, EventKind::Injected, pool.back(), MutationKind::None));

    const auto keep = afpo_select(pool, static_cast<std::size_t>(config_.pop_size));
    std::vector<bool> kept(pool.size(), false);
    for (const auto i : keep) kept[i] = true;
    for (std::size_t i = 0; i < pool.size(); ++i) {
        const MutationKind mk = i < parents ? MutationKind::None : i + 1 == pool.size() ? MutationKind::None : kinds[i - parents];
        out.events.push_back(make_event(index, kept[i] ? EventKind::Survived : EventKind::Eliminated, pool[i], mk));
    }

    out.evaluated.assign(pool.begin() + static_cast<std::ptrdiff_t>(parents), pool.end());
    std::vector<Individual> next;
    next.reserve(keep.size());
    for (const auto i : keep) next.push_back(std::move(pool[i]));
    population = std::move(next);
    return out;
}

// ---------------------------------------------------------------------------
// MAP-Elites

MapElites::MapElites(EvolutionConfig config, const FitnessEvaluator& evaluator)
    : config_(std::move(config)), evaluator_(&evaluator) {
    if (config_.batch_size < 1) throw DomainError("batch_size must be >= 1");
}

void MapElites::insert(Archive& archive, std::span<const Individual> candidates, int generation,
                       std::vector<EvolutionEvent>& events) {
    for (const auto& ind : candidates) {
        const Niche niche = niche_of(ind.morphology);
        auto it = archive.find(niche);
        if (it == archive.end() || *ind.fitness > *it->second.fitness) {
            EvolutionEvent e = make_event(generation, EventKind::NicheReplaced, ind, MutationKind::None);
            e.extra = it == archive.end() ? "displaced=none" : "displaced=" + std::to_string(it->second.id);
            events.push_back(std::move(e));
            archive.insert_or_assign(niche, ind);
        } else {
            events.push_back(make_event(generation, EventKind::Eliminated, ind, MutationKind::None));
        }
    }
}

GenerationResult MapElites::initialize(Rng& rng, IdCounters& ids, Archive& archive) const {
    archive.clear();
    std::vector<Individual> batch;
    for (int i = 0; i < config_.batch_size; ++i) {
        Individual ind;
        ind.id = ids.next_individual++;
        ind.lineage_id = ids.next_lineage++;
        ind.morphology = random_viable_morphology(config_.grid, rng);
        ind.controller = random_controller(NetworkShape::for_grid(config_.grid), rng, config_.init_stddev);
        batch.push_back(std::move(ind));
    }
    evaluate_all(batch, *evaluator_, config_.workers);

    GenerationResult out;
    for (const auto& ind : batch) out.events.push_back(make_event(0, EventKind::Injected, ind, MutationKind::None));
    insert(archive, batch, 0, out.events);
    out.evaluated = std::move(batch);
    return out;
}

GenerationResult MapElites::generation(int index, Rng& rng, IdCounters& ids, Archive& archive) const {
    if (archive.empty()) throw DomainError("MAP-Elites generation on an empty archive");
    std::vector<const Individual*> elites;
    for (const auto& [niche, elite] : archive) elites.push_back(&elite);

    std::uniform_int_distribution<std::size_t> pick(0, elites.size() - 1);
    std::bernoulli_distribution body_coin(config_.p_body);
    std::vector<Individual> batch;
    std::vector<MutationKind> kinds;
    std::vector<std::uint64_t> parent_ids;
    for (int k = 0; k < config_.batch_size; ++k) {
        const Individual& parent = *elites[pick(rng)];
        Individual child;
        child.id = ids.next_individual++;
        child.lineage_id = parent.lineage_id;
        child.age = parent.age + 1;
        const bool body = body_coin(rng);
        if (body) {
            child.morphology = mutate_morphology(parent.morphology, rng);
            child.controller = parent.controller;
        } else {
            child.morphology = parent.morphology;
            child.controller = mutate_controller(parent.controller, config_.sigma, rng);
        }
        kinds.push_back(body ? MutationKind::Body : MutationKind::Brain);
        parent_ids.push_back(parent.id);
        batch.push_back(std::move(child));
    }
    evaluate_all(batch, *evaluator_, config_.workers);

    GenerationResult out;
    for (std::size_t k = 0; k < batch.size(); ++k)
        out.events.push_back(make_event(index, EventKind::OffspringCreated, batch[k], kinds[k], parent_ids[k],
                                        batch[k].lineage_id));
    insert(archive, batch, index, out.events);
    out.evaluated = std::move(batch);
    return out;
}

// ---------------------------------------------------------------------------

ControllerSearchResult controller_search(const MorphologyGenome& genome, int budget, const EvolutionConfig& config,
                                         const TaskConfig& task, Rng& rng) {
    if (!is_viable(genome)) throw DomainError("controller search on non-viable morphology " + genome.to_string());
    if (budget < 0) throw DomainError("budget must be >= 0");
    EvolutionConfig cfg = config;
    cfg.grid = genome.shape();
    cfg.fixed_morphology = genome;
    const PhysicsEvaluator evaluator(task, 1);
    const Afpo afpo(AfpoMode::ControllerOnly, cfg, evaluator);

    IdCounters ids;
    std::vector<Individual> population;
    ControllerSearchResult result;
    auto track = [&](const GenerationResult& gen) {
        result.evaluations += gen.evaluated.size();
        for (const auto& ind : gen.evaluated) {
            if (result.best_controller.empty() || *ind.fitness > result.best_fitness) {
                result.best_fitness = *ind.fitness;
                result.best_controller = ind.controller;
            }
        }
        result.trace.push_back(result.best_fitness);
    };
    track(afpo.initialize(rng, ids, population));
    for (int g = 1; g <= budget; ++g) track(afpo.generation(g, rng, ids, population));
    return result;
}

}  // namespace voxlab
