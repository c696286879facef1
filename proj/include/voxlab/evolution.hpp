#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "voxlab/controller.hpp"
#include "voxlab/evaluation.hpp"
#include "voxlab/morphology.hpp"
#include "voxlab/rng.hpp"

namespace voxlab {

enum class MutationKind : std::uint8_t { Body, Brain, None };
enum class EventKind : std::uint8_t { OffspringCreated, Survived, Eliminated, NicheReplaced, Injected };

const char* to_string(MutationKind kind) noexcept;
const char* to_string(EventKind kind) noexcept;
MutationKind parse_mutation_kind(const std::string& text);
EventKind parse_event_kind(const std::string& text);

struct Individual {
    std::uint64_t id = 0;
    MorphologyGenome morphology;
    ControllerGenome controller;
    int age = 0;
    std::optional<double> fitness;
    std::uint64_t lineage_id = 0;
};

struct EvolutionEvent {
    int generation = 0;
    EventKind kind = EventKind::OffspringCreated;
    std::uint64_t individual_id = 0;
    std::optional<std::uint64_t> parent_id;
    std::optional<std::uint64_t> parent_lineage;
    std::uint64_t lineage_id = 0;
    int age = 0;
    MutationKind mutation_kind = MutationKind::None;
    MorphologyId morphology_id;
    double observed_fitness = 0.0;
    // Free-form "key=value;key=value" metadata.
    std::string extra;

    friend bool operator==(const EvolutionEvent&, const EvolutionEvent&) = default;
};

// (active voxel count, passive voxel count) bin of the MAP-Elites archive.
struct Niche {
    int active_count = 0;
    int passive_count = 0;

    friend constexpr auto operator<=>(const Niche&, const Niche&) = default;
};

Niche niche_of(const MorphologyGenome& genome) noexcept;
// All (active, passive) pairs reachable by some viable genome of the grid.
std::vector<Niche> feasible_niches(GridShape grid);

// Fitness source for individuals; implementations are thread-safe.
class FitnessEvaluator {
public:
    virtual ~FitnessEvaluator() = default;
    virtual double evaluate(const Individual& individual) const = 0;
    virtual bool uses_physics() const noexcept = 0;
};

// Simulates episodes. Settled start poses are cached per morphology.
class PhysicsEvaluator final : public FitnessEvaluator {
public:
    explicit PhysicsEvaluator(TaskConfig task, std::size_t cache_capacity = 4096);

    double evaluate(const Individual& individual) const override;
    bool uses_physics() const noexcept override { return true; }
    const TaskConfig& task() const noexcept { return task_; }
    std::uint64_t evaluations() const noexcept;

private:
    std::shared_ptr<const RobotBody> start_pose(const MorphologyGenome& genome) const;

    TaskConfig task_;
    std::size_t capacity_;
    mutable std::mutex mu_;
    mutable std::unordered_map<MorphologyId, std::shared_ptr<const RobotBody>> cache_;
    mutable std::uint64_t evaluations_ = 0;
};

// Looks up a precomputed morphology fitness; never simulates. A missing
// morphology is a hard error.
class OracleEvaluator final : public FitnessEvaluator {
public:
    using Lookup = std::function<std::optional<double>(MorphologyId)>;
    explicit OracleEvaluator(Lookup lookup) : lookup_(std::move(lookup)) {}

    double evaluate(const Individual& individual) const override;
    bool uses_physics() const noexcept override { return false; }

private:
    Lookup lookup_;
};

// Evaluates every individual without a fitness, spreading the work over
// `workers` threads. Results do not depend on the worker count.
void evaluate_all(std::span<Individual> individuals, const FitnessEvaluator& evaluator, int workers);

enum class AfpoMode { ControllerOnly, BrainBody, MorphologyOnly };

struct EvolutionConfig {
    GridShape grid = kGrid3x3;
    int pop_size = 20;
    // Probability of a body mutation in brain-body modes; forced to 0 for
    // controller-only and 1 for morphology-only AFPO.
    double p_body = 0.5;
    double sigma = 0.1;
    double init_stddev = 0.1;
    // MAP-Elites offspring per generation.
    int batch_size = 20;
    int workers = 1;
    // Morphology used by controller-only search.
    std::optional<MorphologyGenome> fixed_morphology;
};

// Pareto selection on (minimize age, maximize fitness): whole fronts are
// admitted in order, the last admitted front is truncated by higher
// fitness, then lower age, then lower lineage id, then lower individual id.
// Returns indices into `pool`, in pool order.
std::vector<std::size_t> afpo_select(std::span<const Individual> pool, std::size_t keep);

// Non-dominated front rank (0 = first front) of each pool member.
std::vector<int> pareto_ranks(std::span<const Individual> pool);

// Individual ids and lineages are drawn from shared counters so that a run
// can assign unique ids across initialization and generations.
struct IdCounters {
    std::uint64_t next_individual = 0;
    std::uint64_t next_lineage = 0;
};

struct GenerationResult {
    std::vector<EvolutionEvent> events;
    // Every individual evaluated during the generation, in creation order.
    std::vector<Individual> evaluated;
};

class Afpo {
public:
    Afpo(AfpoMode mode, EvolutionConfig config, const FitnessEvaluator& evaluator);

    AfpoMode mode() const noexcept { return mode_; }
    double p_body() const noexcept;
    const EvolutionConfig& config() const noexcept { return config_; }

    // Random initial population at generation 0, all injected and evaluated.
    GenerationResult initialize(Rng& rng, IdCounters& ids, std::vector<Individual>& population) const;

    // One generation: offspring from every member, one random injection,
    // age increment, Pareto truncation back to pop_size.
    GenerationResult generation(int index, Rng& rng, IdCounters& ids, std::vector<Individual>& population) const;

private:
    Individual random_individual(Rng& rng, IdCounters& ids) const;

    AfpoMode mode_;
    EvolutionConfig config_;
    const FitnessEvaluator* evaluator_;
};

using Archive = std::map<Niche, Individual>;

class MapElites {
public:
    MapElites(EvolutionConfig config, const FitnessEvaluator& evaluator);

    const EvolutionConfig& config() const noexcept { return config_; }

    // batch_size random individuals inserted at generation 0.
    GenerationResult initialize(Rng& rng, IdCounters& ids, Archive& archive) const;

    // batch_size offspring of elites drawn uniformly from occupied niches;
    // an offspring replaces its niche's incumbent only if strictly fitter.
    GenerationResult generation(int index, Rng& rng, IdCounters& ids, Archive& archive) const;

    // Inserts evaluated individuals in order, appending one event each.
    static void insert(Archive& archive, std::span<const Individual> candidates, int generation,
                       std::vector<EvolutionEvent>& events);

private:
    EvolutionConfig config_;
    const FitnessEvaluator* evaluator_;
};

struct ControllerSearchResult {
    ControllerGenome best_controller;
    double best_fitness = 0.0;
    // Best-ever fitness after initialization (entry 0) and after each generation.
    std::vector<double> trace;
    std::uint64_t evaluations = 0;
};

// Controller-only AFPO on a fixed morphology for `budget` generations.
ControllerSearchResult controller_search(const MorphologyGenome& genome, int budget, const EvolutionConfig& config,
                                         const TaskConfig& task, Rng& rng);

EvolutionEvent make_event(int generation, EventKind kind, const Individual& ind, MutationKind mutation,
                          std::optional<std::uint64_t> parent_id = std::nullopt,
                          std::optional<std::uint64_t> parent_lineage = std::nullopt);

}  // namespace voxlab
