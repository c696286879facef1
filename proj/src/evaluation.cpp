#include "voxlab/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <iostream>
#include <mutex>

#include "voxlab/errors.hpp"

namespace voxlab {

namespace {

std::atomic<std::uint64_t> g_faults{0};

void log_fault(const std::string& what, const SimulationFault& fault) {
    static std::mutex mu;
    const std::lock_guard lock(mu);
    std::cerr << "warning: simulation fault for morphology " << what << ": " << fault.what() << '\n';
}

void log_fault(const MorphologyGenome& genome, const SimulationFault& fault) { log_fault(genome.to_string(), fault); }

void log_fault(const RobotBody& body, const SimulationFault& fault) {
    log_fault(MorphologyGenome(body.shape, body.cells).to_string(), fault);
}

}  // namespace

void TaskConfig::validate() const {
    if (!(target_distance > 0.0)) throw DomainError("target_distance must be positive");
    if (episode_control_steps < 1) throw DomainError("episode_control_steps must be >= 1");
    if (step_penalty > 0.0) throw DomainError("step_penalty must be <= 0");
    if (settle_steps < 0) throw DomainError("settle_steps must be >= 0");
    sim.validate();
}

RobotBody settled_robot(const MorphologyGenome& genome, const TaskConfig& task) {
    task.validate();
    RobotBody body = build_robot(genome, task.sim);
    for (int i = 0; i < task.settle_steps; ++i) step(body, task.sim);
    double min_x = body.masses.front().position.x;
    for (const auto& m : body.masses) min_x = std::min(min_x, m.position.x);
    for (auto& m : body.masses) {
        m.position.x -= min_x;
        m.velocity = {};
    }
    body.step_count = 0;
    return body;
}

FitnessResult evaluate(const MorphologyGenome& genome, const ControllerGenome& params, const TaskConfig& task,
                       std::ostream* trajectory) {
    RobotBody start;
    try {
        start = settled_robot(genome, task);
    } catch (const SimulationFault& fault) {
        g_faults.fetch_add(1, std::memory_order_relaxed);
        log_fault(genome, fault);
        FitnessResult result;
        result.fitness = task.penalty_floor();
        result.faulted = true;
        return result;
    }
    return evaluate(start, params, task, trajectory);
}

FitnessResult evaluate(const RobotBody& start, const ControllerGenome& params, const TaskConfig& task,
                       std::ostream* trajectory) {
    task.validate();
    if (params.shape() != NetworkShape::for_grid(start.shape))
        throw DomainError("controller shape does not match the morphology grid");

    RobotBody body = start;
    const double start_x = center_of_mass(body).x;
    std::optional<TrajectoryWriter> writer;
    if (trajectory) writer.emplace(*trajectory, body.n());

    FitnessResult result;
    double penalties = 0.0;
    try {
        for (int control_step = 0; control_step < task.episode_control_steps; ++control_step) {
            if (writer) writer->write(body.step_count, body);
            const double displacement = center_of_mass(body).x - start_x;
            if (displacement >= task.target_distance) {
                result.reached_target = true;
                result.steps_to_target = control_step;
                break;
            }
            penalties += task.step_penalty;
            const ActionVector actions = act(params, observe(body));
            step(body, task.sim, actions);
            for (int k = 1; k < task.sim.control_period; ++k) step(body, task.sim);
        }
    } catch (const SimulationFault& fault) {
        g_faults.fetch_add(1, std::memory_order_relaxed);
        log_fault(body, fault);
        result = FitnessResult{};
        result.fitness = task.penalty_floor();
        result.faulted = true;
        return result;
    }

    result.final_displacement = center_of_mass(body).x - start_x;
    if (!result.reached_target && result.final_displacement >= task.target_distance) {
        result.reached_target = true;
        result.steps_to_target = task.episode_control_steps;
    }
    if (writer && !result.steps_to_target) writer->write(body.step_count, body);
    result.fitness = std::min(result.final_displacement, task.target_distance) + penalties;
    return result;
}

std::uint64_t simulation_fault_count() noexcept { return g_faults.load(std::memory_order_relaxed); }

}  // namespace voxlab
