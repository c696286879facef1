#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>

#include "voxlab/controller.hpp"
#include "voxlab/morphology.hpp"
#include "voxlab/physics.hpp"

namespace voxlab {

struct TaskConfig {
    double target_distance = 5.0;
    int episode_control_steps = 100;
    double step_penalty = -0.05;
    // Passive simulation steps run before the episode so that bodies which
    // are not statically stable topple into their rest pose first.
    int settle_steps = 600;
    SimConfig sim;

    void validate() const;
    // Lowest fitness of a non-faulted episode that never moves.
    double penalty_floor() const noexcept { return episode_control_steps * step_penalty; }
};

struct FitnessResult {
    double fitness = 0.0;
    bool reached_target = false;
    std::optional<int> steps_to_target;
    double final_displacement = 0.0;
    bool faulted = false;
};

// Builds the robot and runs the passive settle phase. The settled body is
// translated so that its leftmost mass sits at x = 0 and its velocities are
// zeroed; it depends only on (genome, task).
RobotBody settled_robot(const MorphologyGenome& genome, const TaskConfig& task);

// One locomotion episode on flat ground; the target lies target_distance
// ahead (+x) of the starting COM. Faulted simulations score penalty_floor().
// `trajectory`, when given, receives one CSV row per control step.
FitnessResult evaluate(const MorphologyGenome& genome, const ControllerGenome& params, const TaskConfig& task,
                       std::ostream* trajectory = nullptr);

// Same episode from a body prepared by settled_robot(); lets callers that
// evaluate many controllers on one morphology settle it once.
FitnessResult evaluate(const RobotBody& start, const ControllerGenome& params, const TaskConfig& task,
                       std::ostream* trajectory = nullptr);

// Number of simulation faults seen by evaluate() in this process.
std::uint64_t simulation_fault_count() noexcept;

}  // namespace voxlab
