#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "voxlab/morphology.hpp"
#include "voxlab/physics.hpp"
#include "voxlab/rng.hpp"

namespace voxlab {

inline constexpr int kHiddenUnits = 32;

// Layer sizes of the one-hidden-layer network for a grid. For 3x3:
// 34 inputs (16 relative corner positions + COM velocity), 32 hidden, 9 outputs.
struct NetworkShape {
    int inputs = 0;
    int hidden = kHiddenUnits;
    int outputs = 0;

    static NetworkShape for_grid(GridShape grid) noexcept {
        return {2 * grid.corners() + 2, kHiddenUnits, grid.cells()};
    }
    constexpr std::size_t parameter_count() const noexcept {
        return static_cast<std::size_t>(inputs * hidden + hidden + hidden * outputs + outputs);
    }

    friend constexpr bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

static_assert(NetworkShape{34, 32, 9}.parameter_count() == 1417);

// Flat parameter vector laid out as input->hidden weights [input][hidden],
// hidden biases, hidden->output weights [hidden][output], output biases.
class ControllerGenome {
public:
    ControllerGenome() = default;
    // Zero parameters.
    explicit ControllerGenome(NetworkShape shape);
    // Throws DomainError unless params.size() == parameter_count() and all finite.
    ControllerGenome(NetworkShape shape, std::vector<double> params);

    const NetworkShape& shape() const noexcept { return shape_; }
    std::span<const double> params() const noexcept { return params_; }
    std::size_t size() const noexcept { return params_.size(); }
    bool empty() const noexcept { return params_.empty(); }

    std::span<const double> input_weights() const noexcept;
    std::span<const double> hidden_biases() const noexcept;
    std::span<const double> output_weights() const noexcept;
    std::span<const double> output_biases() const noexcept;

    friend bool operator==(const ControllerGenome&, const ControllerGenome&) = default;

private:
    NetworkShape shape_;
    std::vector<double> params_;
};

using Observation = std::vector<double>;
using ActionVector = std::vector<double>;

// Relative corner positions in corner-lattice order (zero for absent corners)
// followed by the COM velocity.
Observation observe(const RobotBody& body);

// hidden = tanh(W1 obs + b1); action = 0.6 + 0.5 (tanh(W2 hidden + b2) + 1).
ActionVector act(const ControllerGenome& params, std::span<const double> obs);

// Multipliers keyed by grid cell, only for active voxels.
std::map<int, double> decode_actions(std::span<const double> actions, const MorphologyGenome& genome);

ControllerGenome random_controller(NetworkShape shape, Rng& rng, double stddev = 0.1);
ControllerGenome mutate_controller(const ControllerGenome& params, double sigma, Rng& rng);

// u64 count followed by little-endian f64 values.
void write_controller(std::ostream& out, const ControllerGenome& params);
ControllerGenome read_controller(std::istream& in, NetworkShape shape);

}  // namespace voxlab
