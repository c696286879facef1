#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "voxlab/morphology.hpp"

namespace voxlab {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr Vec2& operator+=(Vec2 o) noexcept { x += o.x; y += o.y; return *this; }
    constexpr Vec2& operator-=(Vec2 o) noexcept { x -= o.x; y -= o.y; return *this; }
    constexpr Vec2& operator*=(double s) noexcept { x *= s; y *= s; return *this; }
    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return {s * a.x, s * a.y}; }
    friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) noexcept { return std::hypot(a.x, a.y); }

struct SimConfig {
    double dt = 1.0 / 300.0;
    int control_period = 5;
    Vec2 gravity{0.0, -9.81};
    bool ground_contact = true;
    double ground_height = 0.0;
    double contact_stiffness = 5000.0;
    double contact_damping = 60.0;
    double friction_coefficient = 0.8;
    double stiffness_soft = 1000.0;
    double stiffness_rigid = 5000.0;
    double stiffness_active = 1000.0;
    double spring_damping = 5.0;
    double voxel_size = 1.0;
    double point_mass = 1.0;
    double max_velocity_clamp = 50.0;

    // Throws DomainError on out-of-range values.
    void validate() const;
};

inline constexpr double kMinActuation = 0.6;
inline constexpr double kMaxActuation = 1.6;

struct PointMass {
    int id = 0;
    Vec2 position;
    Vec2 velocity;
    double mass = 1.0;
};

enum class SpringKind : std::uint8_t { HorizontalEdge, VerticalEdge, Diagonal };

struct Spring {
    std::array<int, 2> endpoints{};
    double rest_length_base = 1.0;
    double stiffness = 1.0;
    double damping = 0.0;
    SpringKind kind = SpringKind::HorizontalEdge;
    // Grid cells whose actuation drives this spring.
    std::array<int, 2> actuation_sources{-1, -1};
    int source_count = 0;
    // Owning cell for diagonals, -1 for edges.
    int owner_cell = -1;

    std::span<const int> sources() const noexcept {
        return {actuation_sources.data(), static_cast<std::size_t>(source_count)};
    }
};

// Point masses and springs of one robot plus its mutable simulation state.
struct RobotBody {
    GridShape shape;
    std::vector<VoxelType> cells;
    std::vector<PointMass> masses;
    std::vector<Spring> springs;
    // Per cell: mass ids of its (top-left, top-right, bottom-left, bottom-right)
    // corners, all -1 for empty cells.
    std::vector<std::array<int, 4>> voxel_map;
    // Per cell: spring ids of its (top, bottom, left, right) edges.
    std::vector<std::array<int, 4>> voxel_edges;
    // Per corner-lattice site (row-major, row 0 on top): mass id or -1.
    std::vector<int> corner_mass;

    // Current actuation multiplier per cell (1 = relaxed) and the resulting
    // per-spring rest lengths.
    std::vector<double> multipliers;
    std::vector<double> rest_lengths;
    std::int64_t step_count = 0;

    int n() const noexcept { return static_cast<int>(masses.size()); }
};

enum class Viability { Required, Relaxed };

// Corners shared between voxels are merged, as are shared edge springs.
// The body starts at rest on the ground with its leftmost corner at x = 0.
RobotBody build_robot(const MorphologyGenome& genome, const SimConfig& config,
                      Viability viability = Viability::Required);

// Stores per-cell multipliers for active voxels; other entries are ignored.
// `actions` is indexed by grid cell. Throws DomainError outside [0.6, 1.6].
void apply_actions(RobotBody& body, std::span<const double> actions);

// Recomputes rest lengths from the current multipliers.
void update_rest_lengths(RobotBody& body, const SimConfig& config);

// One semi-implicit Euler step. Non-empty `actions` are applied first.
// Throws SimulationFault on non-finite state.
void step(RobotBody& body, const SimConfig& config, std::span<const double> actions = {});

Vec2 center_of_mass(const RobotBody& body);
Vec2 com_velocity(const RobotBody& body);
Vec2 total_momentum(const RobotBody& body);

// Sum of pairwise spring forces on all masses; zero up to rounding.
Vec2 net_spring_force(const RobotBody& body);

struct EnergyBreakdown {
    double kinetic = 0.0;
    double gravitational = 0.0;
    double elastic = 0.0;
    double contact = 0.0;

    double total() const noexcept { return kinetic + gravitational + elastic + contact; }
};

EnergyBreakdown mechanical_energy(const RobotBody& body, const SimConfig& config);

// Energy as seen by the integrator: 1/2 m v_n . v_{n+1} + U(x_n), where
// v_{n+1} is the velocity the next step would produce. Semi-implicit Euler
// conserves this exactly for linear conservative forces, so with damping
// and no actuation it never increases; the continuous energy above instead
// oscillates by O(k dt^2 v^2) per step.
double discrete_energy(const RobotBody& body, const SimConfig& config);

// CSV trajectory dump, one row per control step:
// step,com_x,com_y,com_vx,com_vy,x0,y0,...,x{n-1},y{n-1}
// Floats use 9 significant digits.
class TrajectoryWriter {
public:
    TrajectoryWriter(std::ostream& out, int mass_count);
    void write(std::int64_t step_index, const RobotBody& body);

private:
    std::ostream* out_;
    int mass_count_;
};

}  // namespace voxlab
