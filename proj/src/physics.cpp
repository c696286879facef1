#include "voxlab/physics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <ostream>
#include <utility>

#include "voxlab/errors.hpp"

namespace voxlab {

void SimConfig::validate() const {
    if (!(dt > 0.0)) throw DomainError("dt must be positive");
    if (control_period < 1) throw DomainError("control_period must be >= 1");
    if (!(stiffness_soft > 0.0 && stiffness_rigid > 0.0 && stiffness_active > 0.0))
        throw DomainError("stiffnesses must be positive");
    if (spring_damping < 0.0 || contact_damping < 0.0) throw DomainError("damping must be >= 0");
    if (!(contact_stiffness > 0.0)) throw DomainError("contact_stiffness must be positive");
    if (friction_coefficient < 0.0) throw DomainError("friction_coefficient must be >= 0");
    if (!(voxel_size > 0.0) || !(point_mass > 0.0)) throw DomainError("voxel_size and point_mass must be positive");
    if (!(max_velocity_clamp > 0.0)) throw DomainError("max_velocity_clamp must be positive");
}

namespace {

double material_stiffness(VoxelType t, const SimConfig& config) {
    switch (t) {
        case VoxelType::SoftPassive: return config.stiffness_soft;
        case VoxelType::RigidPassive: return config.stiffness_rigid;
        case VoxelType::ActiveHorizontal:
        case VoxelType::ActiveVertical: return config.stiffness_active;
        case VoxelType::Empty: break;
    }
    throw DomainError("empty voxel has no material");
}

}  // namespace

RobotBody build_robot(const MorphologyGenome& genome, const SimConfig& config, Viability viability) {
    config.validate();
    if (viability == Viability::Required && !is_viable(genome))
        throw DomainError("cannot build non-viable morphology " + genome.to_string());
    if (genome.filled_count() == 0) throw DomainError("cannot build an empty body");

    const GridShape shape = genome.shape();
    const int ccols = shape.corner_cols();
    const double vs = config.voxel_size;

    RobotBody body;
    body.shape = shape;
    body.cells.resize(static_cast<std::size_t>(shape.cells()));
    for (int i = 0; i < shape.cells(); ++i) body.cells[static_cast<std::size_t>(i)] = genome.at(i);
    body.corner_mass.assign(static_cast<std::size_t>(shape.corners()), -1);
    body.voxel_map.assign(static_cast<std::size_t>(shape.cells()), {-1, -1, -1, -1});
    body.voxel_edges.assign(static_cast<std::size_t>(shape.cells()), {-1, -1, -1, -1});
    body.multipliers.assign(static_cast<std::size_t>(shape.cells()), 1.0);

    auto site = [ccols](int r, int c) { return r * ccols + c; };

    // Masses in corner-lattice order.
    for (int r = 0; r < shape.corner_rows(); ++r) {
        for (int c = 0; c < ccols; ++c) {
            bool touched = false;
            for (int dr = -1; dr <= 0 && !touched; ++dr)
                for (int dc = -1; dc <= 0 && !touched; ++dc) {
                    const int cr = r + dr, cc = c + dc;
                    if (cr >= 0 && cr < shape.rows && cc >= 0 && cc < shape.cols &&
                        genome.at(cr, cc) != VoxelType::Empty)
                        touched = true;
                }
            if (!touched) continue;
            PointMass m;
            m.id = static_cast<int>(body.masses.size());
            m.position = {c * vs, (shape.rows - r) * vs};
            m.mass = config.point_mass;
            body.corner_mass[static_cast<std::size_t>(site(r, c))] = m.id;
            body.masses.push_back(m);
        }
    }
    double min_x = body.masses.front().position.x;
    double min_y = body.masses.front().position.y;
    for (const auto& m : body.masses) {
        min_x = std::min(min_x, m.position.x);
        min_y = std::min(min_y, m.position.y);
    }
    for (auto& m : body.masses) {
        m.position.x -= min_x;
        m.position.y += config.ground_height - min_y;
    }

    // Edge springs keyed by their corner pair so shared edges merge.
    std::map<std::pair<int, int>, int> edge_index;
    auto add_edge = [&](int a, int b, SpringKind kind, int cell) {
        const auto key = std::minmax(a, b);
        const VoxelType t = genome.at(cell);
        const bool drives = (kind == SpringKind::HorizontalEdge && t == VoxelType::ActiveHorizontal) ||
                            (kind == SpringKind::VerticalEdge && t == VoxelType::ActiveVertical);
        auto it = edge_index.find(key);
        if (it == edge_index.end()) {
            Spring s;
            s.endpoints = {key.first, key.second};
            s.rest_length_base = vs;
            s.stiffness = material_stiffness(t, config);
            s.damping = config.spring_damping;
            s.kind = kind;
            if (drives) s.actuation_sources[static_cast<std::size_t>(s.source_count++)] = cell;
            it = edge_index.emplace(key, static_cast<int>(body.springs.size())).first;
            body.springs.push_back(s);
        } else {
            Spring& s = body.springs[static_cast<std::size_t>(it->second)];
            s.stiffness = 0.5 * (s.stiffness + material_stiffness(t, config));
            if (drives) s.actuation_sources[static_cast<std::size_t>(s.source_count++)] = cell;
        }
        return it->second;
    };

    for (int r = 0; r < shape.rows; ++r) {
        for (int c = 0; c < shape.cols; ++c) {
            const int cell = r * shape.cols + c;
            if (genome.at(cell) == VoxelType::Empty) continue;
            const int tl = body.corner_mass[static_cast<std::size_t>(site(r, c))];
            const int tr = body.corner_mass[static_cast<std::size_t>(site(r, c + 1))];
            const int bl = body.corner_mass[static_cast<std::size_t>(site(r + 1, c))];
            const int br = body.corner_mass[static_cast<std::size_t>(site(r + 1, c + 1))];
            body.voxel_map[static_cast<std::size_t>(cell)] = {tl, tr, bl, br};
            auto& edges = body.voxel_edges[static_cast<std::size_t>(cell)];
            edges[0] = add_edge(tl, tr, SpringKind::HorizontalEdge, cell);
            edges[1] = add_edge(bl, br, SpringKind::HorizontalEdge, cell);
            edges[2] = add_edge(tl, bl, SpringKind::VerticalEdge, cell);
            edges[3] = add_edge(tr, br, SpringKind::VerticalEdge, cell);
        }
    }
    for (int cell = 0; cell < shape.cells(); ++cell) {
        const VoxelType t = genome.at(cell);
        if (t == VoxelType::Empty) continue;
        const auto& corners = body.voxel_map[static_cast<std::size_t>(cell)];
        for (const auto& [a, b] : {std::pair{corners[0], corners[3]}, std::pair{corners[1], corners[2]}}) {
            Spring s;
            s.endpoints = {std::min(a, b), std::max(a, b)};
            s.rest_length_base = vs * std::sqrt(2.0);
            s.stiffness = material_stiffness(t, config);
            s.damping = config.spring_damping;
            s.kind = SpringKind::Diagonal;
            s.owner_cell = cell;
            if (is_active(t)) s.actuation_sources[static_cast<std::size_t>(s.source_count++)] = cell;
            body.springs.push_back(s);
        }
    }

    body.rest_lengths.resize(body.springs.size());
    for (std::size_t i = 0; i < body.springs.size(); ++i) body.rest_lengths[i] = body.springs[i].rest_length_base;
    return body;
}

void apply_actions(RobotBody& body, std::span<const double> actions) {
    if (static_cast<int>(actions.size()) != body.shape.cells())
        throw DomainError("action vector length " + std::to_string(actions.size()) + " does not match grid");
    for (std::size_t cell = 0; cell < actions.size(); ++cell) {
        if (!is_active(body.cells[cell])) continue;
        const double a = actions[cell];
        if (!(a >= kMinActuation && a <= kMaxActuation))
            throw DomainError("action " + std::to_string(a) + " outside [0.6, 1.6]");
        body.multipliers[cell] = a;
    }
}

void update_rest_lengths(RobotBody& body, const SimConfig& config) {
    const std::size_t n = body.springs.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Spring& s = body.springs[i];
        if (s.kind == SpringKind::Diagonal || s.source_count == 0) {
            body.rest_lengths[i] = s.rest_length_base;
            continue;
        }
        double sum = 0.0;
        for (const int cell : s.sources()) sum += body.multipliers[static_cast<std::size_t>(cell)];
        body.rest_lengths[i] = s.rest_length_base * sum / s.source_count;
    }
    // Diagonals of active voxels follow the rectangle spanned by their edges.
    for (std::size_t i = 0; i < n; ++i) {
        const Spring& s = body.springs[i];
        if (s.kind != SpringKind::Diagonal || s.source_count == 0) continue;
        const auto& e = body.voxel_edges[static_cast<std::size_t>(s.owner_cell)];
        const double w = 0.5 * (body.rest_lengths[static_cast<std::size_t>(e[0])] +
                                body.rest_lengths[static_cast<std::size_t>(e[1])]);
        const double h = 0.5 * (body.rest_lengths[static_cast<std::size_t>(e[2])] +
                                body.rest_lengths[static_cast<std::size_t>(e[3])]);
        body.rest_lengths[i] = s.rest_length_base * std::sqrt(w * w + h * h) / (config.voxel_size * std::sqrt(2.0));
    }
}

namespace {

// Hookean plus axial damping force on endpoint 0; endpoint 1 receives the negation.
Vec2 spring_force(const RobotBody& body, std::size_t i) {
    const Spring& s = body.springs[i];
    const PointMass& a = body.masses[static_cast<std::size_t>(s.endpoints[0])];
    const PointMass& b = body.masses[static_cast<std::size_t>(s.endpoints[1])];
    const Vec2 d = b.position - a.position;
    const double len = norm(d);
    if (len <= 1e-12) return {};
    const Vec2 u = (1.0 / len) * d;
    const double stretch = len - body.rest_lengths[i];
    const double rel_speed = dot(b.velocity - a.velocity, u);
    return (s.stiffness * stretch + s.damping * rel_speed) * u;
}

}  // namespace

void step(RobotBody& body, const SimConfig& config, std::span<const double> actions) {
    if (!actions.empty()) apply_actions(body, actions);
    update_rest_lengths(body, config);

    const std::size_t n = body.masses.size();
    thread_local std::vector<Vec2> force;
    force.assign(n, Vec2{});

    for (std::size_t i = 0; i < body.springs.size(); ++i) {
        const Vec2 f = spring_force(body, i);
        force[static_cast<std::size_t>(body.springs[i].endpoints[0])] += f;
        force[static_cast<std::size_t>(body.springs[i].endpoints[1])] -= f;
    }

    const double dt = config.dt;
    const double vmax = config.max_velocity_clamp;
    for (std::size_t i = 0; i < n; ++i) {
        PointMass& m = body.masses[i];
        Vec2 f = force[i] + m.mass * config.gravity;
        double normal = 0.0;
        if (config.ground_contact && m.position.y < config.ground_height) {
            const double depth = config.ground_height - m.position.y;
            normal = std::max(0.0, config.contact_stiffness * depth - config.contact_damping * m.velocity.y);
            f.y += normal;
        }
        Vec2 v = m.velocity + (dt / m.mass) * f;
        if (normal > 0.0) {
            // Coulomb friction as a bounded tangential impulse: it can stop
            // the slip within this step but never reverse it.
            const double max_dv = config.friction_coefficient * normal * dt / m.mass;
            if (std::abs(v.x) <= max_dv)
                v.x = 0.0;
            else
                v.x -= std::copysign(max_dv, v.x);
        }
        m.velocity = v;
        m.position += dt * m.velocity;
        const double speed = norm(m.velocity);
        if (speed > vmax) m.velocity *= vmax / speed;
    }

    ++body.step_count;
    for (const auto& m : body.masses) {
        if (!std::isfinite(m.position.x) || !std::isfinite(m.position.y) || !std::isfinite(m.velocity.x) ||
            !std::isfinite(m.velocity.y))
            throw SimulationFault("non-finite state of mass " + std::to_string(m.id), body.step_count);
    }
}

Vec2 center_of_mass(const RobotBody& body) {
    Vec2 sum;
    double total = 0.0;
    for (const auto& m : body.masses) {
        sum += m.mass * m.position;
        total += m.mass;
    }
    return (1.0 / total) * sum;
}

Vec2 com_velocity(const RobotBody& body) {
    Vec2 sum;
    double total = 0.0;
    for (const auto& m : body.masses) {
        sum += m.mass * m.velocity;
        total += m.mass;
    }
    return (1.0 / total) * sum;
}

Vec2 total_momentum(const RobotBody& body) {
    Vec2 sum;
    for (const auto& m : body.masses) sum += m.mass * m.velocity;
    return sum;
}

Vec2 net_spring_force(const RobotBody& body) {
    std::vector<Vec2> force(body.masses.size());
    for (std::size_t i = 0; i < body.springs.size(); ++i) {
        const Vec2 f = spring_force(body, i);
        force[static_cast<std::size_t>(body.springs[i].endpoints[0])] += f;
        force[static_cast<std::size_t>(body.springs[i].endpoints[1])] -= f;
    }
    Vec2 total;
    for (const auto& f : force) total += f;
    return total;
}

EnergyBreakdown mechanical_energy(const RobotBody& body, const SimConfig& config) {
    EnergyBreakdown e;
    for (const auto& m : body.masses) {
        e.kinetic += 0.5 * m.mass * dot(m.velocity, m.velocity);
        e.gravitational -= m.mass * dot(config.gravity, m.position);
        if (config.ground_contact && m.position.y < config.ground_height) {
            const double depth = config.ground_height - m.position.y;
            e.contact += 0.5 * config.contact_stiffness * depth * depth;
        }
    }
    for (std::size_t i = 0; i < body.springs.size(); ++i) {
        const Spring& s = body.springs[i];
        const Vec2 d = body.masses[static_cast<std::size_t>(s.endpoints[1])].position -
                       body.masses[static_cast<std::size_t>(s.endpoints[0])].position;
        const double stretch = norm(d) - body.rest_lengths[i];
        e.elastic += 0.5 * s.stiffness * stretch * stretch;
    }
    return e;
}

double discrete_energy(const RobotBody& body, const SimConfig& config) {
    RobotBody next = body;
    step(next, config);
    double e = mechanical_energy(body, config).total();
    for (std::size_t i = 0; i < body.masses.size(); ++i) {
        const auto& m = body.masses[i];
        e += 0.5 * m.mass * dot(m.velocity, next.masses[i].velocity - m.velocity);
    }
    return e;
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out, int mass_count) : out_(&out), mass_count_(mass_count) {
    *out_ << "step,com_x,com_y,com_vx,com_vy";
    for (int i = 0; i < mass_count_; ++i) *out_ << ",x" << i << ",y" << i;
    *out_ << '\n';
}

void TrajectoryWriter::write(std::int64_t step_index, const RobotBody& body) {
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, ",%.9g", v);
        *out_ << buf;
    };
    *out_ << step_index;
    const Vec2 com = center_of_mass(body);
    const Vec2 vel = com_velocity(body);
    put(com.x);
    put(com.y);
    put(vel.x);
    put(vel.y);
    for (const auto& m : body.masses) {
        put(m.position.x);
        put(m.position.y);
    }
    *out_ << '\n';
}

}  // namespace voxlab
