#include "voxlab/controller.hpp"

#include <cmath>

#include "voxlab/binary_io.hpp"
#include "voxlab/errors.hpp"

namespace voxlab {

ControllerGenome::ControllerGenome(NetworkShape shape)
    : shape_(shape), params_(shape.parameter_count(), 0.0) {}

ControllerGenome::ControllerGenome(NetworkShape shape, std::vector<double> params)
    : shape_(shape), params_(std::move(params)) {
    if (params_.size() != shape_.parameter_count())
        throw DomainError("controller needs " + std::to_string(shape_.parameter_count()) + " parameters, got " +
                          std::to_string(params_.size()));
    for (const double p : params_)
        if (!std::isfinite(p)) throw DomainError("controller parameter is not finite");
}

std::span<const double> ControllerGenome::input_weights() const noexcept {
    return std::span<const double>(params_).subspan(0, static_cast<std::size_t>(shape_.inputs * shape_.hidden));
}

std::span<const double> ControllerGenome::hidden_biases() const noexcept {
    return std::span<const double>(params_).subspan(static_cast<std::size_t>(shape_.inputs * shape_.hidden),
                                                   static_cast<std::size_t>(shape_.hidden));
}

std::span<const double> ControllerGenome::output_weights() const noexcept {
    return std::span<const double>(params_).subspan(
        static_cast<std::size_t>(shape_.inputs * shape_.hidden + shape_.hidden),
        static_cast<std::size_t>(shape_.hidden * shape_.outputs));
}

std::span<const double> ControllerGenome::output_biases() const noexcept {
    return std::span<const double>(params_).subspan(
        static_cast<std::size_t>(shape_.inputs * shape_.hidden + shape_.hidden + shape_.hidden * shape_.outputs),
        static_cast<std::size_t>(shape_.outputs));
}

Observation observe(const RobotBody& body) {
    const Vec2 com = center_of_mass(body);
    const Vec2 vel = com_velocity(body);
    Observation obs(2 * body.corner_mass.size() + 2, 0.0);
    for (std::size_t site = 0; site < body.corner_mass.size(); ++site) {
        const int id = body.corner_mass[site];
        if (id < 0) continue;
        const Vec2 rel = body.masses[static_cast<std::size_t>(id)].position - com;
        obs[2 * site] = rel.x;
        obs[2 * site + 1] = rel.y;
    }
    obs[obs.size() - 2] = vel.x;
    obs[obs.size() - 1] = vel.y;
    return obs;
}

ActionVector act(const ControllerGenome& params, std::span<const double> obs) {
    const NetworkShape& shape = params.shape();
    if (static_cast<int>(obs.size()) != shape.inputs)
        throw DomainError("observation length " + std::to_string(obs.size()) + " does not match network input " +
                          std::to_string(shape.inputs));
    for (const double v : obs)
        if (!std::isfinite(v)) throw DomainError("observation is not finite");

    const auto w1 = params.input_weights();
    const auto b1 = params.hidden_biases();
    const auto w2 = params.output_weights();
    const auto b2 = params.output_biases();
    const auto hidden_n = static_cast<std::size_t>(shape.hidden);
    const auto out_n = static_cast<std::size_t>(shape.outputs);

    thread_local std::vector<double> hidden;
    hidden.assign(b1.begin(), b1.end());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double x = obs[i];
        if (x == 0.0) continue;
        const double* row = w1.data() + i * hidden_n;
        for (std::size_t h = 0; h < hidden_n; ++h) hidden[h] += row[h] * x;
    }
    for (auto& h : hidden) h = std::tanh(h);

    ActionVector out(b2.begin(), b2.end());
    for (std::size_t h = 0; h < hidden_n; ++h) {
        const double* row = w2.data() + h * out_n;
        for (std::size_t o = 0; o < out_n; ++o) out[o] += row[o] * hidden[h];
    }
    for (auto& a : out) a = kMinActuation + 0.5 * (std::tanh(a) + 1.0);
    return out;
}

std::map<int, double> decode_actions(std::span<const double> actions, const MorphologyGenome& genome) {
    if (static_cast<int>(actions.size()) != genome.size())
        throw DomainError("action vector length does not match grid");
    std::map<int, double> out;
    for (int cell = 0; cell < genome.size(); ++cell)
        if (is_active(genome.at(cell))) out.emplace(cell, actions[static_cast<std::size_t>(cell)]);
    return out;
}

ControllerGenome random_controller(NetworkShape shape, Rng& rng, double stddev) {
    std::normal_distribution<double> noise(0.0, stddev);
    std::vector<double> params(shape.parameter_count());
    for (auto& p : params) p = noise(rng);
    return ControllerGenome(shape, std::move(params));
}

ControllerGenome mutate_controller(const ControllerGenome& params, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) throw DomainError("mutation sigma must be positive");
    std::normal_distribution<double> noise(0.0, sigma);
    std::vector<double> next(params.params().begin(), params.params().end());
    for (auto& p : next) p += noise(rng);
    return ControllerGenome(params.shape(), std::move(next));
}

void write_controller(std::ostream& out, const ControllerGenome& params) {
    bin::put<std::uint64_t>(out, params.size());
    for (const double p : params.params()) bin::put<double>(out, p);
}

ControllerGenome read_controller(std::istream& in, NetworkShape shape) {
    const auto n = bin::get<std::uint64_t>(in);
    if (n != shape.parameter_count())
        throw IoError("stored controller has " + std::to_string(n) + " parameters, expected " +
                      std::to_string(shape.parameter_count()));
    std::vector<double> params(n);
    for (auto& p : params) p = bin::get<double>(in);
    return ControllerGenome(shape, std::move(params));
}

}  // namespace voxlab
