#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace voxlab {

// Precondition violated by the caller (non-viable genome, bad shape, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Non-finite state produced by the integrator.
class SimulationFault : public std::runtime_error {
public:
    SimulationFault(const std::string& what, std::int64_t step)
        : std::runtime_error(what + " at step " + std::to_string(step)), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

// File could not be read/written or has the wrong layout.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Inputs come from incompatible task configurations.
class ConfigMismatch : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace voxlab
