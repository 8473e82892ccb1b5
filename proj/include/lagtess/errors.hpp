#pragma once

#include <stdexcept>
#include <string>

namespace lagtess {

struct DegenerateConfiguration : std::runtime_error {
    explicit DegenerateConfiguration(const std::string& m) : std::runtime_error(m) {}
};

struct EmptyCell : std::runtime_error {
    explicit EmptyCell(const std::string& m) : std::runtime_error(m) {}
};

struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& m) : std::runtime_error(m) {}
};

struct InfeasibleInitial : std::runtime_error {
    explicit InfeasibleInitial(const std::string& m) : std::runtime_error(m) {}
};

struct NonFiniteValue : std::runtime_error {
    explicit NonFiniteValue(const std::string& m) : std::runtime_error(m) {}
};

struct NewtonDivergence : std::runtime_error {
    explicit NewtonDivergence(const std::string& m) : std::runtime_error(m) {}
};

struct QuadratureAllInfeasible : std::runtime_error {
    explicit QuadratureAllInfeasible(const std::string& m) : std::runtime_error(m) {}
};

struct TooFewReplicates : std::invalid_argument {
    explicit TooFewReplicates(const std::string& m) : std::invalid_argument(m) {}
};

struct ReplicateCountMismatch : std::invalid_argument {
    explicit ReplicateCountMismatch(const std::string& m) : std::invalid_argument(m) {}
};

struct BandwidthNonpositive : std::invalid_argument {
    explicit BandwidthNonpositive(const std::string& m) : std::invalid_argument(m) {}
};

}  // namespace lagtess
