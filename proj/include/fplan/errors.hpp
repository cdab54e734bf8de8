#pragma once

#include <stdexcept>
#include <string>

namespace fplan {

struct DegenerateCenterLine : std::runtime_error {
    explicit DegenerateCenterLine(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutOfCorridor : std::runtime_error {
    explicit OutOfCorridor(const std::string& msg) : std::runtime_error(msg) {}
};

struct OutOfRange : std::runtime_error {
    explicit OutOfRange(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidBasisConfig : std::runtime_error {
    explicit InvalidBasisConfig(const std::string& msg) : std::runtime_error(msg) {}
};

struct DimensionMismatch : std::runtime_error {
    explicit DimensionMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularKkt : std::runtime_error {
    explicit SingularKkt(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyBatch : std::runtime_error {
    explicit EmptyBatch(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyLog : std::runtime_error {
    explicit EmptyLog(const std::string& msg) : std::runtime_error(msg) {}
};

struct CorpusGenerationFailed : std::runtime_error {
    explicit CorpusGenerationFailed(const std::string& msg) : std::runtime_error(msg) {}
};

struct ScenarioError : std::runtime_error {
    explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fplan
