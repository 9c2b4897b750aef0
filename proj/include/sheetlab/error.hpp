#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sheetlab {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}

    // Short machine-readable category, e.g. "config", "divergence".
    [[nodiscard]] const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config", what) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error("dimension", what) {}
};

class IndexError : public Error {
public:
    explicit IndexError(const std::string& what) : Error("index", what) {}
};

class DegenerateError : public Error {
public:
    explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

class EstimationError : public Error {
public:
    explicit EstimationError(const std::string& what) : Error("estimation", what) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error("domain", what) {}
};

class SpecificationError : public Error {
public:
    explicit SpecificationError(const std::string& what) : Error("specification", what) {}
};

class DivergenceError : public Error {
public:
    DivergenceError(std::size_t i, std::size_t j)
        : Error("divergence", "non-finite lattice value at node (" + std::to_string(i) + ", " +
                                  std::to_string(j) + ")"),
          i_(i), j_(j) {}

    [[nodiscard]] std::size_t i() const noexcept { return i_; }
    [[nodiscard]] std::size_t j() const noexcept { return j_; }

private:
    std::size_t i_;
    std::size_t j_;
};

}  // namespace sheetlab
