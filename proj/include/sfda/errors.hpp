#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sfda {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A linear system or factorization could not be trusted. `condition()` is a
// reciprocal condition estimate when one was available, NaN otherwise.
class NumericalFailure : public std::runtime_error {
public:
    explicit NumericalFailure(const std::string& what,
                              double rcond = std::numeric_limits<double>::quiet_NaN())
        : std::runtime_error(what), rcond_(rcond) {}
    double condition() const noexcept { return rcond_; }

private:
    double rcond_;
};

// An iteration hit its cap. The last iterate is kept so callers can inspect it.
class NonConvergence : public std::runtime_error {
public:
    NonConvergence(const std::string& what, std::vector<double> last_iterate, int iterations)
        : std::runtime_error(what), last_(std::move(last_iterate)), iterations_(iterations) {}
    const std::vector<double>& last_iterate() const noexcept { return last_; }
    int iterations() const noexcept { return iterations_; }

private:
    std::vector<double> last_;
    int iterations_;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& file, std::size_t line, const std::string& msg)
        : std::runtime_error(file + ":" + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace sfda
