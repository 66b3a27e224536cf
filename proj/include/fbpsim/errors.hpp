#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fbpsim {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual const char* kind() const noexcept { return "Error"; }
};

#define FBPSIM_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                        \
    public:                                                            \
        explicit Name(const std::string& what) : Error(what) {}        \
        const char* kind() const noexcept override { return #Name; }   \
    };

FBPSIM_DEFINE_ERROR(DomainError)
FBPSIM_DEFINE_ERROR(CurvatureError)
FBPSIM_DEFINE_ERROR(NotFound)
FBPSIM_DEFINE_ERROR(SolverBreakdown)
FBPSIM_DEFINE_ERROR(GridMismatch)
FBPSIM_DEFINE_ERROR(BandViolation)
FBPSIM_DEFINE_ERROR(IoError)

#undef FBPSIM_DEFINE_ERROR

/// Outer iteration of the chemical-potential solve did not reach tolerance.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, int iterations, double residual)
        : Error(what), iterations_(iterations), residual_(residual) {}
    const char* kind() const noexcept override { return "NonConvergence"; }
    int iterations() const noexcept { return iterations_; }
    double residual() const noexcept { return residual_; }

private:
    int iterations_;
    double residual_;
};

/// The per-step fixed-point loop did not settle; the remedy is a smaller step.
class PicardNonConvergence : public Error {
public:
    PicardNonConvergence(const std::string& what, double tau_times_L, double gap)
        : Error(what), tau_times_L_(tau_times_L), gap_(gap) {}
    const char* kind() const noexcept override { return "PicardNonConvergence"; }
    double tau_times_L() const noexcept { return tau_times_L_; }
    double gap() const noexcept { return gap_; }

private:
    double tau_times_L_;
    double gap_;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column)
        : Error(what), line_(line), column_(column) {}
    const char* kind() const noexcept override { return "ParseError"; }
    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

struct Violation {
    std::string key;
    std::string value;
    std::string rule;
};

/// Carries every violated rule of a scenario, not just the first one found.
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(summarize(violations)), violations_(std::move(violations)) {}
    const char* kind() const noexcept override { return "ValidationError"; }
    const std::vector<Violation>& violations() const noexcept { return violations_; }

private:
    static std::string summarize(const std::vector<Violation>& v) {
        std::string out = std::to_string(v.size()) + " validation error(s)";
        for (const auto& x : v) out += "; " + x.key + "=" + x.value + ": " + x.rule;
        return out;
    }
    std::vector<Violation> violations_;
};

}  // namespace fbpsim
