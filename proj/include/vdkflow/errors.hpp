#pragma once

#include <stdexcept>
#include <string>

namespace vdkflow {

// Base error carrying a stable machine-readable code alongside the human message.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

// --- grid ---
struct MissingBlock : Error {
    explicit MissingBlock(const std::string& name)
        : Error("missing_block", "case text is missing block '" + name + "'") {}
};
struct MalformedRow : Error {
    MalformedRow(const std::string& block, int line)
        : Error("malformed_row",
                "malformed row in block '" + block + "' at entry " + std::to_string(line)) {}
};
struct MultipleSlack : Error {
    MultipleSlack() : Error("multiple_slack", "more than one slack bus in case") {}
};
struct NoSlack : Error {
    NoSlack() : Error("no_slack", "case has no slack bus") {}
};
struct DisconnectedGraph : Error {
    explicit DisconnectedGraph(int unreachable)
        : Error("disconnected_graph",
                std::to_string(unreachable) + " bus(es) unreachable from the slack") {}
};
struct ZeroImpedanceBranch : Error {
    ZeroImpedanceBranch(int from, int to)
        : Error("zero_impedance_branch",
                "branch " + std::to_string(from) + "-" + std::to_string(to) + " has r = x = 0") {}
};
struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& what)
        : Error("index_out_of_range", what) {}
};

// --- acpf ---
struct NonConvergence : Error {
    NonConvergence(int iterations, double mismatch)
        : Error("non_convergence",
                "power flow did not converge after " + std::to_string(iterations)
                    + " iterations (mismatch " + std::to_string(mismatch) + " pu)"),
          iterations(iterations), mismatch(mismatch) {}
    int iterations;
    double mismatch;
};
struct SingularJacobian : Error {
    explicit SingularJacobian(int iteration)
        : Error("singular_jacobian",
                "singular Jacobian at iteration " + std::to_string(iteration)) {}
};
struct NoLoadBuses : Error {
    NoLoadBuses() : Error("no_load_buses", "network has no buses with nonzero base load") {}
};
struct TooManyFailures : Error {
    TooManyFailures(int failed, int total)
        : Error("too_many_failures",
                std::to_string(failed) + " of " + std::to_string(total)
                    + " samples failed to converge") {}
};

// --- kernels / gp ---
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& what)
        : Error("dimension_mismatch", what) {}
};
struct DepthOutOfRange : Error {
    DepthOutOfRange(int depth, int max_depth)
        : Error("depth_out_of_range",
                "depth " + std::to_string(depth) + " outside [1, " + std::to_string(max_depth) + "]") {}
};
struct CholeskyFailure : Error {
    explicit CholeskyFailure(const std::string& what)
        : Error("cholesky_failure", what) {}
};
struct NonFiniteGradient : Error {
    explicit NonFiniteGradient(int iteration)
        : Error("non_finite_gradient",
                "non-finite likelihood gradient at iteration " + std::to_string(iteration)) {}
};

// --- bench ---
struct LengthMismatch : Error {
    LengthMismatch(long a, long b)
        : Error("length_mismatch",
                "vector lengths differ: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};
struct EmptyInput : Error {
    explicit EmptyInput(const std::string& what) : Error("empty_input", what) {}
};
struct DegenerateDensity : Error {
    DegenerateDensity() : Error("degenerate_density", "all sample values identical; no density estimate") {}
};
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& what) : Error("invalid_argument", what) {}
};

}  // namespace vdkflow
