#pragma once

#include <stdexcept>
#include <string>

namespace sparsedae {

// Structured error carrying the originating module and operation so the CLI
// can emit a single machine-readable diagnostic per failure.
class Error : public std::runtime_error {
  public:
    Error(std::string module, std::string op, std::string code, const std::string& message)
        : std::runtime_error("[" + module + "." + op + "] " + code + ": " + message),
          module_(std::move(module)), op_(std::move(op)), code_(std::move(code)) {}

    const std::string& module_name() const { return module_; }
    const std::string& op_name() const { return op_; }
    const std::string& code() const { return code_; }

  private:
    std::string module_;
    std::string op_;
    std::string code_;
};

// Thrown by sparse solvers when thresholding empties the support.
// Callers decide whether this is fatal (it usually is not).
class NoRelationError : public Error {
  public:
    NoRelationError(const std::string& module, const std::string& op, const std::string& message)
        : Error(module, op, "NoRelation", message) {}
};

// Thrown by score_r2 (and fitters) when the target has zero variance.
class DegenerateTargetError : public Error {
  public:
    DegenerateTargetError(const std::string& module, const std::string& op, const std::string& message)
        : Error(module, op, "DegenerateTarget", message) {}
};

// Thrown when no candidate in an algebraic-finder iteration produced a usable fit.
class NoRelationFoundError : public Error {
  public:
    NoRelationFoundError(const std::string& op, const std::string& message)
        : Error("algfinder", op, "NoRelationFound", message) {}
};

}  // namespace sparsedae
