#pragma once

#include <stdexcept>
#include <string>

namespace mcmfb {

/// Base class for every error raised by the library. The `code()` string is
/// stable and machine-readable; run traces record it as the exit reason.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& what)
        : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
    const std::string& code() const { return code_; }

private:
    std::string code_;
};

#define MCMFB_DEFINE_ERROR(Name)                                      \
    class Name : public Error {                                       \
    public:                                                           \
        explicit Name(const std::string& what) : Error(#Name, what) {} \
    }

MCMFB_DEFINE_ERROR(GridTooSmall);
MCMFB_DEFINE_ERROR(DegenerateImmersion);
MCMFB_DEFINE_ERROR(DegenerateState);
MCMFB_DEFINE_ERROR(DomainError);
MCMFB_DEFINE_ERROR(BcSolveFailure);
MCMFB_DEFINE_ERROR(StepUnderflow);
MCMFB_DEFINE_ERROR(MeshDegeneracy);
MCMFB_DEFINE_ERROR(NewtonDivergence);
MCMFB_DEFINE_ERROR(SeedIncompatible);
MCMFB_DEFINE_ERROR(NotDiffeo);
MCMFB_DEFINE_ERROR(ReconstructionFailure);
MCMFB_DEFINE_ERROR(InconsistentSnapshots);
MCMFB_DEFINE_ERROR(NotApplicable);
MCMFB_DEFINE_ERROR(OriginOutside);
MCMFB_DEFINE_ERROR(ConfigError);
MCMFB_DEFINE_ERROR(IoError);

#undef MCMFB_DEFINE_ERROR

} // namespace mcmfb
