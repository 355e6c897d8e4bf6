#pragma once

#include <stdexcept>
#include <string>

namespace rmcf {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define RMCF_DEFINE_ERROR(Name)                         \
  struct Name : Error {                                 \
    explicit Name(const std::string& what = #Name)      \
        : Error(what) {}                                \
  }

RMCF_DEFINE_ERROR(DegenerateGeometry);
RMCF_DEFINE_ERROR(AxisCollision);
RMCF_DEFINE_ERROR(UnsupportedForImmersed);
RMCF_DEFINE_ERROR(NoSolutionInWindow);
RMCF_DEFINE_ERROR(ShootingBracketFailure);
RMCF_DEFINE_ERROR(NotAShrinker);
RMCF_DEFINE_ERROR(EigenSolveFailure);
RMCF_DEFINE_ERROR(PerturbationTooLarge);
RMCF_DEFINE_ERROR(NumericalBlowup);
RMCF_DEFINE_ERROR(InsufficientHistory);
RMCF_DEFINE_ERROR(NotDisjoint);
RMCF_DEFINE_ERROR(MixedSign);
RMCF_DEFINE_ERROR(ProbeContaminated);
RMCF_DEFINE_ERROR(RegressionFailure);
RMCF_DEFINE_ERROR(EmptyInput);
RMCF_DEFINE_ERROR(AbortNotGeneric);

#undef RMCF_DEFINE_ERROR

}  // namespace rmcf
