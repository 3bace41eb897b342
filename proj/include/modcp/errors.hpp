#pragma once

#include <stdexcept>
#include <string>

namespace modcp {

// Base for all structural failures. Numerical near-misses are reported through
// residuals, not exceptions; throwing means the input is genuinely outside the
// operation's contract.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define MODCP_ERROR(Name)                                        \
  struct Name : Error {                                          \
    explicit Name(const std::string& what = #Name) : Error(what) {} \
  }

MODCP_ERROR(EmptyBlocks);
MODCP_ERROR(NonPositiveBlock);
MODCP_ERROR(AlgebraMismatch);
MODCP_ERROR(SizeMismatch);
MODCP_ERROR(ShapeMismatch);
MODCP_ERROR(SourceMismatch);

MODCP_ERROR(NotStarHom);
MODCP_ERROR(NotCentral);
MODCP_ERROR(NotUnital);
MODCP_ERROR(NonUnitalAction);

MODCP_ERROR(NotHermitianPreserving);
MODCP_ERROR(NotCP);
MODCP_ERROR(NotCCP);
MODCP_ERROR(NotUCP);
MODCP_ERROR(NotModuleMap);
MODCP_ERROR(NotBimoduleMap);
MODCP_ERROR(NotSubalgebra);
MODCP_ERROR(NotOperatorSystem);

MODCP_ERROR(InconsistentConstraints);
MODCP_ERROR(UpperBoundInfeasible);
MODCP_ERROR(SolverStall);

MODCP_ERROR(UnitNotInMultiplicativeDomain);
MODCP_ERROR(EmptyIntertwinerSpace);
MODCP_ERROR(StageNotCCP);

MODCP_ERROR(NotMinimal);
MODCP_ERROR(NotInCommutant);
MODCP_ERROR(IllDefined);
MODCP_ERROR(NotExtension);

MODCP_ERROR(UnknownSuite);
MODCP_ERROR(InvalidInput);

#undef MODCP_ERROR

}  // namespace modcp
