#pragma once

#include <stdexcept>
#include <string>

namespace fermips {

// Base for all structured errors thrown by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string &msg) : std::runtime_error(msg) {}
};

#define FERMIPS_DEFINE_ERROR(NAME)                                             \
    struct NAME : Error {                                                      \
        explicit NAME(const std::string &msg) : Error(#NAME ": " + msg) {}     \
    }

FERMIPS_DEFINE_ERROR(AxisMismatch);
FERMIPS_DEFINE_ERROR(RankError);
FERMIPS_DEFINE_ERROR(FluxMismatch);
FERMIPS_DEFINE_ERROR(EmptyTensor);
FERMIPS_DEFINE_ERROR(SizeGuardExceeded);
FERMIPS_DEFINE_ERROR(SectorViolation);
FERMIPS_DEFINE_ERROR(SectorMismatch);
FERMIPS_DEFINE_ERROR(LengthMismatch);
FERMIPS_DEFINE_ERROR(InvalidSpec);
FERMIPS_DEFINE_ERROR(SymmetryViolation);
FERMIPS_DEFINE_ERROR(MixedSectorDelta);
FERMIPS_DEFINE_ERROR(SystemSizeMismatch);
FERMIPS_DEFINE_ERROR(ZeroState);
FERMIPS_DEFINE_ERROR(NonHermitianGenerator);
FERMIPS_DEFINE_ERROR(StepRejected);
FERMIPS_DEFINE_ERROR(DegeneratePoints);
FERMIPS_DEFINE_ERROR(EmptyPool);
FERMIPS_DEFINE_ERROR(OptimizerFailure);
FERMIPS_DEFINE_ERROR(ZeroSeed);
FERMIPS_DEFINE_ERROR(OutOfRange);
FERMIPS_DEFINE_ERROR(SectorDeltaMismatch);
FERMIPS_DEFINE_ERROR(NonHermitian);
FERMIPS_DEFINE_ERROR(EtaOutOfRange);
FERMIPS_DEFINE_ERROR(NonuniformGrid);
FERMIPS_DEFINE_ERROR(MalformedHeader);
FERMIPS_DEFINE_ERROR(IndexOutOfRange);
FERMIPS_DEFINE_ERROR(DuplicateConflictingRecord);
FERMIPS_DEFINE_ERROR(MissingKey);
FERMIPS_DEFINE_ERROR(TypeError);
FERMIPS_DEFINE_ERROR(ParseError);

#undef FERMIPS_DEFINE_ERROR

} // namespace fermips
