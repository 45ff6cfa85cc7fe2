#pragma once

#include <stdexcept>
#include <string>

namespace ball3d {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define BALL3D_DEFINE_ERROR(Name)          \
    class Name : public Error {            \
    public:                                \
        using Error::Error;                \
    }

BALL3D_DEFINE_ERROR(InvalidArgument);
BALL3D_DEFINE_ERROR(InvalidCamera);
BALL3D_DEFINE_ERROR(RayParallelToPlane);
BALL3D_DEFINE_ERROR(BehindCamera);
BALL3D_DEFINE_ERROR(SequenceTooShort);
BALL3D_DEFINE_ERROR(NonTerminating);
BALL3D_DEFINE_ERROR(TargetUnreachable);
BALL3D_DEFINE_ERROR(MalformedRecord);
BALL3D_DEFINE_ERROR(SchemaVersionMismatch);
BALL3D_DEFINE_ERROR(UnboundedGap);
BALL3D_DEFINE_ERROR(DivergedTraining);
BALL3D_DEFINE_ERROR(ShapeMismatch);
BALL3D_DEFINE_ERROR(GraphNotRecorded);
BALL3D_DEFINE_ERROR(NoSegments);
BALL3D_DEFINE_ERROR(SingularNormalEquations);
BALL3D_DEFINE_ERROR(LengthMismatch);
BALL3D_DEFINE_ERROR(DegenerateRange);
BALL3D_DEFINE_ERROR(NoGroundTruthEvents);
BALL3D_DEFINE_ERROR(CheckpointError);

#undef BALL3D_DEFINE_ERROR

}  // namespace ball3d
