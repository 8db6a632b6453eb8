#pragma once

#include <stdexcept>
#include <string>

namespace oculolipid {

// Broad category used by the CLI to pick an exit code.
enum class ErrorKind { Usage, Data, Internal };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

#define OCULOLIPID_DEFINE_ERROR(Name, Kind)                      \
    class Name : public Error {                                  \
    public:                                                      \
        explicit Name(const std::string& msg)                    \
            : Error(ErrorKind::Kind, std::string(#Name ": ") + msg) {} \
    }

// vessel_morphometry
OCULOLIPID_DEFINE_ERROR(EmptyVesselClass, Data);
OCULOLIPID_DEFINE_ERROR(DegenerateLadder, Data);
OCULOLIPID_DEFINE_ERROR(ZeroChord, Data);
OCULOLIPID_DEFINE_ERROR(TooShortForCurvature, Data);
OCULOLIPID_DEFINE_ERROR(NoEyesAvailable, Data);

// cohort_ingest
OCULOLIPID_DEFINE_ERROR(MissingColumn, Data);
OCULOLIPID_DEFINE_ERROR(DuplicateParticipant, Data);
OCULOLIPID_DEFINE_ERROR(NoLipidColumns, Data);
OCULOLIPID_DEFINE_ERROR(EmptyJoin, Data);

// stats_engine
OCULOLIPID_DEFINE_ERROR(ConstantInput, Data);
OCULOLIPID_DEFINE_ERROR(InsufficientSamples, Data);
OCULOLIPID_DEFINE_ERROR(RankDeficient, Data);
OCULOLIPID_DEFINE_ERROR(InvalidP, Data);

// association_pipeline
OCULOLIPID_DEFINE_ERROR(InvalidSpec, Usage);

// report_gen
OCULOLIPID_DEFINE_ERROR(EmptyNetwork, Data);

#undef OCULOLIPID_DEFINE_ERROR

} // namespace oculolipid
