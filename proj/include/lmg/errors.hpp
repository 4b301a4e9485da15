#ifndef LMG_ERRORS_HPP
#define LMG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace lmg {

/// Base of every error raised by the library. `kind()` names the failure
/// class so callers that only see the base type can still report it.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

#define LMG_DEFINE_ERROR(Name)                                                  \
    class Name : public Error {                                                 \
    public:                                                                     \
        explicit Name(const std::string& what) : Error(#Name, what) {}          \
    }

LMG_DEFINE_ERROR(NodeNotFound);
LMG_DEFINE_ERROR(CycleDetected);
LMG_DEFINE_ERROR(InvalidGraph);
LMG_DEFINE_ERROR(InvalidQuery);
LMG_DEFINE_ERROR(OracleLimitExceeded);
LMG_DEFINE_ERROR(InvalidShiftSet);
LMG_DEFINE_ERROR(FeedbackRisk);
LMG_DEFINE_ERROR(InvalidWitness);
LMG_DEFINE_ERROR(SpecError);
LMG_DEFINE_ERROR(ParseError);
LMG_DEFINE_ERROR(MaskedCellAccess);
LMG_DEFINE_ERROR(SingularDesign);
LMG_DEFINE_ERROR(PositivityViolation);
LMG_DEFINE_ERROR(InsufficientData);
LMG_DEFINE_ERROR(BootstrapUnstable);

#undef LMG_DEFINE_ERROR

} // namespace lmg

#endif // LMG_ERRORS_HPP
