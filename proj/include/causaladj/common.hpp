#ifndef CAUSALADJ_COMMON_HPP
#define CAUSALADJ_COMMON_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace causaladj {

// Base for all toolkit errors. `exit_code` feeds the CLI contract:
// 2 for bad input, 1 for internal failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg, int exit_code = 2)
        : std::runtime_error(msg), exit_code_(exit_code) {}
    int exit_code() const { return exit_code_; }

private:
    int exit_code_;
};

#define CAUSALADJ_DEFINE_ERROR(Name, code)                        \
    class Name : public Error {                                   \
    public:                                                       \
        explicit Name(const std::string& msg) : Error(#Name ": " + msg, code) {} \
    }

CAUSALADJ_DEFINE_ERROR(MissingFile, 2);
CAUSALADJ_DEFINE_ERROR(RaggedRow, 2);
CAUSALADJ_DEFINE_ERROR(NonNumericCell, 2);
CAUSALADJ_DEFINE_ERROR(DuplicateNodeId, 2);
CAUSALADJ_DEFINE_ERROR(ShapeMismatch, 2);
CAUSALADJ_DEFINE_ERROR(RegionTooShort, 2);
CAUSALADJ_DEFINE_ERROR(AsymmetricInput, 2);
CAUSALADJ_DEFINE_ERROR(NegativeDistance, 2);
CAUSALADJ_DEFINE_ERROR(NonFiniteInput, 2);
CAUSALADJ_DEFINE_ERROR(SampleCountMismatch, 2);
CAUSALADJ_DEFINE_ERROR(TooFewSamples, 2);
CAUSALADJ_DEFINE_ERROR(MTooLarge, 2);
CAUSALADJ_DEFINE_ERROR(InsufficientSamples, 2);
CAUSALADJ_DEFINE_ERROR(NegativeWeight, 2);
CAUSALADJ_DEFINE_ERROR(SizeMismatch, 2);
CAUSALADJ_DEFINE_ERROR(UnstableSpec, 2);
CAUSALADJ_DEFINE_ERROR(SingularMatrix, 1);
CAUSALADJ_DEFINE_ERROR(Divergence, 1);

#undef CAUSALADJ_DEFINE_ERROR

inline constexpr const char* kVersion = "0.1.0";

// Stable per-stage seed derivation: FNV-1a of the stage name folded into
// the global seed. Must not depend on std::hash (implementation-defined).
inline std::uint64_t stage_seed(std::uint64_t global_seed, const std::string& stage) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : stage) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h ^ (global_seed * 0x9e3779b97f4a7c15ull);
}

}  // namespace causaladj

#endif
