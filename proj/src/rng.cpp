#include "nbo/rng.hpp"

#include <string>

#include "nbo/error.hpp"

namespace nbo {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::DomainError: return "domain_error";
        case ErrorCode::DegenerateData: return "degenerate_data";
        case ErrorCode::SingularCovariance: return "singular_covariance";
        case ErrorCode::AcquisitionFailure: return "acquisition_failure";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::Validation: return "validation_error";
        case ErrorCode::Conflict: return "conflict";
        case ErrorCode::NoModel: return "no_model";
        case ErrorCode::Io: return "io_error";
    }
    return "unknown";
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t Rng::mix_seed(std::uint64_t a, std::uint64_t b) {
    return splitmix64(a ^ splitmix64(b));
}

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace nbo
