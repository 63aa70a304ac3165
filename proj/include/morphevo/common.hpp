#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace morphevo {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define MORPHEVO_DEFINE_ERROR(name)                                      \
    class name : public Error {                                          \
    public:                                                              \
        explicit name(const std::string &what) : Error(#name ": " + what) {} \
    }

MORPHEVO_DEFINE_ERROR(GenomeError);
MORPHEVO_DEFINE_ERROR(DescriptorShapeError);
MORPHEVO_DEFINE_ERROR(NoveltyError);
MORPHEVO_DEFINE_ERROR(InterfaceError);
MORPHEVO_DEFINE_ERROR(ViabilityError);
MORPHEVO_DEFINE_ERROR(LifecycleError);
MORPHEVO_DEFINE_ERROR(ConfigError);
MORPHEVO_DEFINE_ERROR(InitializationError);
MORPHEVO_DEFINE_ERROR(GenerationError);
MORPHEVO_DEFINE_ERROR(SchedulingError);
MORPHEVO_DEFINE_ERROR(AnalysisError);
MORPHEVO_DEFINE_ERROR(CorruptRunError);

#undef MORPHEVO_DEFINE_ERROR

using Rng = std::mt19937_64;

// splitmix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a) noexcept {
    return mix_seed(base ^ mix_seed(a + 0x632be59bd9b4e019ULL));
}

template <typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, Rest... rest) noexcept {
    return derive_seed(derive_seed(base, a), static_cast<std::uint64_t>(rest)...);
}

// Stream tags keep seeds of different consumers apart.
enum class Stream : std::uint64_t {
    replicate = 1,
    coordinator = 2,
    scheduler = 3,
    learner = 4,
    episode = 5,
    genome = 6,
};

inline double uniform(Rng &rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline bool bernoulli(Rng &rng, double p) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
}

} // namespace morphevo
