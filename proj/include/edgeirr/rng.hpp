#pragma once

// Seeded random streams. One run seed is split into independent per-entity
// streams keyed by entity class and id, so adding an entity never shifts the
// draws of another. Only std::mt19937_64 raw output is used; its sequence is
// fixed by the standard, unlike the std:: distributions.

#include <concepts>
#include <cstdint>
#include <map>
#include <random>
#include <utility>

namespace edgeirr {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Anything that yields doubles uniform in [0, 1).
template <class R>
concept UniformSource = requires(R& r) {
    { r.uniform01() } -> std::convertible_to<double>;
};

class Rng
{
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

private:
    std::mt19937_64 engine_;
};

enum class StreamClass : std::uint32_t
{
    Mote = 1,
    ActuatorDown = 2,
    ActuatorUp = 3,
};

inline std::uint64_t stream_seed(std::uint64_t run_seed, StreamClass cls, std::uint16_t id) noexcept
{
    const std::uint64_t key = (static_cast<std::uint64_t>(cls) << 32) | id;
    return splitmix64(run_seed ^ splitmix64(key));
}

class SeedStreams
{
public:
    explicit SeedStreams(std::uint64_t seed) : seed_(seed) {}

    Rng& stream(StreamClass cls, std::uint16_t id)
    {
        auto key = std::pair{cls, id};
        auto it = streams_.find(key);
        if (it == streams_.end())
            it = streams_.emplace(key, Rng{stream_seed(seed_, cls, id)}).first;
        return it->second;
    }

private:
    std::uint64_t seed_;
    std::map<std::pair<StreamClass, std::uint16_t>, Rng> streams_;
};

} // namespace edgeirr
