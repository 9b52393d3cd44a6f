#pragma once

// Soil-moisture dynamics for one greenhouse: temperature-dependent plant
// uptake, infiltration while the valve is open, and poor water retention in
// dry soil. Explicit Euler with the step bounded to one hour.

#include "edgeirr/domain.hpp"

#include <algorithm>

namespace edgeirr::soil {

struct SoilParams
{
    double eta_min = 0.3;  // retention at moisture 0
    double m_knee = 40.0;  // moisture where retention reaches 1

    bool operator==(const SoilParams&) const = default;
};

struct SoilState
{
    double moisture = 0.0;
    SimTime last_update{0};

    bool operator==(const SoilState&) const = default;
};

/// Day/night temperature cycle. Day is [day_start, day_end) of each 24 h.
struct AmbientCycle
{
    double day_temperature = 36.0;
    double night_temperature = 30.0;
    SimTime day_start = std::chrono::hours{6};
    SimTime day_end = std::chrono::hours{20};

    AmbientConditions at(SimTime t) const noexcept
    {
        const SimTime tod = t % kDay;
        const bool day = tod >= day_start && tod < day_end;
        return {day ? day_temperature : night_temperature, day};
    }

    /// First day/night switch strictly after t.
    SimTime next_switch(SimTime t) const noexcept
    {
        const SimTime midnight = t - t % kDay;
        for (SimTime candidate : {midnight + day_start, midnight + day_end,
                                  midnight + kDay + day_start})
        {
            if (candidate > t)
                return candidate;
        }
        return midnight + kDay + day_end;
    }

    bool operator==(const AmbientCycle&) const = default;
};

inline constexpr SimTime kMaxStep = std::chrono::hours{1};

/// Percent moisture per hour removed by the plant.
inline double uptake_rate(const PlantProfile& plant, const AmbientConditions& ambient) noexcept
{
    return ambient.is_day ? plant.uptake_rate_day : plant.uptake_rate_night;
}

/// Fraction of delivered water the soil keeps. Linear ramp from eta_min at
/// 0 to 1 at m_knee, flat above.
inline double retention_efficiency(double moisture, const SoilParams& params = {}) noexcept
{
    if (moisture >= params.m_knee)
        return 1.0;
    if (moisture <= 0.0)
        return params.eta_min;
    return params.eta_min + (1.0 - params.eta_min) * (moisture / params.m_knee);
}

inline SoilState step(const SoilState& state, bool valve_open, const AmbientConditions& ambient,
                      const PlantProfile& plant, double infil_rate, SimTime dt,
                      const SoilParams& params = {})
{
    if (dt <= SimTime::zero())
        throw ContractViolation("soil step: dt must be positive");
    if (dt > kMaxStep)
        throw ContractViolation("soil step: dt exceeds one hour");

    const double hours = to_hours(dt);
    double rate = -uptake_rate(plant, ambient);
    if (valve_open)
        rate += infil_rate * retention_efficiency(state.moisture, params);

    return {clamp_moisture(state.moisture + hours * rate), state.last_update + dt};
}

} // namespace edgeirr::soil
