#pragma once

// Gateway <-> edge node wire format. Each frame is
//
//   u16 length (big endian, bytes after this field)
//   u8  type   (1 sample, 2 command, 3 ack)
//   fixed-width big-endian fields:
//     sample : mote u16, greenhouse u16, moisture u16 (hundredths), sampled_at i64 ms
//     command: target u16, action u8, origin u8, issued_at i64 ms
//     ack    : actuator u16, action u8, origin u8, issued_at i64 ms, applied_at i64 ms

#include "edgeirr/domain.hpp"

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

namespace edgeirr::frame {

class FrameError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

enum class FrameType : std::uint8_t
{
    Sample = 1,
    Command = 2,
    Ack = 3
};

using Frame = std::variant<MoistureSample, ValveCommand, ValveAck>;

inline constexpr std::size_t body_size(FrameType t) noexcept
{
    switch (t)
    {
    case FrameType::Sample: return 1 + 2 + 2 + 2 + 8;
    case FrameType::Command: return 1 + 2 + 1 + 1 + 8;
    case FrameType::Ack: return 1 + 2 + 1 + 1 + 8 + 8;
    }
    return 0;
}

namespace detail {

inline void put(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes)
{
    for (int i = bytes - 1; i >= 0; --i)
        out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get(const std::uint8_t*& p, int bytes)
{
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i)
        v = (v << 8) | *p++;
    return v;
}

inline ValveAction action_from(std::uint64_t v)
{
    if (v > 1)
        throw FrameError("frame: bad valve action");
    return static_cast<ValveAction>(v);
}

inline CommandOrigin origin_from(std::uint64_t v)
{
    if (v > 1)
        throw FrameError("frame: bad command origin");
    return static_cast<CommandOrigin>(v);
}

} // namespace detail

inline std::vector<std::uint8_t> encode(const Frame& f)
{
    using detail::put;
    std::vector<std::uint8_t> out;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, MoistureSample>)
            {
                put(out, body_size(FrameType::Sample), 2);
                put(out, static_cast<std::uint8_t>(FrameType::Sample), 1);
                put(out, p.mote.value, 2);
                put(out, p.greenhouse.value, 2);
                put(out, static_cast<std::uint64_t>(std::llround(clamp_moisture(p.moisture) * 100.0)), 2);
                put(out, static_cast<std::uint64_t>(p.sampled_at.count()), 8);
            }
            else if constexpr (std::is_same_v<T, ValveCommand>)
            {
                put(out, body_size(FrameType::Command), 2);
                put(out, static_cast<std::uint8_t>(FrameType::Command), 1);
                put(out, p.target.value, 2);
                put(out, static_cast<std::uint8_t>(p.action), 1);
                put(out, static_cast<std::uint8_t>(p.origin), 1);
                put(out, static_cast<std::uint64_t>(p.issued_at.count()), 8);
            }
            else
            {
                put(out, body_size(FrameType::Ack), 2);
                put(out, static_cast<std::uint8_t>(FrameType::Ack), 1);
                put(out, p.actuator.value, 2);
                put(out, static_cast<std::uint8_t>(p.command.action), 1);
                put(out, static_cast<std::uint8_t>(p.command.origin), 1);
                put(out, static_cast<std::uint64_t>(p.command.issued_at.count()), 8);
                put(out, static_cast<std::uint64_t>(p.applied_at.count()), 8);
            }
        },
        f);
    return out;
}

/// Decodes one frame body (type byte onward).
inline Frame decode_body(const std::uint8_t* p, std::size_t n)
{
    using detail::get;
    if (n == 0)
        throw FrameError("frame: empty body");
    const auto type = static_cast<FrameType>(p[0]);
    if (type != FrameType::Sample && type != FrameType::Command && type != FrameType::Ack)
        throw FrameError("frame: unknown type " + std::to_string(p[0]));
    if (n != body_size(type))
        throw FrameError("frame: wrong length for type");
    ++p;
    switch (type)
    {
    case FrameType::Sample: {
        MoistureSample s;
        s.mote = MoteId{static_cast<std::uint16_t>(get(p, 2))};
        s.greenhouse = GreenhouseId{static_cast<std::uint16_t>(get(p, 2))};
        const auto hundredths = get(p, 2);
        if (hundredths > 10000)
            throw FrameError("frame: moisture out of range");
        s.moisture = static_cast<double>(hundredths) / 100.0;
        s.sampled_at = SimTime{static_cast<std::int64_t>(get(p, 8))};
        return s;
    }
    case FrameType::Command: {
        ValveCommand c;
        c.target = ActuatorId{static_cast<std::uint16_t>(get(p, 2))};
        c.action = detail::action_from(get(p, 1));
        c.origin = detail::origin_from(get(p, 1));
        c.issued_at = SimTime{static_cast<std::int64_t>(get(p, 8))};
        return c;
    }
    case FrameType::Ack: {
        ValveAck a;
        a.actuator = ActuatorId{static_cast<std::uint16_t>(get(p, 2))};
        a.command.target = a.actuator;
        a.command.action = detail::action_from(get(p, 1));
        a.command.origin = detail::origin_from(get(p, 1));
        a.command.issued_at = SimTime{static_cast<std::int64_t>(get(p, 8))};
        a.applied_at = SimTime{static_cast<std::int64_t>(get(p, 8))};
        return a;
    }
    }
    throw FrameError("frame: unreachable");
}

/// Reassembles frames from an arbitrary byte stream.
class Decoder
{
public:
    void feed(const std::uint8_t* data, std::size_t n) { buf_.insert(buf_.end(), data, data + n); }

    void feed(const std::vector<std::uint8_t>& bytes) { feed(bytes.data(), bytes.size()); }

    std::optional<Frame> next()
    {
        if (buf_.size() - pos_ < 2)
            return std::nullopt;
        const std::size_t len = (std::size_t{buf_[pos_]} << 8) | buf_[pos_ + 1];
        if (buf_.size() - pos_ < 2 + len)
            return std::nullopt;
        Frame f = decode_body(buf_.data() + pos_ + 2, len);
        pos_ += 2 + len;
        if (pos_ == buf_.size())
        {
            buf_.clear();
            pos_ = 0;
        }
        return f;
    }

    std::size_t buffered() const noexcept { return buf_.size() - pos_; }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

} // namespace edgeirr::frame
