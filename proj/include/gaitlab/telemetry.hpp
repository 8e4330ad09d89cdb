#pragma once

#include "gaitlab/error.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaitlab::telemetry {

// Wire layout, little-endian:
//   magic(1) | device(1) | seq(2) | timestamp_ms(4) | ax ay az gx gy gz mx my mz (9 x int16) | crc8(1)
inline constexpr std::uint8_t kMagic = 0xA5;
inline constexpr std::size_t kFrameSize = 27;
inline constexpr std::size_t kCrcOffset = kFrameSize - 1;

inline constexpr double kAccelFullScaleG = 4.0;
inline constexpr double kGyroFullScaleDps = 2000.0;
inline constexpr double kMagFullScaleUt = 400.0;
inline constexpr double kCountsPerFullScale = 32768.0;

enum class DeviceId : std::uint8_t { LeftWrist = 1, RightWrist = 2 };

enum class Task { Walk, DualTask };

std::string_view to_string(Task task);
Task parse_task(std::string_view s);

using Counts3 = std::array<std::int16_t, 3>;
using Vec3 = std::array<double, 3>;

/// One raw 9-axis sample from a wrist peripheral, as carried on the wire.
struct SensorFrame {
    DeviceId device = DeviceId::LeftWrist;
    std::uint16_t seq = 0;
    std::uint32_t timestamp_ms = 0;
    Counts3 accel{};
    Counts3 gyro{};
    Counts3 mag{};

    Vec3 accel_g() const;
    Vec3 gyro_dps() const;
    Vec3 mag_ut() const;

    friend bool operator==(const SensorFrame&, const SensorFrame&) = default;
};

/// One sample in physical units (g, deg/s, uT).
struct ImuSample {
    Vec3 accel{};
    Vec3 gyro{};
    Vec3 mag{};

    friend bool operator==(const ImuSample&, const ImuSample&) = default;
};

/// Quantizes physical values to raw counts. Throws Errc::EncodingError when a
/// value falls outside the signed 16-bit range at the configured full scale.
SensorFrame quantize(DeviceId device, std::uint16_t seq, std::uint32_t timestamp_ms, const ImuSample& s);

std::uint8_t crc8(std::span<const std::uint8_t> bytes);

std::array<std::uint8_t, kFrameSize> encode_frame(const SensorFrame& frame);

enum class DecodeStatus { Ok, BadMagic, BadCrc, BadDeviceId, Truncated };

std::string_view to_string(DecodeStatus status);

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Truncated;
    std::optional<SensorFrame> frame;

    bool ok() const { return status == DecodeStatus::Ok; }
};

/// Decodes a frame starting at buf[0]. Never throws; any byte content is accepted.
DecodeResult decode_frame(std::span<const std::uint8_t> buf);

struct DecodeCounters {
    std::size_t frames = 0;
    std::size_t bad_magic = 0;
    std::size_t bad_crc = 0;
    std::size_t bad_device = 0;
    std::size_t truncated = 0;
    std::size_t skipped_bytes = 0;

    friend bool operator==(const DecodeCounters&, const DecodeCounters&) = default;
};

/// Incremental decoder over a byte stream. On any rejected frame it drops one
/// byte and rescans for the next magic byte. Bytes not starting with the magic
/// are counted as one BadMagic event per contiguous run.
class StreamDecoder {
public:
    /// Appends bytes and returns every frame completed by them.
    std::vector<SensorFrame> feed(std::span<const std::uint8_t> bytes);

    /// Ends the stream; a dangling partial frame counts as Truncated.
    void finish();

    const DecodeCounters& counters() const { return counters_; }

private:
    std::vector<std::uint8_t> pending_;
    DecodeCounters counters_;
    bool in_garbage_ = false;
};

/// Decodes a whole buffer in one go.
std::vector<SensorFrame> decode_stream(std::span<const std::uint8_t> bytes, DecodeCounters* counters = nullptr);

enum class Label { Control = 0, PD = 1 };

struct GapEntry {
    DeviceId device = DeviceId::LeftWrist;
    std::int64_t seq_before = 0;  // unwrapped
    std::int64_t seq_after = 0;   // unwrapped
    bool interpolated = false;

    std::int64_t missing() const { return seq_after - seq_before - 1; }

    friend bool operator==(const GapEntry&, const GapEntry&) = default;
};

/// Two aligned wrist channels on a shared time base. Immutable once built.
struct Session {
    std::string subject_id;
    Task task = Task::Walk;
    int sample_rate_hz = 100;
    std::optional<Label> label;
    std::vector<double> t_ms;
    std::vector<ImuSample> left;
    std::vector<ImuSample> right;
    std::vector<GapEntry> gap_report;

    std::size_t size() const { return t_ms.size(); }
    double duration_s() const;

    /// True when the duration lies within the 50-70 s window of a one-minute task.
    bool task_duration_ok() const;

    friend bool operator==(const Session&, const Session&) = default;
};

/// Throws Errc::Invariant when timestamps are not strictly increasing or the
/// channel lengths disagree with the time base.
void validate(const Session& s);

struct SessionMeta {
    std::string subject_id;
    Task task = Task::Walk;
    int sample_rate_hz = 100;
    std::optional<Label> label;
};

inline constexpr std::int64_t kMaxInterpolatedGap = 5;
inline constexpr double kMaxClockSkewMs = 1000.0;

/// Builds a Session from frames of up to two devices, in any arrival order.
///
/// Per device: frames are ordered by timestamp, seq is unwrapped (a backward
/// jump of more than 32768 counts as a wrap), duplicate seqs are dropped
/// keeping the earliest frame, gaps of up to 5 samples are filled by linear
/// interpolation and longer ones are kept as time discontinuities. The right
/// channel is then resampled onto the left channel's timestamps inside their
/// common span; rows where the right channel is inside an uninterpolated gap
/// are dropped.
///
/// Errors: EmptyChannel when a wrist sent nothing, ClockSkew when the channel
/// start or end times differ by more than one second.
Session assemble_session(std::span<const SensorFrame> frames, const SessionMeta& meta);

/// Inverse of assembly for lossless sessions: one frame per sample per wrist,
/// seq starting at `first_seq` (wrapping), timestamps rounded to whole ms.
std::vector<SensorFrame> session_to_frames(const Session& s, std::uint16_t first_seq = 0);

std::vector<std::uint8_t> frames_to_bytes(std::span<const SensorFrame> frames);

/// CSV columns after t_ms, in order.
const std::vector<std::string>& session_columns();

/// `extra` is appended to the first header line as key=value fields.
std::string session_to_csv(const Session& s, std::string_view extra = {});

/// Throws SchemaMismatch (detail = offending column) or EmptyChannel for an
/// empty body.
Session session_from_csv(std::string_view text);

} // namespace gaitlab::telemetry
