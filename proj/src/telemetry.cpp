#include "gaitlab/telemetry.hpp"

#include "gaitlab/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace gaitlab::telemetry {

namespace {

Vec3 to_units(const Counts3& c, double full_scale) {
    return {c[0] * full_scale / kCountsPerFullScale, c[1] * full_scale / kCountsPerFullScale,
            c[2] * full_scale / kCountsPerFullScale};
}

std::int16_t to_counts(double value, double full_scale, const char* what) {
    const double counts = std::round(value * kCountsPerFullScale / full_scale);
    if (!std::isfinite(counts) || counts < -32768.0 || counts > 32767.0) {
        throw Error(Errc::EncodingError, std::string(what) + " value " + text::format_sig(value, 6) + " outside full scale");
    }
    return static_cast<std::int16_t>(counts);
}

Counts3 to_counts(const Vec3& v, double full_scale, const char* what) {
    return {to_counts(v[0], full_scale, what), to_counts(v[1], full_scale, what), to_counts(v[2], full_scale, what)};
}

void put_u16(std::uint8_t* p, std::uint16_t v) {
    p[0] = static_cast<std::uint8_t>(v & 0xFF);
    p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::uint8_t* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        p[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
    }
}

std::uint16_t get_u16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

bool valid_device(std::uint8_t d) {
    return d == static_cast<std::uint8_t>(DeviceId::LeftWrist) || d == static_cast<std::uint8_t>(DeviceId::RightWrist);
}

ImuSample lerp(const ImuSample& a, const ImuSample& b, double f) {
    ImuSample out;
    for (int i = 0; i < 3; ++i) {
        out.accel[i] = a.accel[i] + (b.accel[i] - a.accel[i]) * f;
        out.gyro[i] = a.gyro[i] + (b.gyro[i] - a.gyro[i]) * f;
        out.mag[i] = a.mag[i] + (b.mag[i] - a.mag[i]) * f;
    }
    return out;
}

ImuSample to_sample(const SensorFrame& f) {
    return {f.accel_g(), f.gyro_dps(), f.mag_ut()};
}

// One device's cleaned stream.
struct Channel {
    std::vector<double> t_ms;
    std::vector<ImuSample> samples;
    // long_gap_after[i]: an uninterpolated gap lies between sample i and i+1
    std::vector<bool> long_gap_after;
};

Channel clean_channel(std::vector<SensorFrame> frames, std::vector<GapEntry>& gaps) {
    // Total order on frame content so any arrival order yields the same result.
    auto content_key = [](const SensorFrame& f) {
        return std::tie(f.timestamp_ms, f.seq, f.accel, f.gyro, f.mag);
    };
    std::sort(frames.begin(), frames.end(),
              [&](const SensorFrame& a, const SensorFrame& b) { return content_key(a) < content_key(b); });

    std::vector<std::pair<std::int64_t, const SensorFrame*>> unwrapped;
    unwrapped.reserve(frames.size());
    std::int64_t offset = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        if (i > 0) {
            const int diff = static_cast<int>(frames[i].seq) - static_cast<int>(frames[i - 1].seq);
            if (diff < -32768) {
                offset += 65536;
            } else if (diff > 32768) {
                offset -= 65536;
            }
        }
        unwrapped.emplace_back(offset + frames[i].seq, &frames[i]);
    }
    std::stable_sort(unwrapped.begin(), unwrapped.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    Channel ch;
    std::int64_t last_seq = 0;
    for (const auto& [seq, frame] : unwrapped) {
        const double t = frame->timestamp_ms;
        if (!ch.t_ms.empty()) {
            if (seq == last_seq || t <= ch.t_ms.back()) {
                continue;  // duplicate seq, or a clock that ran backwards
            }
            const std::int64_t missing = seq - last_seq - 1;
            if (missing > 0) {
                GapEntry gap{frame->device, last_seq, seq, missing <= kMaxInterpolatedGap};
                gaps.push_back(gap);
                if (gap.interpolated) {
                    const ImuSample before = ch.samples.back();
                    const ImuSample after = to_sample(*frame);
                    const double t0 = ch.t_ms.back();
                    for (std::int64_t k = 1; k <= missing; ++k) {
                        const double f = static_cast<double>(k) / static_cast<double>(missing + 1);
                        ch.t_ms.push_back(t0 + (t - t0) * f);
                        ch.samples.push_back(lerp(before, after, f));
                        ch.long_gap_after.push_back(false);
                    }
                } else {
                    ch.long_gap_after.back() = true;
                }
            }
        }
        ch.t_ms.push_back(t);
        ch.samples.push_back(to_sample(*frame));
        ch.long_gap_after.push_back(false);
        last_seq = seq;
    }
    return ch;
}

} // namespace

std::string_view to_string(Task task) {
    return task == Task::Walk ? "walk" : "dual";
}

Task parse_task(std::string_view s) {
    if (s == "walk") {
        return Task::Walk;
    }
    if (s == "dual") {
        return Task::DualTask;
    }
    throw Error(Errc::SchemaMismatch, "unknown task '" + std::string(s) + "' (expected walk or dual)");
}

Vec3 SensorFrame::accel_g() const { return to_units(accel, kAccelFullScaleG); }
Vec3 SensorFrame::gyro_dps() const { return to_units(gyro, kGyroFullScaleDps); }
Vec3 SensorFrame::mag_ut() const { return to_units(mag, kMagFullScaleUt); }

SensorFrame quantize(DeviceId device, std::uint16_t seq, std::uint32_t timestamp_ms, const ImuSample& s) {
    SensorFrame f;
    f.device = device;
    f.seq = seq;
    f.timestamp_ms = timestamp_ms;
    f.accel = to_counts(s.accel, kAccelFullScaleG, "accel");
    f.gyro = to_counts(s.gyro, kGyroFullScaleDps, "gyro");
    f.mag = to_counts(s.mag, kMagFullScaleUt, "mag");
    return f;
}

std::uint8_t crc8(std::span<const std::uint8_t> bytes) {
    std::uint8_t crc = 0x00;
    for (std::uint8_t b : bytes) {
        crc ^= b;
        for (int bit = 0; bit < 8; ++bit) {
            crc = static_cast<std::uint8_t>((crc & 0x80) ? (crc << 1) ^ 0x07 : crc << 1);
        }
    }
    return crc;
}

std::array<std::uint8_t, kFrameSize> encode_frame(const SensorFrame& frame) {
    const auto device = static_cast<std::uint8_t>(frame.device);
    if (!valid_device(device)) {
        throw Error(Errc::EncodingError, "device id " + std::to_string(device) + " is not 1 or 2");
    }
    std::array<std::uint8_t, kFrameSize> out{};
    out[0] = kMagic;
    out[1] = device;
    put_u16(&out[2], frame.seq);
    put_u32(&out[4], frame.timestamp_ms);
    std::size_t pos = 8;
    for (const Counts3* axis : {&frame.accel, &frame.gyro, &frame.mag}) {
        for (std::int16_t v : *axis) {
            put_u16(&out[pos], static_cast<std::uint16_t>(v));
            pos += 2;
        }
    }
    out[kCrcOffset] = crc8(std::span(out).first(kCrcOffset));
    return out;
}

std::string_view to_string(DecodeStatus status) {
    switch (status) {
    case DecodeStatus::Ok: return "Ok";
    case DecodeStatus::BadMagic: return "BadMagic";
    case DecodeStatus::BadCrc: return "BadCrc";
    case DecodeStatus::BadDeviceId: return "BadDeviceId";
    case DecodeStatus::Truncated: return "Truncated";
    }
    return "Unknown";
}

DecodeResult decode_frame(std::span<const std::uint8_t> buf) {
    if (buf.empty()) {
        return {DecodeStatus::Truncated, std::nullopt};
    }
    if (buf[0] != kMagic) {
        return {DecodeStatus::BadMagic, std::nullopt};
    }
    if (buf.size() < kFrameSize) {
        return {DecodeStatus::Truncated, std::nullopt};
    }
    if (crc8(buf.first(kCrcOffset)) != buf[kCrcOffset]) {
        return {DecodeStatus::BadCrc, std::nullopt};
    }
    if (!valid_device(buf[1])) {
        return {DecodeStatus::BadDeviceId, std::nullopt};
    }
    SensorFrame f;
    f.device = static_cast<DeviceId>(buf[1]);
    f.seq = get_u16(&buf[2]);
    f.timestamp_ms = get_u32(&buf[4]);
    std::size_t pos = 8;
    for (Counts3* axis : {&f.accel, &f.gyro, &f.mag}) {
        for (std::int16_t& v : *axis) {
            v = static_cast<std::int16_t>(get_u16(&buf[pos]));
            pos += 2;
        }
    }
    return {DecodeStatus::Ok, f};
}

std::vector<SensorFrame> StreamDecoder::feed(std::span<const std::uint8_t> bytes) {
    pending_.insert(pending_.end(), bytes.begin(), bytes.end());
    std::vector<SensorFrame> out;
    std::size_t pos = 0;
    while (pos < pending_.size()) {
        if (pending_[pos] != kMagic) {
            if (!in_garbage_) {
                ++counters_.bad_magic;
                in_garbage_ = true;
            }
            ++counters_.skipped_bytes;
            ++pos;
            continue;
        }
        in_garbage_ = false;
        if (pending_.size() - pos < kFrameSize) {
            break;
        }
        const auto result = decode_frame(std::span(pending_).subspan(pos, kFrameSize));
        switch (result.status) {
        case DecodeStatus::Ok:
            out.push_back(*result.frame);
            ++counters_.frames;
            pos += kFrameSize;
            continue;
        case DecodeStatus::BadCrc: ++counters_.bad_crc; break;
        case DecodeStatus::BadDeviceId: ++counters_.bad_device; break;
        case DecodeStatus::BadMagic:
        case DecodeStatus::Truncated: break;
        }
        // resync: drop the rejected magic byte and rescan
        ++counters_.skipped_bytes;
        ++pos;
    }
    pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(pos));
    return out;
}

void StreamDecoder::finish() {
    if (!pending_.empty()) {
        ++counters_.truncated;
        counters_.skipped_bytes += pending_.size();
        pending_.clear();
    }
    in_garbage_ = false;
}

std::vector<SensorFrame> decode_stream(std::span<const std::uint8_t> bytes, DecodeCounters* counters) {
    StreamDecoder decoder;
    auto frames = decoder.feed(bytes);
    decoder.finish();
    if (counters != nullptr) {
        *counters = decoder.counters();
    }
    return frames;
}

double Session::duration_s() const {
    if (t_ms.size() < 2) {
        return 0.0;
    }
    return (t_ms.back() - t_ms.front()) / 1000.0 + 1.0 / sample_rate_hz;
}

bool Session::task_duration_ok() const {
    const double d = duration_s();
    return d >= 50.0 && d <= 70.0;
}

void validate(const Session& s) {
    ensure(s.sample_rate_hz > 0, "session sample rate must be positive");
    ensure(s.left.size() == s.t_ms.size() && s.right.size() == s.t_ms.size(),
           "session channels must match the time base length");
    for (std::size_t i = 1; i < s.t_ms.size(); ++i) {
        ensure(s.t_ms[i] > s.t_ms[i - 1], "session timestamps must be strictly increasing");
    }
}

Session assemble_session(std::span<const SensorFrame> frames, const SessionMeta& meta) {
    if (meta.sample_rate_hz <= 0) {
        throw Error(Errc::InvalidParams, "sample rate must be positive");
    }
    std::vector<SensorFrame> left_frames;
    std::vector<SensorFrame> right_frames;
    for (const auto& f : frames) {
        (f.device == DeviceId::LeftWrist ? left_frames : right_frames).push_back(f);
    }
    if (left_frames.empty()) {
        throw Error(Errc::EmptyChannel, "left wrist produced no frames");
    }
    if (right_frames.empty()) {
        throw Error(Errc::EmptyChannel, "right wrist produced no frames");
    }

    Session s;
    s.subject_id = meta.subject_id;
    s.task = meta.task;
    s.sample_rate_hz = meta.sample_rate_hz;
    s.label = meta.label;

    std::vector<GapEntry> gaps;
    const Channel left = clean_channel(std::move(left_frames), gaps);
    const Channel right = clean_channel(std::move(right_frames), gaps);
    std::sort(gaps.begin(), gaps.end(), [](const GapEntry& a, const GapEntry& b) {
        return std::tie(a.device, a.seq_before) < std::tie(b.device, b.seq_before);
    });
    s.gap_report = std::move(gaps);

    const double start_skew = std::abs(left.t_ms.front() - right.t_ms.front());
    const double end_skew = std::abs(left.t_ms.back() - right.t_ms.back());
    if (start_skew > kMaxClockSkewMs || end_skew > kMaxClockSkewMs) {
        throw Error(Errc::ClockSkew, "wrist streams diverge by " + text::format_sig(std::max(start_skew, end_skew), 6) +
                                         " ms (limit " + text::format_sig(kMaxClockSkewMs, 6) + " ms)");
    }

    // Resample the right channel at the left channel's timestamps.
    std::size_t j = 0;
    for (std::size_t i = 0; i < left.t_ms.size(); ++i) {
        const double t = left.t_ms[i];
        if (t < right.t_ms.front() || t > right.t_ms.back()) {
            continue;
        }
        while (j + 1 < right.t_ms.size() && right.t_ms[j + 1] <= t) {
            ++j;
        }
        ImuSample r;
        if (right.t_ms[j] == t) {
            r = right.samples[j];
        } else {
            if (right.long_gap_after[j]) {
                continue;
            }
            const double f = (t - right.t_ms[j]) / (right.t_ms[j + 1] - right.t_ms[j]);
            r = lerp(right.samples[j], right.samples[j + 1], f);
        }
        s.t_ms.push_back(t);
        s.left.push_back(left.samples[i]);
        s.right.push_back(r);
    }
    if (s.t_ms.empty()) {
        throw Error(Errc::EmptyChannel, "wrist streams do not overlap in time");
    }
    validate(s);
    return s;
}

std::vector<SensorFrame> session_to_frames(const Session& s, std::uint16_t first_seq) {
    std::vector<SensorFrame> out;
    out.reserve(2 * s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto seq = static_cast<std::uint16_t>(first_seq + i);
        const auto t = static_cast<std::uint32_t>(std::llround(s.t_ms[i]));
        out.push_back(quantize(DeviceId::LeftWrist, seq, t, s.left[i]));
        out.push_back(quantize(DeviceId::RightWrist, seq, t, s.right[i]));
    }
    return out;
}

std::vector<std::uint8_t> frames_to_bytes(std::span<const SensorFrame> frames) {
    std::vector<std::uint8_t> out;
    out.reserve(frames.size() * kFrameSize);
    for (const auto& f : frames) {
        const auto bytes = encode_frame(f);
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    return out;
}

const std::vector<std::string>& session_columns() {
    static const std::vector<std::string> columns = [] {
        std::vector<std::string> c;
        for (const char* side : {"left", "right"}) {
            for (const char* sensor : {"a", "g", "m"}) {
                for (const char* axis : {"x", "y", "z"}) {
                    c.push_back(std::string(sensor) + axis + "_" + side);
                }
            }
        }
        return c;
    }();
    return columns;
}

std::string session_to_csv(const Session& s, std::string_view extra) {
    validate(s);
    std::string out = "#gaitlab-session,v1,subject=" + s.subject_id + ",task=" + std::string(to_string(s.task)) +
                      ",rate_hz=" + std::to_string(s.sample_rate_hz) +
                      ",label=" + (s.label ? std::to_string(static_cast<int>(*s.label)) : std::string("?"));
    if (!extra.empty()) {
        out += ",";
        out += extra;
    }
    out += "\nt_ms";
    for (const auto& c : session_columns()) {
        out += "," + c;
    }
    out += '\n';
    for (std::size_t i = 0; i < s.size(); ++i) {
        out += text::format_sig(s.t_ms[i], 12);
        for (const ImuSample* side : {&s.left[i], &s.right[i]}) {
            for (const Vec3* v : {&side->accel, &side->gyro, &side->mag}) {
                for (double x : *v) {
                    out += ',';
                    out += text::format_sig(x, 6);
                }
            }
        }
        out += '\n';
    }
    return out;
}

Session session_from_csv(std::string_view body) {
    auto all = text::lines(body);
    while (!all.empty() && text::trim(all.back()).empty()) {
        all.pop_back();
    }
    if (all.empty() || !all[0].starts_with("#gaitlab-session")) {
        throw Error::schema("#gaitlab-session");
    }
    const auto meta_fields = text::split(all[0], ',');
    if (meta_fields.size() < 2 || meta_fields[1] != "v1") {
        throw Error(Errc::VersionMismatch, "session CSV version must be v1");
    }
    std::map<std::string, std::string> meta;
    for (std::size_t i = 2; i < meta_fields.size(); ++i) {
        const auto eq = meta_fields[i].find('=');
        if (eq != std::string::npos) {
            meta[meta_fields[i].substr(0, eq)] = meta_fields[i].substr(eq + 1);
        }
    }
    for (const char* key : {"subject", "task", "rate_hz", "label"}) {
        if (!meta.count(key)) {
            throw Error::schema(key);
        }
    }

    Session s;
    s.subject_id = meta["subject"];
    s.task = parse_task(meta["task"]);
    const auto rate = text::parse_int(meta["rate_hz"]);
    if (!rate || *rate <= 0) {
        throw Error::schema("rate_hz");
    }
    s.sample_rate_hz = static_cast<int>(*rate);
    if (meta["label"] == "0") {
        s.label = Label::Control;
    } else if (meta["label"] == "1") {
        s.label = Label::PD;
    } else if (meta["label"] != "?") {
        throw Error::schema("label");
    }

    if (all.size() < 2) {
        throw Error::schema("t_ms");
    }
    const auto header = text::split(all[1], ',');
    std::map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) {
        position[std::string(text::trim(header[i]))] = i;
    }
    std::vector<std::string> expected{"t_ms"};
    expected.insert(expected.end(), session_columns().begin(), session_columns().end());
    std::vector<std::size_t> index;
    for (const auto& col : expected) {
        auto it = position.find(col);
        if (it == position.end()) {
            throw Error::schema(col);
        }
        index.push_back(it->second);
    }
    if (header.size() != expected.size()) {
        for (const auto& [name, pos] : position) {
            if (std::find(expected.begin(), expected.end(), name) == expected.end()) {
                throw Error::schema(name);
            }
        }
        throw Error::schema("duplicate column");
    }

    for (std::size_t line = 2; line < all.size(); ++line) {
        const auto fields = text::split(all[line], ',');
        if (fields.size() != header.size()) {
            throw Error(Errc::SchemaMismatch, "line " + std::to_string(line + 1) + " has " +
                                                  std::to_string(fields.size()) + " fields, expected " +
                                                  std::to_string(header.size()));
        }
        std::vector<double> v(expected.size());
        for (std::size_t c = 0; c < expected.size(); ++c) {
            const auto d = text::parse_double(fields[index[c]]);
            if (!d || !std::isfinite(*d)) {
                throw Error(Errc::SchemaMismatch, "line " + std::to_string(line + 1) + " column '" + expected[c] +
                                                      "' is not a finite number");
            }
            v[c] = *d;
        }
        s.t_ms.push_back(v[0]);
        ImuSample l;
        ImuSample r;
        for (int a = 0; a < 3; ++a) {
            l.accel[a] = v[1 + a];
            l.gyro[a] = v[4 + a];
            l.mag[a] = v[7 + a];
            r.accel[a] = v[10 + a];
            r.gyro[a] = v[13 + a];
            r.mag[a] = v[16 + a];
        }
        s.left.push_back(l);
        s.right.push_back(r);
    }
    if (s.t_ms.empty()) {
        throw Error(Errc::EmptyChannel, "session CSV has no samples");
    }
    for (std::size_t i = 1; i < s.t_ms.size(); ++i) {
        if (s.t_ms[i] <= s.t_ms[i - 1]) {
            throw Error(Errc::SchemaMismatch, "t_ms not strictly increasing at data row " + std::to_string(i + 1));
        }
    }
    return s;
}

} // namespace gaitlab::telemetry
