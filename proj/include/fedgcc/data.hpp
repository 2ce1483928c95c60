#pragma once

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedgcc/model.hpp"
#include "fedgcc/numerics.hpp"
#include "fedgcc/rng.hpp"

namespace fedgcc {

// One client's traffic series, one volume per 10-minute slot. Slot 0 is the
// series start; slot indices are plain integers, never timestamps.
struct TrafficSeries {
    std::string client_id;
    std::vector<double> volumes;

    std::size_t slot_count() const { return volumes.size(); }
};

using SeriesMap = std::map<std::string, TrafficSeries>;

// 10-minute cadence: 144 slots per day, 1008 per week.
inline constexpr std::size_t kSlotsPerDay = 144;
inline constexpr std::size_t kSlotsPerWeek = 1008;

struct SplitSpec {
    std::size_t train_slots;
};

/// First seven weeks when the series is long enough, otherwise 7/8 of it.
inline std::size_t default_train_slots(std::size_t slot_count) {
    if (slot_count >= 8 * kSlotsPerWeek) return 7 * kSlotsPerWeek;
    return slot_count * 7 / 8;
}

struct WindowedDataset {
    Matrix inputs;          // n x p
    Vec targets;            // length n
    std::size_t window = 0;
    double mean = 0.0;      // standardization actually applied
    double std = 1.0;

    std::size_t size() const { return targets.size(); }
};

namespace detail {

inline std::string csv_field_err(const std::string& path, std::size_t line,
                                 const std::string& what) {
    std::ostringstream os;
    os << "malformed-row: " << path << ":" << line << ": " << what;
    return os.str();
}

inline bool parse_double(std::string_view s, double& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

inline bool parse_u64(std::string_view s, std::uint64_t& out) {
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace detail

// Loads `slot,client_id,volume` CSV. Slots must be contiguous per client
// starting at 0; volumes finite and >= 0. Errors carry the offending line
// or client so bad files are diagnosable.
inline SeriesMap load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("missing-file: cannot open " + path);

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("malformed-row: " + path + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "slot,client_id,volume")
        throw std::runtime_error("malformed-row: " + path +
                                 ":1: expected header slot,client_id,volume");

    // slot -> volume per client, validated for contiguity afterwards
    std::map<std::string, std::map<std::uint64_t, double>> raw;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        const auto c1 = line.find(',');
        const auto c2 = c1 == std::string::npos ? std::string::npos
                                                : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos ||
            line.find(',', c2 + 1) != std::string::npos)
            throw std::runtime_error(
                detail::csv_field_err(path, line_no, "expected 3 fields"));

        const std::string_view slot_s(line.data(), c1);
        const std::string client(line.substr(c1 + 1, c2 - c1 - 1));
        const std::string_view vol_s(line.data() + c2 + 1, line.size() - c2 - 1);

        std::uint64_t slot = 0;
        if (!detail::parse_u64(slot_s, slot))
            throw std::runtime_error(
                detail::csv_field_err(path, line_no, "bad slot index"));
        if (client.empty())
            throw std::runtime_error(
                detail::csv_field_err(path, line_no, "empty client_id"));
        double vol = 0.0;
        if (!detail::parse_double(vol_s, vol) || !std::isfinite(vol))
            throw std::runtime_error(
                detail::csv_field_err(path, line_no, "bad volume"));
        if (vol < 0.0)
            throw std::runtime_error("negative-volume: " + path + ":" +
                                     std::to_string(line_no));

        auto [it, inserted] = raw[client].emplace(slot, vol);
        if (!inserted)
            throw std::runtime_error("gap-in-slots: client " + client +
                                     ": duplicate slot " + std::to_string(slot));
    }
    if (raw.empty())
        throw std::runtime_error("malformed-row: " + path + ": no data rows");

    SeriesMap out;
    for (auto& [client, slots] : raw) {
        TrafficSeries ts;
        ts.client_id = client;
        ts.volumes.reserve(slots.size());
        std::uint64_t expect = 0;
        for (const auto& [slot, vol] : slots) {
            if (slot != expect)
                throw std::runtime_error("gap-in-slots: client " + client +
                                         ": expected slot " +
                                         std::to_string(expect) + ", found " +
                                         std::to_string(slot));
            ts.volumes.push_back(vol);
            ++expect;
        }
        out.emplace(client, std::move(ts));
    }
    return out;
}

inline void write_csv(const SeriesMap& series, const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // binary: LF on every platform
    if (!out) throw std::runtime_error("io-error: cannot write " + path);
    out << "slot,client_id,volume\n";
    for (const auto& [client, ts] : series) {
        for (std::size_t slot = 0; slot < ts.volumes.size(); ++slot) {
            out << slot << ',' << client << ','
                << format_double(ts.volumes[slot]) << '\n';
        }
    }
    if (!out) throw std::runtime_error("io-error: write failed for " + path);
}

// Per-client sinusoid parameters for the synthetic generator. At
// heterogeneity 0 every client gets the same base parameters; the spread
// grows (one-sidedly, so mean amplitude grows too) with heterogeneity.
struct SyntheticClientParams {
    double amp_daily;
    double phase_daily;
    double amp_weekly;
    double phase_weekly;
};

inline SyntheticClientParams draw_synthetic_params(RngStream& rng,
                                                   double heterogeneity) {
    SyntheticClientParams p{};
    const double ua = rng.next_uniform();
    const double up = rng.next_uniform();
    const double ub = rng.next_uniform();
    const double uq = rng.next_uniform();
    p.amp_daily = 4.0 * (1.0 + heterogeneity * ua);
    p.phase_daily = 2.0 * std::numbers::pi * heterogeneity * up;
    p.amp_weekly = 1.5 * (1.0 + heterogeneity * ub);
    p.phase_weekly = 2.0 * std::numbers::pi * heterogeneity * uq;
    return p;
}

// base + daily sinusoid + weekly sinusoid + Gaussian noise, clipped at 0.
// Client m draws from stream (seed, kSyntheticBase + m): four uniforms for
// the parameters, then one normal per slot.
inline SeriesMap generate_synthetic(std::size_t num_clients,
                                    std::size_t slot_count, std::uint64_t seed,
                                    double heterogeneity) {
    if (num_clients < 2)
        throw std::invalid_argument("invalid-argument: need at least 2 clients");
    if (slot_count < 2 * kSlotsPerDay)
        throw std::invalid_argument(
            "invalid-argument: need at least two days of slots (288)");
    if (!(heterogeneity >= 0.0 && heterogeneity <= 1.0))
        throw std::invalid_argument(
            "invalid-argument: heterogeneity must be in [0, 1]");

    constexpr double kBase = 8.0;
    constexpr double kNoiseSigma = 0.4;

    int width = 2;
    for (std::size_t v = 100; v <= num_clients - 1; v *= 10) ++width;

    SeriesMap out;
    for (std::size_t m = 0; m < num_clients; ++m) {
        RngStream rng(seed, streams::kSyntheticBase + m);
        const SyntheticClientParams p = draw_synthetic_params(rng, heterogeneity);

        std::string id = std::to_string(m);
        id.insert(0, static_cast<std::size_t>(width) - std::min<std::size_t>(
                         static_cast<std::size_t>(width), id.size()),
                  '0');
        id = "client_" + id;

        TrafficSeries ts;
        ts.client_id = id;
        ts.volumes.resize(slot_count);
        for (std::size_t s = 0; s < slot_count; ++s) {
            const double day = 2.0 * std::numbers::pi *
                               static_cast<double>(s % kSlotsPerDay) /
                               static_cast<double>(kSlotsPerDay);
            const double week = 2.0 * std::numbers::pi *
                                static_cast<double>(s % kSlotsPerWeek) /
                                static_cast<double>(kSlotsPerWeek);
            double v = kBase + p.amp_daily * std::sin(day + p.phase_daily) +
                       p.amp_weekly * std::sin(week + p.phase_weekly) +
                       kNoiseSigma * rng.next_normal();
            ts.volumes[s] = v > 0.0 ? v : 0.0;
        }
        out.emplace(id, std::move(ts));
    }
    return out;
}

struct StandardizedSeries {
    TrafficSeries series;
    double mean;
    double std;
};

// Standardizes the whole series with mean/std computed over the training
// slots only, so test slots never leak into the statistics.
inline StandardizedSeries standardize(const TrafficSeries& ts,
                                      const SplitSpec& split) {
    if (split.train_slots == 0 || split.train_slots >= ts.slot_count())
        throw std::invalid_argument(
            "invalid-argument: train_slots must be in (0, slot_count)");
    const auto stats = mean_std(
        std::span<const double>(ts.volumes.data(), split.train_slots));
    if (stats.std == 0.0)
        throw std::runtime_error("zero-variance-series: client " + ts.client_id);

    StandardizedSeries out;
    out.series.client_id = ts.client_id;
    out.series.volumes.resize(ts.slot_count());
    for (std::size_t i = 0; i < ts.slot_count(); ++i)
        out.series.volumes[i] = (ts.volumes[i] - stats.mean) / stats.std;
    out.mean = stats.mean;
    out.std = stats.std;
    return out;
}

struct TrainTest {
    WindowedDataset train;
    WindowedDataset test;
};

// Sliding windows over the standardized series. Training targets live at
// slots [p, train_slots); test targets at [max(p, train_slots), L). Test
// windows may reach back into trailing training slots for context, so every
// slot from train_slots on gets a prediction; no training target ever lies
// in the test region.
inline TrainTest make_windows(const StandardizedSeries& std_series,
                              std::size_t window, const SplitSpec& split) {
    const std::vector<double>& v = std_series.series.volumes;
    const std::size_t L = v.size();
    if (window < 1) throw std::invalid_argument("series-too-short: window must be >= 1");
    if (L < window + 1)
        throw std::runtime_error("series-too-short: client " +
                                 std_series.series.client_id + " has " +
                                 std::to_string(L) + " slots, needs " +
                                 std::to_string(window + 1));
    if (split.train_slots == 0 || split.train_slots >= L)
        throw std::invalid_argument(
            "invalid-argument: train_slots must be in (0, slot_count)");

    const auto build = [&](std::size_t first_target, std::size_t last_target) {
        WindowedDataset ds;
        ds.window = window;
        ds.mean = std_series.mean;
        ds.std = std_series.std;
        const std::size_t n =
            last_target > first_target ? last_target - first_target : 0;
        ds.inputs = Matrix(n, window);
        ds.targets.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t t = first_target + i;
            for (std::size_t j = 0; j < window; ++j)
                ds.inputs.at(i, j) = v[t - window + j];
            ds.targets[i] = v[t];
        }
        return ds;
    };

    TrainTest out;
    const std::size_t first_test = std::max(window, split.train_slots);
    out.train = build(window, std::min(split.train_slots, L));
    out.test = build(first_test, L);
    return out;
}

/// FNV-1a over client ids and raw volume bits; used to prove that compared
/// runs really saw the same data.
inline std::uint64_t series_hash(const SeriesMap& series) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    const auto eat = [&h](const unsigned char* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& [id, ts] : series) {
        eat(reinterpret_cast<const unsigned char*>(id.data()), id.size());
        const unsigned char zero = 0;
        eat(&zero, 1);
        for (double v : ts.volumes) {
            const auto bits = std::bit_cast<std::uint64_t>(v);
            unsigned char b[8];
            for (int i = 0; i < 8; ++i)
                b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
            eat(b, 8);
        }
    }
    return h;
}

}  // namespace fedgcc
