#pragma once

// File formats: CSV tables with a header line, and the binary event stream
// (magic "DVSE", u32 version, then little-endian u64 ns + i8 polarity records).

#include "dvssim/event_gen.hpp"
#include "dvssim/pixel_sim.hpp"
#include "dvssim/welch.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace dvssim {

inline constexpr std::uint32_t kEventFileVersion = 1;

/// Shortest decimal text that reads back to the same double.
[[nodiscard]] std::string format_number(double v);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV. Throws IoError (with the path) on open or parse failure.
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

/// Writes a numeric CSV with shortest round-trip number formatting.
void write_csv(const std::filesystem::path& path, const CsvTable& table);

[[nodiscard]] Waveform read_waveform_csv(const std::filesystem::path& path);
void write_waveform_csv(const std::filesystem::path& path, const Waveform& w);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace);

void write_events_csv(const std::filesystem::path& path, const std::vector<EventRecord>& events);
[[nodiscard]] std::vector<EventRecord> read_events_csv(const std::filesystem::path& path);

void write_events_binary(const std::filesystem::path& path, const std::vector<EventRecord>& events);
[[nodiscard]] std::vector<EventRecord> read_events_binary(const std::filesystem::path& path);

void write_psd_csv(const std::filesystem::path& path, const std::vector<PsdSample>& psd);
[[nodiscard]] std::vector<PsdSample> read_psd_csv(const std::filesystem::path& path);

} // namespace dvssim
