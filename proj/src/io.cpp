#include "dvssim/io.hpp"

#include "dvssim/error.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace dvssim {

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream f(path, mode | std::ios::trunc);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    return f;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
    std::ifstream f(path, mode);
    if (!f) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    return f;
}

void check_header(const CsvTable& t, const std::vector<std::string>& expected, const std::filesystem::path& path) {
    if (t.header != expected) {
        std::string want;
        for (const auto& h : expected) {
            want += (want.empty() ? "" : ",") + h;
        }
        throw IoError("'" + path.string() + "' does not have the header " + want);
    }
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) {
        return {};
    }
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

} // namespace

std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return {buf.data(), r.ptr};
}

CsvTable read_csv(const std::filesystem::path& path) {
    auto f = open_in(path);
    CsvTable t;
    std::string line;
    if (!std::getline(f, line)) {
        throw IoError("'" + path.string() + "' is empty");
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            t.header.push_back(trim(cell));
        }
    }
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            const auto c = trim(cell);
            double v = 0.0;
            const auto r = std::from_chars(c.data(), c.data() + c.size(), v);
            if (r.ec != std::errc() || r.ptr != c.data() + c.size()) {
                throw IoError("'" + path.string() + "' line " + std::to_string(lineno) + ": bad number '" + c + "'");
            }
            row.push_back(v);
        }
        if (row.size() != t.header.size()) {
            throw IoError("'" + path.string() + "' line " + std::to_string(lineno) + ": expected " +
                          std::to_string(t.header.size()) + " columns");
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    auto f = open_out(path);
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        out += (i ? "," : "") + table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out += ',';
            }
            out += format_number(row[i]);
        }
        out += '\n';
    }
    f << out;
    if (!f) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

Waveform read_waveform_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    check_header(t, {"t_s", "i_pd_a"}, path);
    Waveform w;
    w.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        if (!(r[1] >= 0.0)) {
            throw IoError("'" + path.string() + "' contains a negative photocurrent");
        }
        w.push_back({r[0], r[1]});
    }
    return w;
}

void write_waveform_csv(const std::filesystem::path& path, const Waveform& w) {
    CsvTable t{{"t_s", "i_pd_a"}, {}};
    for (const auto& s : w) {
        t.rows.push_back({s.t, s.i_pd});
    }
    write_csv(path, t);
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TracePoint>& trace) {
    CsvTable t{{"t_s", "v_pr_v", "v_sf_v", "v_diff_v"}, {}};
    t.rows.reserve(trace.size());
    for (const auto& p : trace) {
        t.rows.push_back({p.t, p.v_pr, p.v_sf, p.v_diff});
    }
    write_csv(path, t);
}

void write_events_csv(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
    CsvTable t{{"t_s", "polarity"}, {}};
    t.rows.reserve(events.size());
    for (const auto& e : events) {
        t.rows.push_back({e.t, static_cast<double>(e.polarity)});
    }
    write_csv(path, t);
}

std::vector<EventRecord> read_events_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    check_header(t, {"t_s", "polarity"}, path);
    std::vector<EventRecord> out;
    for (const auto& r : t.rows) {
        if (r[1] != 1.0 && r[1] != -1.0) {
            throw IoError("'" + path.string() + "' has a polarity other than 1 or -1");
        }
        out.push_back({r[0], r[1] > 0 ? Polarity::On : Polarity::Off});
    }
    return out;
}

namespace {

template <typename T>
void put_le(std::string& buf, T v) {
    using U = std::make_unsigned_t<T>;
    auto u = static_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        buf.push_back(static_cast<char>(u & 0xFF));
        u = static_cast<U>(u >> 8);
    }
}

template <typename T>
T get_le(const unsigned char* p) {
    using U = std::make_unsigned_t<T>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        u = static_cast<U>(u | (static_cast<U>(p[i]) << (8 * i)));
    }
    return static_cast<T>(u);
}

constexpr std::size_t kRecordSize = 9;

} // namespace

void write_events_binary(const std::filesystem::path& path, const std::vector<EventRecord>& events) {
    std::string buf = "DVSE";
    put_le<std::uint32_t>(buf, kEventFileVersion);
    buf.reserve(buf.size() + events.size() * kRecordSize);
    for (const auto& e : events) {
        if (!(e.t >= 0.0)) {
            throw IoError("negative event timestamp cannot be stored in '" + path.string() + "'");
        }
        put_le<std::uint64_t>(buf, static_cast<std::uint64_t>(std::llround(e.t * 1e9)));
        put_le<std::int8_t>(buf, static_cast<std::int8_t>(e.polarity));
    }
    auto f = open_out(path, std::ios::out | std::ios::binary);
    f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!f) {
        throw IoError("write to '" + path.string() + "' failed");
    }
}

std::vector<EventRecord> read_events_binary(const std::filesystem::path& path) {
    auto f = open_in(path, std::ios::in | std::ios::binary);
    const std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (data.size() < 8 || data.compare(0, 4, "DVSE") != 0) {
        throw IoError("'" + path.string() + "' is not an event file");
    }
    const auto* p = reinterpret_cast<const unsigned char*>(data.data());
    const auto version = get_le<std::uint32_t>(p + 4);
    if (version != kEventFileVersion) {
        throw IoError("'" + path.string() + "' has unsupported version " + std::to_string(version));
    }
    if ((data.size() - 8) % kRecordSize != 0) {
        throw IoError("'" + path.string() + "' is truncated");
    }
    std::vector<EventRecord> out;
    for (std::size_t off = 8; off < data.size(); off += kRecordSize) {
        const auto ns = get_le<std::uint64_t>(p + off);
        const auto pol = get_le<std::int8_t>(p + off + 8);
        if (pol != 1 && pol != -1) {
            throw IoError("'" + path.string() + "' has a polarity other than 1 or -1");
        }
        out.push_back({static_cast<double>(ns) * 1e-9, pol > 0 ? Polarity::On : Polarity::Off});
    }
    return out;
}

void write_psd_csv(const std::filesystem::path& path, const std::vector<PsdSample>& psd) {
    CsvTable t{{"f_hz", "psd_v2_per_hz"}, {}};
    for (const auto& s : psd) {
        t.rows.push_back({s.f_hz, s.psd});
    }
    write_csv(path, t);
}

std::vector<PsdSample> read_psd_csv(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    check_header(t, {"f_hz", "psd_v2_per_hz"}, path);
    std::vector<PsdSample> out;
    for (const auto& r : t.rows) {
        out.push_back({r[0], r[1]});
    }
    return out;
}

} // namespace dvssim
