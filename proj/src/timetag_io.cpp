#include "epsim/timetag_io.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace epsim {

namespace {

constexpr char kMagic[4] = {'E', 'P', 'T', 'T'};

void put_u16(std::ostream& out, std::uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint16_t get_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
}

struct Record {
    std::uint32_t detector;
    std::int64_t t_ps;
};

std::vector<Record> merge_records(const std::vector<TimeTagStream>& streams) {
    std::vector<Record> recs;
    std::size_t total = 0;
    for (const auto& s : streams) total += s.size();
    recs.reserve(total);
    for (const auto& s : streams)
        for (const std::int64_t t : s.timestamps_ps) recs.push_back({s.detector_id, t});
    std::sort(recs.begin(), recs.end(), [](const Record& a, const Record& b) {
        return a.t_ps != b.t_ps ? a.t_ps < b.t_ps : a.detector < b.detector;
    });
    return recs;
}

}  // namespace

void write_timetags(std::ostream& out, const TimeTagFileHeader& header,
                    const std::vector<TimeTagStream>& streams) {
    const auto recs = merge_records(streams);
    out.write(kMagic, 4);
    put_u16(out, header.version);
    put_u16(out, 0);
    put_u64(out, header.seed);
    put_u64(out, header.scenario_hash);
    put_u64(out, static_cast<std::uint64_t>(recs.size()));
    for (const auto& r : recs) {
        put_u32(out, r.detector);
        put_u64(out, static_cast<std::uint64_t>(r.t_ps));
    }
}

void write_timetags_file(const std::string& path, const TimeTagFileHeader& header,
                         const std::vector<TimeTagStream>& streams) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_timetags(out, header, streams);
    if (!out) throw std::runtime_error("write failed: " + path);
}

TimeTagFile read_timetags(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a time-tag file (bad magic)");
    TimeTagFile f;
    f.header.version = get_u16(in);
    if (f.header.version != 1) throw std::runtime_error("unsupported time-tag format version");
    get_u16(in);
    f.header.seed = get_u64(in);
    f.header.scenario_hash = get_u64(in);
    f.header.record_count = get_u64(in);

    std::map<std::uint32_t, TimeTagStream> by_det;
    for (std::uint64_t i = 0; i < f.header.record_count; ++i) {
        const std::uint32_t det = get_u32(in);
        const std::uint64_t t = get_u64(in);
        if (!in) throw std::runtime_error("truncated time-tag file");
        auto& s = by_det[det];
        s.detector_id = det;
        s.timestamps_ps.push_back(static_cast<std::int64_t>(t));
    }
    for (auto& [det, s] : by_det) f.streams.push_back(std::move(s));
    return f;
}

TimeTagFile read_timetags_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    return read_timetags(in);
}

void write_timetags_text(std::ostream& out, const std::vector<TimeTagStream>& streams) {
    out << "detector\ttimestamp_ps\n";
    for (const auto& r : merge_records(streams)) out << r.detector << '\t' << r.t_ps << '\n';
}

}  // namespace epsim
