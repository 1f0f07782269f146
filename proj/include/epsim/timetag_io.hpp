// Time-tag file format.
//
// Binary layout (little-endian):
//   magic   "EPTT" (4 bytes)
//   u16     format version (1)
//   u16     reserved (0)
//   u64     seed
//   u64     scenario hash
//   u64     record count
//   records u32 detector id, u64 timestamp in ps
//
// A delimited-text export (detector <TAB> timestamp_ps) is also provided.

#pragma once

#include "epsim/coincidence.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace epsim {

struct TimeTagFileHeader {
    std::uint16_t version = 1;
    std::uint64_t seed = 0;
    std::uint64_t scenario_hash = 0;
    std::uint64_t record_count = 0;
};

/// Merge streams into detector-id/timestamp records ordered by time
/// (ties by detector id) and write them with the header.
void write_timetags(std::ostream& out, const TimeTagFileHeader& header,
                    const std::vector<TimeTagStream>& streams);
void write_timetags_file(const std::string& path, const TimeTagFileHeader& header,
                         const std::vector<TimeTagStream>& streams);

struct TimeTagFile {
    TimeTagFileHeader header;
    std::vector<TimeTagStream> streams;  // one per detector id, sorted
};

TimeTagFile read_timetags(std::istream& in);
TimeTagFile read_timetags_file(const std::string& path);

void write_timetags_text(std::ostream& out, const std::vector<TimeTagStream>& streams);

}  // namespace epsim
