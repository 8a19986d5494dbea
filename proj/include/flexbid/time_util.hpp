#pragma once

#include <cstdint>
#include <string>

namespace flexbid {

// Civil timestamp handling for CSV inputs. Timestamps are naive (no zone);
// values are seconds since 1970-01-01T00:00:00.
struct CivilTime {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    int second = 0;
};

// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM", "YYYY-MM-DD HH:MM" and the same
// with ":SS" and an optional trailing 'Z'. Throws std::invalid_argument.
int64_t parse_timestamp(const std::string& text);

int64_t to_epoch_seconds(const CivilTime& c);
CivilTime from_epoch_seconds(int64_t t);

// "YYYY-MM-DDTHH:MM:SS"
std::string format_timestamp(int64_t t);
// "YYYY-MM-DD"
std::string format_date(int64_t t);

}  // namespace flexbid
