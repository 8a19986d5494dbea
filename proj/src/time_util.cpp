#include "flexbid/time_util.hpp"

#include <cstdio>
#include <stdexcept>

namespace flexbid {

namespace {

// Days since 1970-01-01 for a civil date (Howard Hinnant's algorithm).
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yr = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yr + (m <= 2));
}

bool valid_date(int y, int m, int d) {
    if (m < 1 || m > 12 || d < 1) return false;
    static const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dm = mdays[m - 1];
    if (m == 2 && ((y % 4 == 0 && y % 100 != 0) || y % 400 == 0)) dm = 29;
    return d <= dm;
}

}  // namespace

int64_t to_epoch_seconds(const CivilTime& c) {
    return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 +
           c.minute * 60 + c.second;
}

CivilTime from_epoch_seconds(int64_t t) {
    CivilTime c;
    int64_t days = t / 86400;
    int64_t rem = t % 86400;
    if (rem < 0) {
        rem += 86400;
        days -= 1;
    }
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

int64_t parse_timestamp(const std::string& text) {
    std::string s = text;
    if (!s.empty() && s.back() == 'Z') s.pop_back();
    const int len = static_cast<int>(s.size());
    CivilTime c;
    char sep = 'T';
    int n = -1;
    bool matched = false;
    std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d%n", &c.year, &c.month, &c.day,
                &sep, &c.hour, &c.minute, &c.second, &n);
    if (n == len) matched = true;
    if (!matched) {
        n = -1;
        std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d%n", &c.year, &c.month, &c.day,
                    &sep, &c.hour, &c.minute, &n);
        if (n == len) {
            matched = true;
            c.second = 0;
        }
    }
    if (!matched) {
        n = -1;
        std::sscanf(s.c_str(), "%d-%d-%d%n", &c.year, &c.month, &c.day, &n);
        if (n == len) {
            matched = true;
            sep = 'T';
            c.hour = c.minute = c.second = 0;
        }
    }
    if (!matched) throw std::invalid_argument("bad timestamp: '" + text + "'");
    if (sep != 'T' && sep != ' ')
        throw std::invalid_argument("bad timestamp separator: '" + text + "'");
    if (!valid_date(c.year, c.month, c.day) || c.hour > 23 || c.hour < 0 ||
        c.minute > 59 || c.minute < 0 || c.second > 59 || c.second < 0)
        throw std::invalid_argument("timestamp out of range: '" + text + "'");
    return to_epoch_seconds(c);
}

std::string format_timestamp(int64_t t) {
    CivilTime c = from_epoch_seconds(t);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year,
                  c.month, c.day, c.hour, c.minute, c.second);
    return buf;
}

std::string format_date(int64_t t) {
    CivilTime c = from_epoch_seconds(t);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

}  // namespace flexbid
