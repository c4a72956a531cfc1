#include "bundlegen/types.hpp"

#include <cstdio>

namespace bundlegen {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static const int lengths[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

}  // namespace

bool Date::valid() const {
    if (month < 1 || month > 12) return false;
    if (day < 1 || day > days_in_month(year, month)) return false;
    return true;
}

// Howard Hinnant's days-from-civil algorithm.
std::int64_t Date::days_since_epoch() const {
    std::int64_t y = year;
    unsigned m = static_cast<unsigned>(month);
    unsigned d = static_cast<unsigned>(day);
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
    return buf;
}

Date Date::parse(const std::string& iso) {
    int y = 0, m = 0, d = 0;
    char extra = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%d%c", &y, &m, &d, &extra) != 3 ||
        iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw ValidationError("not an ISO-8601 date (YYYY-MM-DD): \"" + iso + "\"");
    }
    Date date{y, m, d};
    if (!date.valid()) {
        throw ValidationError("calendar-invalid date: \"" + iso + "\"");
    }
    return date;
}

double years_between(const Date& from, const Date& to) {
    return static_cast<double>(to.days_since_epoch() - from.days_since_epoch()) / 365.2425;
}

bool is_valid_sentiment(int code) {
    return code == 1 || code == 2 || code == 3 || code == 5;
}

}  // namespace bundlegen
