#include "mfin/dates.hpp"

#include <algorithm>
#include <cstdio>

#include "mfin/errors.hpp"

namespace mfin {

// Howard Hinnant's civil-date algorithms.
Day days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<int>(doe) - 719468;
}

void civil_from_days(Day z, int& y, int& m, int& d) {
    z += 719468;
    const int era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    y = static_cast<int>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y += m <= 2;
}

static bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

static int days_in_month(int y, int m) {
    static const int n[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return n[m - 1];
}

bool parse_date(const std::string& text, Day& out) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') return false;
    for (int i : {0, 1, 2, 3, 5, 6, 8, 9})
        if (text[i] < '0' || text[i] > '9') return false;
    const int y = std::stoi(text.substr(0, 4));
    const int m = std::stoi(text.substr(5, 2));
    const int d = std::stoi(text.substr(8, 2));
    if (m < 1 || m > 12) return false;
    if (d < 1 || d > days_in_month(y, m)) return false;
    out = days_from_civil(y, m, d);
    return true;
}

std::string format_date(Day day) {
    int y, m, d;
    civil_from_days(day, y, m, d);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
    return buf;
}

Day add_years(Day day, int years) {
    int y, m, d;
    civil_from_days(day, y, m, d);
    y += years;
    d = std::min(d, days_in_month(y, m));
    return days_from_civil(y, m, d);
}

Calendar Calendar::daily_range(Day first, Day last) {
    Calendar cal;
    if (last < first) throw DataError("calendar range is empty");
    cal.days.reserve(static_cast<std::size_t>(last - first + 1));
    for (Day t = first; t <= last; ++t) cal.days.push_back(t);
    return cal;
}

int Calendar::index_of(Day day) const {
    auto it = std::lower_bound(days.begin(), days.end(), day);
    if (it == days.end() || *it != day) return -1;
    return static_cast<int>(it - days.begin());
}

int Calendar::lower_bound(Day day) const {
    auto it = std::lower_bound(days.begin(), days.end(), day);
    return static_cast<int>(it - days.begin());
}

void Calendar::validate() const {
    if (days.empty()) throw DataError("calendar is empty");
    for (std::size_t i = 1; i < days.size(); ++i)
        if (days[i] <= days[i - 1]) throw DataError("calendar not strictly increasing");
}

}  // namespace mfin
