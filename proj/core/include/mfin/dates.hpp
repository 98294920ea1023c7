#pragma once

#include <string>
#include <vector>

namespace mfin {

// Dates are days since 1970-01-01 (civil, no time zone). Crypto trades every
// calendar day, so a trading calendar is just a contiguous daily range.
using Day = int;

Day days_from_civil(int y, int m, int d);
void civil_from_days(Day z, int& y, int& m, int& d);

// Strict ISO-8601 YYYY-MM-DD. Rejects impossible dates ("2020-02-30").
// Returns false on any malformation.
bool parse_date(const std::string& text, Day& out);
std::string format_date(Day day);

// Same calendar day in a later year, clamping Feb 29 to Feb 28.
Day add_years(Day day, int years);

struct Calendar {
    std::vector<Day> days;  // strictly increasing, unique

    static Calendar daily_range(Day first, Day last);

    int size() const { return static_cast<int>(days.size()); }
    Day front() const { return days.front(); }
    Day back() const { return days.back(); }

    // Index of `day`, or -1 if absent.
    int index_of(Day day) const;
    // Index of the first calendar day >= `day` (size() if none).
    int lower_bound(Day day) const;

    void validate() const;  // throws DataError unless strictly increasing
};

}  // namespace mfin
