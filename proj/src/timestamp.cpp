#include "presy/timestamp.hpp"

#include "presy/error.hpp"

#include <fmt/core.h>

#include <charconv>

namespace presy {

using namespace std::chrono;

Timestamp system_now()
{
    return time_point_cast<milliseconds>(system_clock::now());
}

std::string format_rfc3339(Timestamp ts)
{
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const hh_mm_ss hms{ts - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}.{:03d}Z",
                       static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()),
                       static_cast<unsigned>(ymd.day()),
                       hms.hours().count(), hms.minutes().count(),
                       hms.seconds().count(), hms.subseconds().count());
}

namespace {

[[noreturn]] void bad_timestamp(std::string_view text)
{
    throw Error(Errc::corrupt_data, fmt::format("malformed timestamp '{}'", text));
}

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole)
{
    if (pos + len > text.size()) bad_timestamp(whole);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
    if (ec != std::errc{} || ptr != text.data() + pos + len) bad_timestamp(whole);
    return value;
}

void expect(std::string_view text, std::size_t pos, char c, std::string_view whole)
{
    if (pos >= text.size() || text[pos] != c) bad_timestamp(whole);
}

} // namespace

Timestamp parse_rfc3339(std::string_view text)
{
    const int y = read_int(text, 0, 4, text);
    expect(text, 4, '-', text);
    const int mo = read_int(text, 5, 2, text);
    expect(text, 7, '-', text);
    const int d = read_int(text, 8, 2, text);
    if (text.size() < 11 || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) bad_timestamp(text);
    const int h = read_int(text, 11, 2, text);
    expect(text, 13, ':', text);
    const int mi = read_int(text, 14, 2, text);
    expect(text, 16, ':', text);
    const int s = read_int(text, 17, 2, text);

    std::size_t pos = 19;
    int millis = 0;
    if (pos < text.size() && text[pos] == '.') {
        ++pos;
        int digits = 0;
        while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
            if (digits < 3) millis = millis * 10 + (text[pos] - '0');
            ++digits;
            ++pos;
        }
        if (digits == 0) bad_timestamp(text);
        for (int i = digits; i < 3; ++i) millis *= 10;
    }

    minutes offset{0};
    if (pos < text.size() && (text[pos] == 'Z' || text[pos] == 'z')) {
        ++pos;
    } else if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        const int sign = text[pos] == '-' ? -1 : 1;
        const int oh = read_int(text, pos + 1, 2, text);
        expect(text, pos + 3, ':', text);
        const int om = read_int(text, pos + 4, 2, text);
        offset = minutes{sign * (oh * 60 + om)};
        pos += 6;
    } else {
        bad_timestamp(text);
    }
    if (pos != text.size()) bad_timestamp(text);

    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) bad_timestamp(text);
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} + milliseconds{millis} - offset;
}

} // namespace presy
