#ifndef BUNDLEGEN_TYPES_HPP
#define BUNDLEGEN_TYPES_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace bundlegen {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Input data violates an invariant (bad record, dangling reference, ...).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

/// Calendar date (proleptic Gregorian). Stored as plain fields; arithmetic
/// goes through days_since_epoch so no timezone machinery is involved.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;

    bool valid() const;
    /// Days since 1970-01-01, negative before.
    std::int64_t days_since_epoch() const;
    std::string to_string() const;  // "YYYY-MM-DD"
    static Date parse(const std::string& iso);  // throws ValidationError

    auto operator<=>(const Date&) const = default;
};

/// Fractional years between two dates (mean Gregorian year length).
double years_between(const Date& from, const Date& to);

struct Game {
    std::string game_id;
    std::string title;
    std::vector<std::string> tags;
    std::vector<std::string> genres;
    std::vector<std::string> specs;
    double price = 0.0;
    Date release_date;
    std::optional<std::string> developer;
    std::optional<int> sentiment;  // one of {1,2,3,5} when present
};

struct UserLibrary {
    std::string user_id;
    std::map<std::string, std::int64_t> holdings;  // game_id -> playtime minutes
};

struct Bundle {
    std::string bundle_id;
    std::string name;
    std::vector<std::string> item_ids;  // ordered, duplicate-free
    double price = 0.0;
    double discount_pct = 0.0;  // [0, 100]
    std::set<std::string> purchaser_ids;
};

/// Immutable after load/validate; safe for shared read-only access.
struct Catalog {
    std::map<std::string, Game> games;
    std::vector<UserLibrary> large_users;
    std::map<std::string, Bundle> bundles;
    Date reference_date{2023, 8, 30};
};

struct GameStats {
    std::string game_id;
    std::int64_t total_playtime = 0;   // minutes summed over large_users
    std::int64_t download_count = 0;   // users holding the game
    double playtime_per_download = 0.0;
    double age_years = 0.0;
};

using GameStatsMap = std::map<std::string, GameStats>;

bool is_valid_sentiment(int code);

}  // namespace bundlegen

#endif
