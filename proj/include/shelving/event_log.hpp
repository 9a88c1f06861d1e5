#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "shelving/core_state.hpp"

namespace shelving
{

enum class EventKind : std::uint8_t
{
    Hit,
    WeakEdgeCrossing,
    EpochStart,
};

char const* to_string(EventKind kind);

/*!
 * One line of the event log.
 *
 * Hit: the realized label; aux is the mass the target held at the hit.
 * WeakEdgeCrossing: the label on the far side of a weak-emission edge; aux
 *   is the share of the realized component's weak photon that crossed in
 *   this time bin (shares of one epoch sum to one per crossed edge).
 * EpochStart: the root label of the epoch; aux is 1.
 */
struct EventRecord
{
    double time = 0.0;
    EventKind kind = EventKind::Hit;
    std::uint64_t epoch = 0;
    AtomLevel atom = AtomLevel::Ground0;
    std::uint32_t clicks = 0;
    std::uint32_t strong = 0;
    std::uint32_t weak = 0;
    double aux = 0.0;

    bool operator==(EventRecord const&) const = default;
};

EventRecord make_record(double time, EventKind kind, std::uint64_t epoch,
                        ComponentLabel const& label, double aux);

struct EventLog
{
    std::vector<EventRecord> records;

    bool operator==(EventLog const&) const = default;
};

inline constexpr std::string_view kLogHeader = "# shelving-event-log v1";

//! Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

/*!
 * Tab-separated text: the header line, then one record per line:
 *   time  kind  epoch  atom  clicks  strong  weak  aux
 * Doubles use the shortest round-trip representation.
 */
std::string serialize_log(EventLog const& log);
EventLog parse_log(std::string_view text);

void write_log(EventLog const& log, std::filesystem::path const& path);
EventLog read_log(std::filesystem::path const& path);

//! Checks time and epoch monotonicity and one EpochStart per epoch. Throws LogFormat.
void validate_log(EventLog const& log);

}  // namespace shelving
