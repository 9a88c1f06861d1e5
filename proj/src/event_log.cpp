#include "shelving/event_log.hpp"

#include <charconv>
#include <fstream>
#include <limits>
#include <sstream>

namespace shelving
{

char const* to_string(EventKind kind)
{
    switch (kind)
    {
        case EventKind::Hit: return "Hit";
        case EventKind::WeakEdgeCrossing: return "WeakEdgeCrossing";
        case EventKind::EpochStart: return "EpochStart";
    }
    return "?";
}

EventRecord make_record(double time, EventKind kind, std::uint64_t epoch,
                        ComponentLabel const& label, double aux)
{
    EventRecord r;
    r.time = time;
    r.kind = kind;
    r.epoch = epoch;
    r.atom = label.atom;
    r.clicks = label.clicks;
    r.strong = label.photons.strong_count;
    r.weak = label.photons.weak_count;
    r.aux = aux;
    return r;
}

std::string format_double(double value)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string serialize_log(EventLog const& log)
{
    std::string out;
    out.reserve(64 * (log.records.size() + 1));
    out += kLogHeader;
    out += '\n';
    for (auto const& r : log.records)
    {
        out += format_double(r.time);
        out += '\t';
        out += to_string(r.kind);
        out += '\t';
        out += std::to_string(r.epoch);
        out += '\t';
        out += to_string(r.atom);
        out += '\t';
        out += std::to_string(r.clicks);
        out += '\t';
        out += std::to_string(r.strong);
        out += '\t';
        out += std::to_string(r.weak);
        out += '\t';
        out += format_double(r.aux);
        out += '\n';
    }
    return out;
}

namespace
{

[[noreturn]] void bad_line(std::size_t line, std::string const& why)
{
    throw Error(ErrorCode::LogFormat, "line " + std::to_string(line) + ": " + why);
}

template <class T>
T parse_number(std::string_view field, std::size_t line)
{
    T value{};
    auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
    {
        bad_line(line, "malformed number '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

EventLog parse_log(std::string_view text)
{
    EventLog log;
    std::size_t line_no = 0;
    bool saw_header = false;
    while (!text.empty())
    {
        auto const nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!saw_header)
        {
            if (line != kLogHeader)
            {
                bad_line(line_no, "missing or unsupported header");
            }
            saw_header = true;
            continue;
        }
        if (line.empty())
        {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (true)
        {
            auto const tab = line.find('\t', pos);
            fields.push_back(line.substr(pos, tab == std::string_view::npos ? tab : tab - pos));
            if (tab == std::string_view::npos)
            {
                break;
            }
            pos = tab + 1;
        }
        if (fields.size() != 8)
        {
            bad_line(line_no, "expected 8 tab-separated fields");
        }
        EventRecord r;
        r.time = parse_number<double>(fields[0], line_no);
        if (fields[1] == "Hit")
            r.kind = EventKind::Hit;
        else if (fields[1] == "WeakEdgeCrossing")
            r.kind = EventKind::WeakEdgeCrossing;
        else if (fields[1] == "EpochStart")
            r.kind = EventKind::EpochStart;
        else
            bad_line(line_no, "unknown event kind '" + std::string(fields[1]) + "'");
        r.epoch = parse_number<std::uint64_t>(fields[2], line_no);
        if (fields[3] == "A0")
            r.atom = AtomLevel::Ground0;
        else if (fields[3] == "A1")
            r.atom = AtomLevel::Strong1;
        else if (fields[3] == "A2")
            r.atom = AtomLevel::Weak2;
        else
            bad_line(line_no, "unknown atom level '" + std::string(fields[3]) + "'");
        r.clicks = parse_number<std::uint32_t>(fields[4], line_no);
        r.strong = parse_number<std::uint32_t>(fields[5], line_no);
        r.weak = parse_number<std::uint32_t>(fields[6], line_no);
        r.aux = parse_number<double>(fields[7], line_no);
        log.records.push_back(r);
    }
    if (!saw_header)
    {
        throw Error(ErrorCode::LogFormat, "empty input");
    }
    return log;
}

void write_log(EventLog const& log, std::filesystem::path const& path)
{
    std::ofstream os(path, std::ios::binary);
    if (!os)
    {
        throw std::runtime_error("cannot open " + path.string() + " for writing");
    }
    os << serialize_log(log);
    if (!os)
    {
        throw std::runtime_error("failed writing " + path.string());
    }
}

EventLog read_log(std::filesystem::path const& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
    {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_log(ss.str());
}

void validate_log(EventLog const& log)
{
    double last_time = -std::numeric_limits<double>::infinity();
    std::uint64_t last_epoch = 0;
    std::int64_t started = -1;
    for (std::size_t i = 0; i < log.records.size(); ++i)
    {
        auto const& r = log.records[i];
        if (r.time < last_time)
        {
            throw Error(ErrorCode::LogFormat, "time decreases at record " + std::to_string(i));
        }
        if (r.epoch < last_epoch)
        {
            throw Error(ErrorCode::LogFormat, "epoch decreases at record " + std::to_string(i));
        }
        if (r.kind == EventKind::EpochStart)
        {
            if (static_cast<std::int64_t>(r.epoch) <= started)
            {
                throw Error(ErrorCode::LogFormat,
                            "second EpochStart for epoch " + std::to_string(r.epoch));
            }
            started = static_cast<std::int64_t>(r.epoch);
        }
        last_time = r.time;
        last_epoch = r.epoch;
    }
}

}  // namespace shelving
