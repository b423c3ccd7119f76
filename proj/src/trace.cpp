#include "mpsim/trace.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

namespace mpsim {

namespace {

constexpr std::array<std::string_view, 16> kKindNames = {
    "CYCLE", "SYNC_TX", "SYNC_RX", "SYNC_MISS", "DESYNC", "TX", "RX", "FB_SAMPLE",
    "EST", "DECISION", "APPLY", "POSE", "ESTOP", "ESTOP_APPLY", "COMPLETE", "WATCHDOG",
};

template <typename T>
T parse_int(std::string_view s, const char* what)
{
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw TraceError(std::string("bad ") + what + " field '" + std::string(s) + "'");
    return v;
}

double parse_double(std::string_view s)
{
    if (s.empty())
        return kNoValue;
    double v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw TraceError("bad numeric field '" + std::string(s) + "'");
    return v;
}

}  // namespace

std::string_view to_string(TraceKind k) { return kKindNames.at(static_cast<std::size_t>(k)); }

std::optional<TraceKind> trace_kind_from_string(std::string_view s)
{
    for (std::size_t i = 0; i < kKindNames.size(); ++i)
        if (kKindNames[i] == s)
            return static_cast<TraceKind>(i);
    return std::nullopt;
}

std::string format_number(double v)
{
    if (std::isnan(v))
        return {};
    if (v == 0.0)
        return "0";  // folds -0
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

void Trace::append(const TraceRow& row)
{
    if (!rows_.empty() && row.time < rows_.back().time)
        throw TraceError("trace row at " + std::to_string(row.time.ticks) + " us precedes previous row at " +
                         std::to_string(rows_.back().time.ticks) + " us");
    rows_.push_back(row);
}

void Trace::write_csv(std::ostream& out) const
{
    out << kHeader << '\n';
    std::string line;
    for (const TraceRow& r : rows_) {
        line.clear();
        line += std::to_string(r.time.ticks);
        line += ',';
        line += std::to_string(r.cycle);
        line += ',';
        line += std::to_string(r.node);
        line += ',';
        line += to_string(r.kind);
        auto opt_int = [&](std::int64_t v) {
            line += ',';
            if (v >= 0)
                line += std::to_string(v);
        };
        opt_int(r.slot);
        opt_int(r.channel);
        opt_int(r.peer);
        opt_int(r.seq);
        for (double v : r.f) {
            line += ',';
            line += format_number(v);
        }
        line += '\n';
        out << line;
    }
}

std::string Trace::to_csv() const
{
    std::ostringstream s;
    write_csv(s);
    return s.str();
}

Trace Trace::read_csv(std::istream& in)
{
    Trace t;
    std::string line;
    if (!std::getline(in, line) || line != kHeader)
        throw TraceError("trace file does not start with the expected header");

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<std::string_view> cols;
        std::string_view rest(line);
        while (true) {
            const auto comma = rest.find(',');
            cols.push_back(rest.substr(0, comma));
            if (comma == std::string_view::npos)
                break;
            rest.remove_prefix(comma + 1);
        }
        if (cols.size() != 14)
            throw TraceError("line " + std::to_string(line_no) + ": expected 14 columns");

        TraceRow r;
        r.time = SimTime(parse_int<std::uint64_t>(cols[0], "time"));
        r.cycle = parse_int<std::uint32_t>(cols[1], "cycle");
        r.node = static_cast<NodeId>(parse_int<unsigned>(cols[2], "node"));
        auto kind = trace_kind_from_string(cols[3]);
        if (!kind)
            throw TraceError("line " + std::to_string(line_no) + ": unknown kind '" + std::string(cols[3]) + "'");
        r.kind = *kind;
        r.slot = cols[4].empty() ? -1 : parse_int<std::int32_t>(cols[4], "slot");
        r.channel = cols[5].empty() ? -1 : parse_int<std::int32_t>(cols[5], "channel");
        r.peer = cols[6].empty() ? -1 : parse_int<std::int32_t>(cols[6], "peer");
        r.seq = cols[7].empty() ? -1 : parse_int<std::int64_t>(cols[7], "seq");
        for (std::size_t i = 0; i < 6; ++i)
            r.f[i] = parse_double(cols[8 + i]);
        t.append(r);
    }
    return t;
}

}  // namespace mpsim
